//! One entry point over both models: pruning switches, the heuristic upper
//! bound and graph reversal for join-like inputs.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::ao::{AoConfig, AoSpace, Heuristics, ProcSelect, ReadyCondition};
use crate::els::{ElsConfig, ElsSpace};
use crate::graph::{StructureTag, TaskGraph, Time};
use crate::schedule::{heuristic_schedule, Schedule, Violation};
use crate::search::{astar, Clock, SearchConfig, SearchResult, SearchStats};

pub const MAX_TASKS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Model {
    #[default]
    Ao,
    Els,
}

impl Model {
    pub const ALL: [Model; 2] = [Model::Ao, Model::Els];

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Ao => "ao",
            Model::Els => "els",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ao" => Ok(Model::Ao),
            "els" => Ok(Model::Els),
            _ => Err(format!("unknown model `{s}` (expected ao or els)")),
        }
    }
}

/// Optional pruning techniques. Parsed from `all`, `none`, or a comma list of
/// `+identical`, `+fixed-order`, `+upper-bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pruning {
    pub identical: bool,
    pub fixed_order: bool,
    pub upper_bound: bool,
}

impl Pruning {
    pub const ALL: Pruning = Pruning { identical: true, fixed_order: true, upper_bound: true };
    pub const NONE: Pruning = Pruning { identical: false, fixed_order: false, upper_bound: false };
}

impl Default for Pruning {
    fn default() -> Self {
        Pruning::ALL
    }
}

impl fmt::Display for Pruning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Pruning::ALL {
            return f.write_str("all");
        }
        if *self == Pruning::NONE {
            return f.write_str("none");
        }
        let parts: Vec<&str> = [
            (self.identical, "+identical"),
            (self.fixed_order, "+fixed-order"),
            (self.upper_bound, "+upper-bound"),
        ]
        .into_iter()
        .filter_map(|(on, s)| on.then_some(s))
        .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Pruning {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => return Ok(Pruning::ALL),
            "none" => return Ok(Pruning::NONE),
            _ => {}
        }
        let mut p = Pruning::NONE;
        for item in s.split(',') {
            match item.trim() {
                "+identical" => p.identical = true,
                "+fixed-order" => p.fixed_order = true,
                "+upper-bound" => p.upper_bound = true,
                other => return Err(format!("unknown pruning option `{other}`")),
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub model: Model,
    pub num_procs: usize,
    pub heuristics: Heuristics,
    pub pruning: Pruning,
    pub ready: ReadyCondition,
    pub select: ProcSelect,
    /// Solve join and in-tree graphs on the reversed graph.
    pub reverse_joins: bool,
    pub timeout: Option<Duration>,
    pub clock: Clock,
    pub memory_limit: Option<usize>,
    /// Only meaningful for ELS; AO has no duplicates to detect.
    pub duplicate_detection: bool,
}

impl SolverConfig {
    pub fn new(model: Model, num_procs: usize) -> Self {
        SolverConfig { model, num_procs, ..SolverConfig::default() }
    }

    pub fn ao_config(&self) -> AoConfig {
        AoConfig {
            heuristics: self.heuristics,
            ready: self.ready,
            select: self.select,
            identical: self.pruning.identical,
            fixed_order: self.pruning.fixed_order,
        }
    }

    pub fn els_config(&self) -> ElsConfig {
        ElsConfig { identical: self.pruning.identical, fixed_order: self.pruning.fixed_order }
    }

    fn search_config(&self, g: &TaskGraph) -> SearchConfig {
        let mut cfg = SearchConfig {
            timeout: self.timeout,
            clock: self.clock,
            memory_limit: self.memory_limit,
            duplicate_detection: self.duplicate_detection,
            ..SearchConfig::default()
        };
        if self.pruning.upper_bound {
            let s = heuristic_schedule(g, self.num_procs);
            let len = s.length(g);
            cfg = cfg.with_upper_bound(s, len);
        }
        cfg
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            model: Model::Ao,
            num_procs: 2,
            heuristics: Heuristics::BASELINE,
            pruning: Pruning::ALL,
            ready: ReadyCondition::Lookahead,
            select: ProcSelect::InOrder,
            reverse_joins: true,
            timeout: Some(Duration::from_secs(120)),
            clock: Clock::Wall,
            memory_limit: None,
            duplicate_detection: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Valid for the input graph; `None` unless the search finished.
    pub schedule: Option<Schedule>,
    pub length: Option<Time>,
    pub stats: SearchStats,
    /// Whether the search ran on the reversed graph.
    pub reversed: bool,
    /// AO ordering steps dropped as dead ends (simple ready condition).
    pub invalid_discarded: u64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("graph has {0} tasks; the search models support at most {MAX_TASKS}")]
    TooManyTasks(usize),
    #[error("need at least one processor")]
    NoProcessors,
    #[error("solver produced an invalid schedule: {0}")]
    Invalid(Violation),
}

/// Whether `g` is routed through the reversed graph under `reverse_joins`.
pub fn wants_reversal(g: &TaskGraph) -> bool {
    matches!(g.classify(), StructureTag::Join | StructureTag::InTree)
}

pub fn solve(g: &TaskGraph, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    if g.num_tasks() > MAX_TASKS {
        return Err(SolveError::TooManyTasks(g.num_tasks()));
    }
    if cfg.num_procs == 0 {
        return Err(SolveError::NoProcessors);
    }
    let reversed = cfg.reverse_joins && wants_reversal(g);
    let work = if reversed { g.reversed() } else { g.clone() };
    let (r, invalid) = run(&work, cfg);
    let schedule = match r.schedule {
        Some(s) if reversed => Some(s.reverse(g).expect("search schedules are valid")),
        other => other,
    };
    if let Some(s) = &schedule {
        if let Some(v) = s.validate(g).into_iter().next() {
            return Err(SolveError::Invalid(v));
        }
    }
    Ok(Solution { length: schedule.as_ref().map(|s| s.length(g)), schedule, stats: r.stats, reversed, invalid_discarded: invalid })
}

fn run(g: &TaskGraph, cfg: &SolverConfig) -> (SearchResult, u64) {
    let search = cfg.search_config(g);
    match cfg.model {
        Model::Ao => {
            let space = AoSpace::new(g, cfg.num_procs, cfg.ao_config());
            let r = astar(&space, &search);
            (r, space.invalid_discarded())
        }
        Model::Els => (astar(&ElsSpace::new(g, cfg.num_procs, cfg.els_config()), &search), 0),
    }
}
