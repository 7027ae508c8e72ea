//! Complete schedules: validity, length, reversal and the list-scheduling
//! heuristic used as an upper bound.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{ProcId, TaskGraph, TaskId, Time};

/// A complete assignment of every task to a processor and start time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    proc: Vec<ProcId>,
    start: Vec<Time>,
    num_procs: usize,
}

/// A broken constraint found by [`Schedule::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The schedule does not cover exactly the tasks of the graph.
    Coverage { expected: usize, found: usize },
    /// A task sits on a processor outside `0..num_procs`.
    ProcessorRange { task: TaskId, proc: ProcId },
    /// Two tasks overlap on one processor.
    Processor { proc: ProcId, first: TaskId, second: TaskId, first_end: Time, second_start: Time },
    /// A task starts before its data is available.
    Precedence { src: TaskId, dst: TaskId, ready: Time, start: Time },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Coverage { expected, found } => {
                write!(f, "coverage: expected {expected} tasks, found {found}")
            }
            Violation::ProcessorRange { task, proc } => {
                write!(f, "processor range: task {task} on processor {proc}")
            }
            Violation::Processor { proc, first, second, first_end, second_start } => write!(
                f,
                "processor constraint: on p{proc} task {second} starts at {second_start} before task {first} ends at {first_end}"
            ),
            Violation::Precedence { src, dst, ready, start } => write!(
                f,
                "precedence constraint: edge {src} -> {dst} makes data ready at {ready} but task {dst} starts at {start}"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("schedule is not valid for the reversed graph: {0}")]
    InvalidForReversed(Violation),
}

impl Schedule {
    pub fn new(proc: Vec<ProcId>, start: Vec<Time>, num_procs: usize) -> Self {
        assert_eq!(proc.len(), start.len());
        Schedule { proc, start, num_procs }
    }

    pub fn num_tasks(&self) -> usize {
        self.proc.len()
    }

    pub fn num_procs(&self) -> usize {
        self.num_procs
    }

    pub fn proc(&self, t: TaskId) -> ProcId {
        self.proc[t]
    }

    pub fn start(&self, t: TaskId) -> Time {
        self.start[t]
    }

    pub fn finish(&self, t: TaskId, g: &TaskGraph) -> Time {
        self.start[t] + g.weight(t)
    }

    /// Makespan: latest finish time over all tasks, 0 for an empty graph.
    pub fn length(&self, g: &TaskGraph) -> Time {
        (0..self.num_tasks()).map(|t| self.finish(t, g)).max().unwrap_or(0)
    }

    /// Tasks on each processor sorted by start time.
    pub fn processor_orders(&self) -> Vec<Vec<TaskId>> {
        let mut orders = vec![Vec::new(); self.num_procs];
        for t in 0..self.num_tasks() {
            if self.proc[t] < self.num_procs {
                orders[self.proc[t]].push(t);
            }
        }
        for o in &mut orders {
            o.sort_by_key(|&t| (self.start[t], t));
        }
        orders
    }

    /// Every violated constraint; empty iff the schedule is valid.
    pub fn validate(&self, g: &TaskGraph) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.num_tasks() != g.num_tasks() {
            out.push(Violation::Coverage { expected: g.num_tasks(), found: self.num_tasks() });
            return out;
        }
        for t in 0..self.num_tasks() {
            if self.proc[t] >= self.num_procs {
                out.push(Violation::ProcessorRange { task: t, proc: self.proc[t] });
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (p, order) in self.processor_orders().iter().enumerate() {
            for (i, &a) in order.iter().enumerate() {
                for &b in &order[i + 1..] {
                    let a_end = self.finish(a, g);
                    if self.start[b] < a_end {
                        out.push(Violation::Processor {
                            proc: p,
                            first: a,
                            second: b,
                            first_end: a_end,
                            second_start: self.start[b],
                        });
                    }
                }
            }
        }
        for e in g.edges() {
            let comm = if self.proc[e.src] == self.proc[e.dst] { 0 } else { e.cost };
            let ready = self.finish(e.src, g) + comm;
            if self.start[e.dst] < ready {
                out.push(Violation::Precedence { src: e.src, dst: e.dst, ready, start: self.start[e.dst] });
            }
        }
        out
    }

    pub fn is_valid(&self, g: &TaskGraph) -> bool {
        self.validate(g).is_empty()
    }

    /// As-soon-as-possible start times for fixed per-processor orders.
    ///
    /// Returns `None` when the orders contradict the precedence constraints.
    pub fn from_orders(g: &TaskGraph, orders: &[Vec<TaskId>]) -> Option<Schedule> {
        let n = g.num_tasks();
        let mut proc = vec![usize::MAX; n];
        for (p, o) in orders.iter().enumerate() {
            for &t in o {
                proc[t] = p;
            }
        }
        if proc.contains(&usize::MAX) {
            return None;
        }
        let mut start = vec![0; n];
        let mut placed = vec![false; n];
        let mut cursor = vec![0usize; orders.len()];
        let mut avail = vec![0 as Time; orders.len()];
        let mut remaining = n;
        while remaining > 0 {
            let mut progress = false;
            for p in 0..orders.len() {
                while let Some(&t) = orders[p].get(cursor[p]) {
                    if !g.parents(t).iter().all(|&(q, _)| placed[q]) {
                        break;
                    }
                    let drt = g
                        .parents(t)
                        .iter()
                        .map(|&(q, c)| start[q] + g.weight(q) + if proc[q] == p { 0 } else { c })
                        .max()
                        .unwrap_or(0);
                    start[t] = drt.max(avail[p]);
                    avail[p] = start[t] + g.weight(t);
                    placed[t] = true;
                    cursor[p] += 1;
                    remaining -= 1;
                    progress = true;
                }
            }
            if !progress {
                return None;
            }
        }
        Some(Schedule::new(proc, start, orders.len()))
    }

    /// Turns a valid schedule of `g.reversed()` into a schedule of `g` with
    /// the same length by reversing every processor's task order and
    /// restarting each task as early as possible.
    pub fn reverse(&self, g: &TaskGraph) -> Result<Schedule, ScheduleError> {
        let reversed = g.reversed();
        if let Some(v) = self.validate(&reversed).into_iter().next() {
            return Err(ScheduleError::InvalidForReversed(v));
        }
        let orders: Vec<Vec<TaskId>> = self
            .processor_orders()
            .into_iter()
            .map(|mut o| {
                o.reverse();
                o
            })
            .collect();
        Ok(Schedule::from_orders(g, &orders).expect("reversed order of a valid schedule is acyclic"))
    }

    /// Writes the schedule file: a `# procs=<n> length=<L>` header followed by
    /// `<task> <proc> <start>` lines in task order.
    pub fn to_text(&self, g: &TaskGraph) -> String {
        let mut out = format!("# procs={} length={}\n", self.num_procs, self.length(g));
        for t in 0..self.num_tasks() {
            writeln!(out, "{} {} {}", t, self.proc[t], self.start[t]).unwrap();
        }
        out
    }

    /// Parses a schedule file. Task ids must be dense and sorted.
    pub fn from_text(text: &str) -> Result<Schedule, ScheduleError> {
        let mut num_procs = None;
        let mut proc = Vec::new();
        let mut start = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split_whitespace() {
                    if let Some(v) = field.strip_prefix("procs=") {
                        num_procs = Some(v.parse::<usize>().map_err(|_| ScheduleError::Format {
                            line: line_no,
                            msg: format!("bad processor count `{v}`"),
                        })?);
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| ScheduleError::Format { line: line_no, msg: msg.to_string() };
            if fields.len() != 3 {
                return Err(bad("expected `<task> <proc> <start>`"));
            }
            let t: usize = fields[0].parse().map_err(|_| bad("bad task id"))?;
            if t != proc.len() {
                return Err(bad("task ids must be dense and sorted"));
            }
            proc.push(fields[1].parse().map_err(|_| bad("bad processor"))?);
            start.push(fields[2].parse().map_err(|_| bad("bad start time"))?);
        }
        let num_procs = num_procs.ok_or(ScheduleError::Format { line: 1, msg: "missing `# procs=` header".into() })?;
        Ok(Schedule::new(proc, start, num_procs))
    }
}

/// Bottom-level list scheduling: the ready task with the greatest bottom
/// level (ties by topological position) goes to the processor where it can
/// start earliest (ties by lowest index).
pub fn heuristic_schedule(g: &TaskGraph, num_procs: usize) -> Schedule {
    assert!(num_procs >= 1);
    let n = g.num_tasks();
    let mut proc = vec![0; n];
    let mut start = vec![0; n];
    let mut placed = vec![false; n];
    let mut waiting: Vec<usize> = (0..n).map(|t| g.parents(t).len()).collect();
    let mut ready: Vec<TaskId> = (0..n).filter(|&t| waiting[t] == 0).collect();
    let mut avail = vec![0 as Time; num_procs];
    while !ready.is_empty() {
        let (idx, &t) = ready
            .iter()
            .enumerate()
            .max_by_key(|&(_, &t)| (g.bl(t), std::cmp::Reverse(g.topo_pos(t))))
            .unwrap();
        ready.swap_remove(idx);
        let (best_p, best_start) = (0..num_procs)
            .map(|p| {
                let drt = g
                    .parents(t)
                    .iter()
                    .map(|&(q, c)| start[q] + g.weight(q) + if proc[q] == p { 0 } else { c })
                    .max()
                    .unwrap_or(0);
                (p, drt.max(avail[p]))
            })
            .min_by_key(|&(p, s)| (s, p))
            .unwrap();
        proc[t] = best_p;
        start[t] = best_start;
        avail[best_p] = best_start + g.weight(t);
        placed[t] = true;
        for &(c, _) in g.children(t) {
            waiting[c] -= 1;
            if waiting[c] == 0 {
                ready.push(c);
            }
        }
    }
    debug_assert!(placed.iter().all(|&p| p));
    Schedule::new(proc, start, num_procs)
}
