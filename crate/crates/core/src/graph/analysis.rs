use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use super::{TaskGraph, TaskId, Time};

/// Maximal sets of interchangeable tasks.
///
/// Tasks are identical when weight, parents, children and every edge cost
/// agree. Inside a group the tasks are chained in topological order by
/// zero-weight virtual edges that only restrict readiness.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdenticalGroups {
    groups: Vec<Vec<TaskId>>,
    group_of: Vec<Option<usize>>,
    chain_prev: Vec<Option<TaskId>>,
}

impl IdenticalGroups {
    /// No groups at all (pruning disabled).
    pub fn none(num_tasks: usize) -> Self {
        IdenticalGroups {
            groups: Vec::new(),
            group_of: vec![None; num_tasks],
            chain_prev: vec![None; num_tasks],
        }
    }

    pub fn groups(&self) -> &[Vec<TaskId>] {
        &self.groups
    }

    pub fn group_of(&self, t: TaskId) -> Option<usize> {
        self.group_of[t]
    }

    /// Source of the virtual edge into `t`, if any.
    pub fn virtual_prev(&self, t: TaskId) -> Option<TaskId> {
        self.chain_prev[t]
    }

    /// Virtual edges `(a, b)` of every chain.
    pub fn virtual_edges(&self) -> impl Iterator<Item = (TaskId, TaskId)> + '_ {
        self.groups
            .iter()
            .flat_map(|g| g.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

pub(super) fn find_identical_groups(g: &TaskGraph) -> IdenticalGroups {
    type Signature = (Time, Vec<(TaskId, Time)>, Vec<(TaskId, Time)>);
    let n = g.num_tasks();
    let mut by_sig: BTreeMap<Signature, Vec<TaskId>> = BTreeMap::new();
    for &t in g.topo_order() {
        let mut parents = g.parents(t).to_vec();
        let mut children = g.children(t).to_vec();
        parents.sort_unstable();
        children.sort_unstable();
        by_sig.entry((g.weight(t), parents, children)).or_default().push(t);
    }
    let mut groups: Vec<Vec<TaskId>> = by_sig.into_values().filter(|v| v.len() > 1).collect();
    groups.sort_by_key(|grp| g.topo_pos(grp[0]));
    let mut group_of = vec![None; n];
    let mut chain_prev = vec![None; n];
    for (i, grp) in groups.iter().enumerate() {
        for (k, &t) in grp.iter().enumerate() {
            group_of[t] = Some(i);
            if k > 0 {
                chain_prev[t] = Some(grp[k - 1]);
            }
        }
    }
    IdenticalGroups { groups, group_of, chain_prev }
}

/// Named task-graph shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureTag {
    Independent,
    Fork,
    Join,
    ForkJoin,
    OutTree,
    InTree,
    Pipeline,
    Random,
    SeriesParallel,
    Stencil,
}

impl StructureTag {
    pub const ALL: [StructureTag; 10] = [
        StructureTag::Independent,
        StructureTag::Fork,
        StructureTag::Join,
        StructureTag::ForkJoin,
        StructureTag::OutTree,
        StructureTag::InTree,
        StructureTag::Pipeline,
        StructureTag::Random,
        StructureTag::SeriesParallel,
        StructureTag::Stencil,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StructureTag::Independent => "independent",
            StructureTag::Fork => "fork",
            StructureTag::Join => "join",
            StructureTag::ForkJoin => "fork-join",
            StructureTag::OutTree => "out-tree",
            StructureTag::InTree => "in-tree",
            StructureTag::Pipeline => "pipeline",
            StructureTag::Random => "random",
            StructureTag::SeriesParallel => "series-parallel",
            StructureTag::Stencil => "stencil",
        }
    }
}

impl fmt::Display for StructureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for StructureTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        StructureTag::ALL
            .into_iter()
            .find(|t| t.as_str() == norm || t.as_str().replace('-', "") == norm)
            .ok_or_else(|| format!("unknown structure `{s}`"))
    }
}

pub(super) fn classify(g: &TaskGraph) -> StructureTag {
    let n = g.num_tasks();
    if g.num_edges() == 0 {
        return StructureTag::Independent;
    }
    let indeg = |t: TaskId| g.parents(t).len();
    let outdeg = |t: TaskId| g.children(t).len();
    let sources: Vec<TaskId> = (0..n).filter(|&t| indeg(t) == 0).collect();
    let sinks: Vec<TaskId> = (0..n).filter(|&t| outdeg(t) == 0).collect();

    // Fork: one source feeding every other task, which are all leaves.
    if sources.len() == 1 && outdeg(sources[0]) == n - 1 && g.num_edges() == n - 1 {
        return StructureTag::Fork;
    }
    if sinks.len() == 1 && indeg(sinks[0]) == n - 1 && g.num_edges() == n - 1 {
        return StructureTag::Join;
    }
    if n >= 4 && sources.len() == 1 && sinks.len() == 1 {
        let (s, t) = (sources[0], sinks[0]);
        let middle_ok = (0..n).filter(|&x| x != s && x != t).all(|x| {
            g.parents(x) == [(s, g.edge_cost(s, x).unwrap_or(0))]
                && g.children(x).len() == 1
                && g.children(x)[0].0 == t
        });
        if middle_ok && g.num_edges() == 2 * (n - 2) {
            return StructureTag::ForkJoin;
        }
    }
    if is_pipeline(g) {
        return StructureTag::Pipeline;
    }
    if sources.len() == 1 && (0..n).all(|t| indeg(t) <= 1) {
        return StructureTag::OutTree;
    }
    if sinks.len() == 1 && (0..n).all(|t| outdeg(t) <= 1) {
        return StructureTag::InTree;
    }
    if is_stencil(g) {
        return StructureTag::Stencil;
    }
    if is_series_parallel(g) {
        return StructureTag::SeriesParallel;
    }
    StructureTag::Random
}

/// A single chain `n0 -> n1 -> ...` covering every task, plus optional
/// skips `n_i -> n_{i+2}`.
fn is_pipeline(g: &TaskGraph) -> bool {
    let n = g.num_tasks();
    if n < 3 {
        return false;
    }
    let order = g.topo_order();
    let mut chain_edges = 0;
    for w in order.windows(2) {
        if g.edge_cost(w[0], w[1]).is_none() {
            return false;
        }
        chain_edges += 1;
    }
    let pos = |t: TaskId| g.topo_pos(t);
    let mut skips = 0;
    for e in g.edges() {
        match pos(e.dst) - pos(e.src) {
            1 => {}
            2 => skips += 1,
            _ => return false,
        }
    }
    chain_edges + skips == g.num_edges()
}

/// Rows given by longest-path depth, columns by topological position inside
/// a row. Every row but the last has the same width `m >= 2`; each task below
/// the first row has the task directly above as a parent and no parent more
/// than one column away.
fn is_stencil(g: &TaskGraph) -> bool {
    let n = g.num_tasks();
    let mut depth = vec![0usize; n];
    for &t in g.topo_order() {
        depth[t] = g.parents(t).iter().map(|&(p, _)| depth[p] + 1).max().unwrap_or(0);
    }
    let rows = depth.iter().max().map_or(0, |d| d + 1);
    if rows < 2 {
        return false;
    }
    let mut layer: Vec<Vec<TaskId>> = vec![Vec::new(); rows];
    for &t in g.topo_order() {
        layer[depth[t]].push(t);
    }
    let m = layer[0].len();
    if m < 2 {
        return false;
    }
    if layer[..rows - 1].iter().any(|l| l.len() != m) || layer[rows - 1].len() > m {
        return false;
    }
    let mut col = vec![0usize; n];
    for l in &layer {
        for (j, &t) in l.iter().enumerate() {
            col[t] = j;
        }
    }
    for r in 1..rows {
        for &t in &layer[r] {
            let above = layer[r - 1][col[t]];
            if g.edge_cost(above, t).is_none() {
                return false;
            }
            for &(p, _) in g.parents(t) {
                if depth[p] + 1 != r || col[p].abs_diff(col[t]) > 1 {
                    return false;
                }
            }
        }
    }
    true
}

/// Two-terminal series-parallel test by repeated series and parallel
/// reductions on the edge multigraph.
fn is_series_parallel(g: &TaskGraph) -> bool {
    let n = g.num_tasks();
    let sources: Vec<TaskId> = (0..n).filter(|&t| g.parents(t).is_empty()).collect();
    let sinks: Vec<TaskId> = (0..n).filter(|&t| g.children(t).is_empty()).collect();
    if n < 2 || sources.len() != 1 || sinks.len() != 1 {
        return false;
    }
    let (s, t) = (sources[0], sinks[0]);
    // Parallel edges collapse immediately, so a set of successor/predecessor
    // pairs is enough.
    let mut succ: Vec<HashMap<TaskId, ()>> = vec![HashMap::new(); n];
    let mut pred: Vec<HashMap<TaskId, ()>> = vec![HashMap::new(); n];
    for e in g.edges() {
        succ[e.src].insert(e.dst, ());
        pred[e.dst].insert(e.src, ());
    }
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for v in 0..n {
            if !alive[v] || v == s || v == t || pred[v].len() != 1 || succ[v].len() != 1 {
                continue;
            }
            let u = *pred[v].keys().next().unwrap();
            let w = *succ[v].keys().next().unwrap();
            succ[u].remove(&v);
            pred[w].remove(&v);
            succ[u].insert(w, ());
            pred[w].insert(u, ());
            succ[v].clear();
            pred[v].clear();
            alive[v] = false;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let remaining = alive.iter().filter(|&&a| a).count();
    remaining == 2 && succ[s].len() == 1 && succ[s].contains_key(&t)
}
