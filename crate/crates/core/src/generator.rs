//! Seeded task-graph generator covering the ten structure families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{StructureTag, TaskGraph, TaskId, Time};

const ATTEMPTS: usize = 2000;
const CCR_TOLERANCE: f64 = 0.1;
const RANDOM_EDGE_PROB: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub structure: StructureTag,
    pub num_tasks: usize,
    pub target_ccr: f64,
    pub seed: u64,
    pub weight_range: (Time, Time),
}

impl GenSpec {
    pub fn new(structure: StructureTag, num_tasks: usize, target_ccr: f64, seed: u64) -> Self {
        GenSpec { structure, num_tasks, target_ccr, seed, weight_range: (1, 10) }
    }

    /// `<structure>_<n>_<ccr>_<seed>`
    pub fn stem(&self) -> String {
        format!("{}_{}_{}_{}", self.structure.as_str(), self.num_tasks, self.target_ccr, self.seed)
    }

    pub fn file_name(&self) -> String {
        format!("{}.dot", self.stem())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("a {0} graph needs at least {1} tasks")]
    TooFewTasks(&'static str, usize),
    #[error("target CCR must be positive, got {0}")]
    BadCcr(f64),
    #[error("weight range {0}..{1} is empty or contains zero")]
    BadWeights(Time, Time),
    #[error("could not reach CCR {0} within tolerance")]
    CcrUnreachable(f64),
    #[error("no {0} graph with {1} tasks found")]
    NoShape(&'static str, usize),
}

/// Smallest task count for which a structure is distinguishable from the
/// others.
pub fn min_tasks(s: StructureTag) -> usize {
    match s {
        StructureTag::Independent => 1,
        StructureTag::Fork => 2,
        StructureTag::Join | StructureTag::Pipeline => 3,
        StructureTag::ForkJoin
        | StructureTag::OutTree
        | StructureTag::InTree
        | StructureTag::SeriesParallel
        | StructureTag::Stencil => 4,
        StructureTag::Random => 5,
    }
}

pub fn generate(spec: &GenSpec) -> Result<TaskGraph, GenError> {
    let n = spec.num_tasks;
    let tag = spec.structure;
    if n < min_tasks(tag) {
        return Err(GenError::TooFewTasks(tag.as_str(), min_tasks(tag)));
    }
    if tag != StructureTag::Independent && !(spec.target_ccr > 0.0 && spec.target_ccr.is_finite()) {
        return Err(GenError::BadCcr(spec.target_ccr));
    }
    let (lo, hi) = spec.weight_range;
    if lo == 0 || lo > hi {
        return Err(GenError::BadWeights(lo, hi));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut shape = None;
    for _ in 0..ATTEMPTS {
        let edges = topology(tag, n, &mut rng);
        let probe = TaskGraph::from_weights(&vec![1; n], &with_cost(&edges, 1)).expect("generated topology is a DAG");
        if probe.classify() == tag {
            shape = Some(edges);
            break;
        }
    }
    let edges = shape.ok_or(GenError::NoShape(tag.as_str(), n))?;

    for _ in 0..ATTEMPTS {
        let weights: Vec<Time> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
        let Some(costs) = edge_costs(edges.len(), &weights, spec.target_ccr, &mut rng) else {
            continue;
        };
        let tasks = weights.iter().enumerate().map(|(i, &w)| (format!("t{i}"), w)).collect();
        let e = edges.iter().zip(&costs).map(|(&(a, b), &c)| (a, b, c)).collect();
        return Ok(TaskGraph::new(spec.stem(), tasks, e).expect("generated graph is valid"));
    }
    Err(GenError::CcrUnreachable(spec.target_ccr))
}

fn with_cost(edges: &[(TaskId, TaskId)], c: Time) -> Vec<(TaskId, TaskId, Time)> {
    edges.iter().map(|&(a, b)| (a, b, c)).collect()
}

/// Scales random base costs to the target total, then corrects rounding one
/// edge at a time. `None` when the weights make the target unreachable.
fn edge_costs(m: usize, weights: &[Time], ccr: f64, rng: &mut ChaCha8Rng) -> Option<Vec<Time>> {
    if m == 0 {
        return Some(Vec::new());
    }
    let total_w: f64 = weights.iter().map(|&w| f64::from(w)).sum();
    let target = (ccr * total_w).round();
    if (target / total_w - ccr).abs() > CCR_TOLERANCE * ccr {
        return None;
    }
    let base: Vec<f64> = (0..m).map(|_| f64::from(rng.gen_range(1u32..=10))).collect();
    let scale = target / base.iter().sum::<f64>();
    let mut costs: Vec<i64> = base.iter().map(|b| (b * scale).round() as i64).collect();
    let mut diff = target as i64 - costs.iter().sum::<i64>();
    let mut i = 0;
    while diff != 0 {
        let step = diff.signum();
        if costs[i % m] + step >= 0 {
            costs[i % m] += step;
            diff -= step;
        }
        i += 1;
    }
    Some(costs.into_iter().map(|c| c as Time).collect())
}

fn topology(tag: StructureTag, n: usize, rng: &mut ChaCha8Rng) -> Vec<(TaskId, TaskId)> {
    match tag {
        StructureTag::Independent => Vec::new(),
        StructureTag::Fork => (1..n).map(|i| (0, i)).collect(),
        StructureTag::Join => (0..n - 1).map(|i| (i, n - 1)).collect(),
        StructureTag::ForkJoin => (1..n - 1).flat_map(|i| [(0, i), (i, n - 1)]).collect(),
        StructureTag::OutTree => out_tree(n, rng),
        StructureTag::InTree => {
            let mut e: Vec<_> = out_tree(n, rng).into_iter().map(|(a, b)| (n - 1 - b, n - 1 - a)).collect();
            e.sort_unstable();
            e
        }
        StructureTag::Pipeline => {
            let mut e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            for i in 0..n.saturating_sub(2) {
                if rng.gen_bool(RANDOM_EDGE_PROB) {
                    e.push((i, i + 2));
                }
            }
            e.sort_unstable();
            e
        }
        StructureTag::Random => layered(n, rng),
        StructureTag::SeriesParallel => series_parallel(n, rng),
        StructureTag::Stencil => stencil(n, rng),
    }
}

fn out_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(TaskId, TaskId)> {
    (1..n).map(|i| (rng.gen_range(0..i), i)).collect()
}

fn layered(n: usize, rng: &mut ChaCha8Rng) -> Vec<(TaskId, TaskId)> {
    let num_layers = rng.gen_range(2..=(n as f64).sqrt().ceil() as usize + 1).min(n);
    let mut layer_of: Vec<usize> = (0..n).map(|i| if i < num_layers { i } else { rng.gen_range(0..num_layers) }).collect();
    layer_of.sort_unstable();
    let mut edges = Vec::new();
    for b in 0..n {
        if layer_of[b] == 0 {
            continue;
        }
        let above: Vec<TaskId> = (0..n).filter(|&a| layer_of[a] + 1 == layer_of[b]).collect();
        let mut any = false;
        for &a in &above {
            if rng.gen_bool(RANDOM_EDGE_PROB) {
                edges.push((a, b));
                any = true;
            }
        }
        if !any {
            edges.push((above[rng.gen_range(0..above.len())], b));
        }
    }
    edges.sort_unstable();
    edges
}

/// Grows a two-terminal graph from one edge by random series and parallel
/// insertions, then renumbers tasks in topological order.
fn series_parallel(n: usize, rng: &mut ChaCha8Rng) -> Vec<(TaskId, TaskId)> {
    let mut edges = vec![(0usize, 1usize)];
    let mut count = 2;
    while count < n {
        let k = rng.gen_range(0..edges.len());
        let (u, v) = edges[k];
        let w = count;
        count += 1;
        if rng.gen_bool(0.5) {
            edges.swap_remove(k);
        }
        edges.push((u, w));
        edges.push((w, v));
    }
    let order = topo(count, &edges);
    let mut pos = vec![0; count];
    for (i, &t) in order.iter().enumerate() {
        pos[t] = i;
    }
    let mut e: Vec<_> = edges.into_iter().map(|(a, b)| (pos[a], pos[b])).collect();
    e.sort_unstable();
    e.dedup();
    e
}

fn topo(n: usize, edges: &[(TaskId, TaskId)]) -> Vec<TaskId> {
    let mut indeg = vec![0; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut ready: Vec<TaskId> = (0..n).filter(|&t| indeg[t] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(t) = ready.pop() {
        out.push(t);
        for &(a, b) in edges {
            if a == t {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    out
}

/// Row-major grid `m` wide; each task below the first row depends on the
/// task above and, at random, its diagonal neighbours above.
fn stencil(n: usize, rng: &mut ChaCha8Rng) -> Vec<(TaskId, TaskId)> {
    let m = ((n as f64).sqrt().round() as usize).max(2);
    let mut edges = Vec::new();
    for t in m..n {
        let (r, c) = (t / m, t % m);
        let above = |cc: usize| (r - 1) * m + cc;
        edges.push((above(c), t));
        if c > 0 && rng.gen_bool(0.5) {
            edges.push((above(c - 1), t));
        }
        if c + 1 < m && rng.gen_bool(0.5) {
            edges.push((above(c + 1), t));
        }
    }
    edges.sort_unstable();
    edges
}
