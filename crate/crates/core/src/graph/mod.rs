//! Weighted task graphs and the level tables derived from them.
//!
//! A [`TaskGraph`] is immutable once built: task weights, communication
//! costs, a deterministic topological order and the plain top/bottom levels
//! are all fixed at construction.

mod analysis;
mod dot;

use std::collections::BinaryHeap;
use std::cmp::Reverse;

use thiserror::Error;

pub use analysis::{IdenticalGroups, StructureTag};
pub use dot::{parse_graph, serialize_graph};

/// Dense task index, `0..num_tasks`.
pub type TaskId = usize;

/// Processor index, `0..num_procs`.
pub type ProcId = usize;

/// Integral time unit used for weights, costs and start times.
pub type Time = u32;

/// A communication edge `src -> dst` with its cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: TaskId,
    pub dst: TaskId,
    pub cost: Time,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("task `{0}` has non-positive weight {1}")]
    NonPositiveWeight(String, i64),
    #[error("edge {0} -> {1} has negative cost {2}")]
    NegativeCost(String, String, i64),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("duplicate task `{0}`")]
    DuplicateTask(String),
    #[error("edge refers to undefined task `{0}`")]
    UndefinedEndpoint(String),
    #[error("graph contains a cycle through `{0}`")]
    Cycle(String),
    #[error("weights or costs overflow the time range")]
    Overflow,
}

/// Immutable directed acyclic task graph.
#[derive(Debug, Clone)]
pub struct TaskGraph {
    name: String,
    labels: Vec<String>,
    weights: Vec<Time>,
    edges: Vec<Edge>,
    parents: Vec<Vec<(TaskId, Time)>>,
    children: Vec<Vec<(TaskId, Time)>>,
    topo: Vec<TaskId>,
    topo_pos: Vec<usize>,
    levels: LevelTable,
}

/// Plain (communication-free) node levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    /// Longest computation path ending at a task, excluding its own weight.
    pub tl: Vec<Time>,
    /// Longest computation path starting at a task, including its own weight.
    pub bl: Vec<Time>,
}

impl TaskGraph {
    /// Builds a graph from labelled tasks and edges given by index.
    ///
    /// Task ids are assigned in the order of `tasks`.
    pub fn new(
        name: impl Into<String>,
        tasks: Vec<(String, Time)>,
        edges: Vec<(TaskId, TaskId, Time)>,
    ) -> Result<Self, GraphError> {
        let n = tasks.len();
        let (labels, weights): (Vec<String>, Vec<Time>) = tasks.into_iter().unzip();
        for (label, &w) in labels.iter().zip(&weights) {
            if w == 0 {
                return Err(GraphError::NonPositiveWeight(label.clone(), 0));
            }
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut sorted: Vec<Edge> = Vec::with_capacity(edges.len());
        for &(src, dst, cost) in &edges {
            if src >= n {
                return Err(GraphError::UndefinedEndpoint(src.to_string()));
            }
            if dst >= n {
                return Err(GraphError::UndefinedEndpoint(dst.to_string()));
            }
            if src == dst {
                return Err(GraphError::Cycle(labels[src].clone()));
            }
            sorted.push(Edge { src, dst, cost });
        }
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0].src == pair[1].src && pair[0].dst == pair[1].dst {
                return Err(GraphError::DuplicateEdge(
                    labels[pair[0].src].clone(),
                    labels[pair[0].dst].clone(),
                ));
            }
        }
        let total: u64 = weights.iter().map(|&w| u64::from(w)).sum::<u64>()
            + sorted.iter().map(|e| u64::from(e.cost)).sum::<u64>();
        if total > u64::from(Time::MAX / 4) {
            return Err(GraphError::Overflow);
        }
        for e in &sorted {
            parents[e.dst].push((e.src, e.cost));
            children[e.src].push((e.dst, e.cost));
        }

        // Kahn's method, lowest index first among available tasks.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut heap: BinaryHeap<Reverse<TaskId>> =
            (0..n).filter(|&t| indegree[t] == 0).map(Reverse).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(Reverse(t)) = heap.pop() {
            topo.push(t);
            for &(c, _) in &children[t] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    heap.push(Reverse(c));
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|&t| indegree[t] > 0).unwrap();
            return Err(GraphError::Cycle(labels[stuck].clone()));
        }
        let mut topo_pos = vec![0; n];
        for (i, &t) in topo.iter().enumerate() {
            topo_pos[t] = i;
        }

        let mut graph = TaskGraph {
            name: name.into(),
            labels,
            weights,
            edges: sorted,
            parents,
            children,
            topo,
            topo_pos,
            levels: LevelTable { tl: Vec::new(), bl: Vec::new() },
        };
        graph.levels = graph.compute_levels();
        Ok(graph)
    }

    /// Convenience constructor with labels `t0, t1, ...`.
    pub fn from_weights(weights: &[Time], edges: &[(TaskId, TaskId, Time)]) -> Result<Self, GraphError> {
        let tasks = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (format!("t{i}"), w))
            .collect();
        TaskGraph::new("g", tasks, edges.to_vec())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_tasks(&self) -> usize {
        self.weights.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, t: TaskId) -> &str {
        &self.labels[t]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn task_by_label(&self, label: &str) -> Option<TaskId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn weight(&self, t: TaskId) -> Time {
        self.weights[t]
    }

    pub fn weights(&self) -> &[Time] {
        &self.weights
    }

    /// Edges sorted by `(src, dst)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn parents(&self, t: TaskId) -> &[(TaskId, Time)] {
        &self.parents[t]
    }

    pub fn children(&self, t: TaskId) -> &[(TaskId, Time)] {
        &self.children[t]
    }

    pub fn edge_cost(&self, src: TaskId, dst: TaskId) -> Option<Time> {
        self.children[src].iter().find(|&&(c, _)| c == dst).map(|&(_, w)| w)
    }

    pub fn topo_order(&self) -> &[TaskId] {
        &self.topo
    }

    /// Position of `t` in [`TaskGraph::topo_order`].
    pub fn topo_pos(&self, t: TaskId) -> usize {
        self.topo_pos[t]
    }

    pub fn levels(&self) -> &LevelTable {
        &self.levels
    }

    pub fn tl(&self, t: TaskId) -> Time {
        self.levels.tl[t]
    }

    pub fn bl(&self, t: TaskId) -> Time {
        self.levels.bl[t]
    }

    pub fn total_weight(&self) -> Time {
        self.weights.iter().sum()
    }

    pub fn total_cost(&self) -> Time {
        self.edges.iter().map(|e| e.cost).sum()
    }

    /// Length of the computation-only critical path.
    pub fn critical_path(&self) -> Time {
        (0..self.num_tasks())
            .map(|t| self.levels.tl[t] + self.levels.bl[t])
            .max()
            .unwrap_or(0)
    }

    /// Top and bottom levels over the topological order.
    pub fn compute_levels(&self) -> LevelTable {
        let n = self.num_tasks();
        let mut tl = vec![0; n];
        let mut bl = vec![0; n];
        for &t in &self.topo {
            tl[t] = self.parents[t]
                .iter()
                .map(|&(p, _)| tl[p] + self.weights[p])
                .max()
                .unwrap_or(0);
        }
        for &t in self.topo.iter().rev() {
            bl[t] = self.weights[t]
                + self.children[t].iter().map(|&(c, _)| bl[c]).max().unwrap_or(0);
        }
        LevelTable { tl, bl }
    }

    /// Top and bottom levels counting only the edges whose endpoints are
    /// both allocated and sit in different parts.
    ///
    /// `part[t]` is `None` for unallocated tasks.
    pub fn allocated_levels(&self, part: &[Option<usize>]) -> (Vec<Time>, Vec<Time>) {
        let n = self.num_tasks();
        let incurred = |a: TaskId, b: TaskId, cost: Time| match (part[a], part[b]) {
            (Some(x), Some(y)) if x != y => cost,
            _ => 0,
        };
        let mut tl = vec![0; n];
        let mut bl = vec![0; n];
        for &t in &self.topo {
            tl[t] = self.parents[t]
                .iter()
                .map(|&(p, c)| tl[p] + self.weights[p] + incurred(p, t, c))
                .max()
                .unwrap_or(0);
        }
        for &t in self.topo.iter().rev() {
            bl[t] = self.weights[t]
                + self.children[t]
                    .iter()
                    .map(|&(ch, c)| bl[ch] + incurred(t, ch, c))
                    .max()
                    .unwrap_or(0);
        }
        (tl, bl)
    }

    /// Transitive closure as ancestor bitsets; only valid for graphs with at
    /// most 64 tasks.
    pub fn ancestor_masks(&self) -> Vec<u64> {
        assert!(self.num_tasks() <= 64, "bitset closure supports at most 64 tasks");
        let mut anc = vec![0u64; self.num_tasks()];
        for &t in &self.topo {
            let mut m = 0u64;
            for &(p, _) in &self.parents[t] {
                m |= anc[p] | (1u64 << p);
            }
            anc[t] = m;
        }
        anc
    }

    /// Descendant bitsets; only valid for graphs with at most 64 tasks.
    pub fn descendant_masks(&self) -> Vec<u64> {
        assert!(self.num_tasks() <= 64, "bitset closure supports at most 64 tasks");
        let mut desc = vec![0u64; self.num_tasks()];
        for &t in self.topo.iter().rev() {
            let mut m = 0u64;
            for &(c, _) in &self.children[t] {
                m |= desc[c] | (1u64 << c);
            }
            desc[t] = m;
        }
        desc
    }

    /// Graph with every edge reversed; weights and labels unchanged.
    pub fn reversed(&self) -> TaskGraph {
        let tasks = self
            .labels
            .iter()
            .cloned()
            .zip(self.weights.iter().copied())
            .collect();
        let edges = self.edges.iter().map(|e| (e.dst, e.src, e.cost)).collect();
        TaskGraph::new(self.name.clone(), tasks, edges).expect("reversal of a valid graph is valid")
    }

    /// Communication-to-computation ratio.
    pub fn ccr(&self) -> f64 {
        let w = self.total_weight();
        if w == 0 {
            return 0.0;
        }
        f64::from(self.total_cost()) / f64::from(w)
    }

    pub fn identical_groups(&self) -> IdenticalGroups {
        analysis::find_identical_groups(self)
    }

    pub fn classify(&self) -> StructureTag {
        analysis::classify(self)
    }

    /// Structural equality keyed by labels, ignoring task numbering.
    pub fn same_as(&self, other: &TaskGraph) -> bool {
        if self.num_tasks() != other.num_tasks() || self.num_edges() != other.num_edges() {
            return false;
        }
        let map: Option<Vec<TaskId>> = self
            .labels
            .iter()
            .map(|l| other.task_by_label(l))
            .collect();
        let Some(map) = map else { return false };
        (0..self.num_tasks()).all(|t| self.weights[t] == other.weights[map[t]])
            && self
                .edges
                .iter()
                .all(|e| other.edge_cost(map[e.src], map[e.dst]) == Some(e.cost))
    }
}
