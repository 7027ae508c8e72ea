//! Brute-force references for small instances: optimal lengths, exact
//! counts of allocations and schedules, and best completions of search
//! states.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::graph::{TaskGraph, TaskId, Time};
use crate::schedule::Schedule;
use crate::search::{DuplicateAudit, SearchSpace};

pub use crate::ao::alloc::count_allocations;

pub const DEFAULT_MAX_TASKS: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {tasks} tasks, the oracle accepts at most {limit}")]
    TooManyTasks { tasks: usize, limit: usize },
    #[error("state space exceeds {0} states")]
    TooManyStates(usize),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub optimal_length: Time,
    pub optimal_schedule: Schedule,
    /// Distinct valid schedules up to processor renaming.
    pub schedule_count: u64,
    /// Distinct partitions into at most `num_procs` parts.
    pub allocation_count: u64,
}

/// Relabels processors in order of their topologically first task.
fn canonical(g: &TaskGraph, assign: &[usize]) -> Vec<usize> {
    let mut rename: HashMap<usize, usize> = HashMap::new();
    let mut out = vec![0; assign.len()];
    for &t in g.topo_order() {
        let next = rename.len();
        out[t] = *rename.entry(assign[t]).or_insert(next);
    }
    out
}

/// Every partition of the tasks into at most `num_procs` parts, found by
/// enumerating all processor assignments and collapsing relabelings.
/// Parts are numbered by their topologically first task.
pub fn enumerate_allocations(g: &TaskGraph, num_procs: usize) -> Vec<Vec<usize>> {
    let n = g.num_tasks();
    let p = num_procs.min(n.max(1));
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut assign = vec![0usize; n];
    loop {
        let c = canonical(g, &assign);
        if seen.insert(c.clone()) {
            out.push(c);
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            assign[i] += 1;
            if assign[i] < p {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Orders of `tasks` that respect every ancestor relation among them.
fn local_orders(tasks: &[TaskId], anc: &[u64]) -> Vec<Vec<TaskId>> {
    fn go(tasks: &[TaskId], anc: &[u64], done: u64, cur: &mut Vec<TaskId>, out: &mut Vec<Vec<TaskId>>) {
        if cur.len() == tasks.len() {
            out.push(cur.clone());
            return;
        }
        let mine: u64 = tasks.iter().fold(0, |m, &t| m | 1 << t);
        for &t in tasks {
            if done >> t & 1 == 0 && anc[t] & mine & !done == 0 {
                cur.push(t);
                go(tasks, anc, done | 1 << t, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(tasks, anc, 0, &mut Vec::new(), &mut out);
    out
}

/// Every valid schedule consistent with `alloc` (part index per task), as
/// per-part task orders.
pub fn enumerate_orderings(g: &TaskGraph, alloc: &[usize]) -> Vec<Vec<Vec<TaskId>>> {
    let mut out = Vec::new();
    for_each_schedule(g, alloc, |orders, _| out.push(orders.to_vec()));
    out
}

fn for_each_schedule(g: &TaskGraph, alloc: &[usize], mut visit: impl FnMut(&[Vec<TaskId>], &Schedule)) {
    let anc = g.ancestor_masks();
    let parts = alloc.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); parts];
    for t in 0..g.num_tasks() {
        members[alloc[t]].push(t);
    }
    let choices: Vec<Vec<Vec<TaskId>>> = members.iter().map(|m| local_orders(m, &anc)).collect();
    let mut idx = vec![0usize; parts];
    loop {
        let orders: Vec<Vec<TaskId>> = (0..parts).map(|p| choices[p][idx[p]].clone()).collect();
        if let Some(s) = Schedule::from_orders(g, &orders) {
            visit(&orders, &s);
        }
        let mut i = 0;
        loop {
            if i == parts {
                return;
            }
            idx[i] += 1;
            if idx[i] < choices[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Exact optimum by exhaustive enumeration of allocations and orderings.
pub fn brute_force_optimal(g: &TaskGraph, num_procs: usize, max_tasks: usize) -> Result<OracleResult, OracleError> {
    if g.num_tasks() > max_tasks || g.num_tasks() > 64 {
        return Err(OracleError::TooManyTasks { tasks: g.num_tasks(), limit: max_tasks.min(64) });
    }
    let allocations = enumerate_allocations(g, num_procs);
    let mut best: Option<(Time, Schedule)> = None;
    let mut count = 0u64;
    for alloc in &allocations {
        for_each_schedule(g, alloc, |_, s| {
            count += 1;
            let len = s.length(g);
            if best.as_ref().is_none_or(|(b, _)| len < *b) {
                let padded = Schedule::new(
                    (0..g.num_tasks()).map(|t| s.proc(t)).collect(),
                    (0..g.num_tasks()).map(|t| s.start(t)).collect(),
                    num_procs,
                );
                best = Some((len, padded));
            }
        });
    }
    let (optimal_length, optimal_schedule) = best.unwrap_or_else(|| (0, Schedule::new(vec![], vec![], num_procs)));
    Ok(OracleResult {
        optimal_length,
        optimal_schedule,
        schedule_count: count,
        allocation_count: allocations.len() as u64,
    })
}

/// Exact best completion `f*` of states of one search space, memoised by
/// full state encoding.
pub struct CompletionOracle<'a, P: SearchSpace> {
    graph: &'a TaskGraph,
    space: &'a P,
    memo: HashMap<Vec<u8>, Option<Time>>,
    limit: usize,
}

impl<'a, P: SearchSpace> CompletionOracle<'a, P> {
    pub fn new(graph: &'a TaskGraph, space: &'a P, limit: usize) -> Self {
        CompletionOracle { graph, space, memo: HashMap::new(), limit }
    }

    pub fn states_visited(&self) -> usize {
        self.memo.len()
    }

    /// Shortest schedule reachable from `s`, or `None` if every branch is a
    /// dead end.
    pub fn best_completion(&mut self, s: &P::State) -> Result<Option<Time>, OracleError> {
        let key = self.space.full_key(s);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if self.memo.len() >= self.limit {
            return Err(OracleError::TooManyStates(self.limit));
        }
        let v = if self.space.is_goal(s) {
            Some(self.space.schedule(s).length(self.graph))
        } else {
            let mut kids = Vec::new();
            self.space.expand(s, &mut kids);
            let mut best: Option<Time> = None;
            for k in &kids {
                if let Some(v) = self.best_completion(k)? {
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
            }
            best
        };
        self.memo.insert(key, v);
        Ok(v)
    }
}

/// Visits every state reachable from the root without duplicate detection
/// and audits their encodings.
pub fn explore_all<P: SearchSpace>(space: &P, limit: usize) -> Result<DuplicateAudit, OracleError> {
    let mut audit = DuplicateAudit::default();
    let mut stack = vec![space.root()];
    while let Some(s) = stack.pop() {
        audit.record(space.full_key(&s));
        if audit.states as usize > limit {
            return Err(OracleError::TooManyStates(limit));
        }
        space.expand(&s, &mut stack);
    }
    Ok(audit)
}
