//! Exhaustive list scheduling: partial schedules grown by placing one ready
//! task on one processor at its earliest start.

use std::cmp::Reverse;

use crate::ao::order::fork_join_shape;
use crate::graph::{TaskGraph, TaskId, Time};
use crate::schedule::Schedule;
use crate::search::SearchSpace;

const UNPLACED: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ElsConfig {
    /// Identical tasks become ready only in chain order.
    pub identical: bool,
    /// Fixed task order on fork/join ready lists.
    pub fixed_order: bool,
}

/// A normalised partial schedule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElsState {
    proc: Vec<u8>,
    start: Vec<Time>,
    placed: u64,
    /// Finish time of each processor; the first `used` are nonempty.
    finish: Vec<Time>,
    used: usize,
    idle: Time,
    depth: usize,
    f: Time,
}

impl ElsState {
    pub fn empty(g: &TaskGraph, num_procs: usize) -> Self {
        ElsState {
            proc: vec![UNPLACED; g.num_tasks()],
            start: vec![0; g.num_tasks()],
            placed: 0,
            finish: vec![0; num_procs],
            used: 0,
            idle: 0,
            depth: 0,
            f: g.critical_path().max(g.total_weight().div_ceil(num_procs as Time)),
        }
    }

    pub fn is_placed(&self, t: TaskId) -> bool {
        self.placed >> t & 1 == 1
    }

    pub fn placement(&self, t: TaskId) -> Option<(usize, Time)> {
        self.is_placed(t).then(|| (self.proc[t] as usize, self.start[t]))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn f(&self) -> Time {
        self.f
    }

    pub fn is_complete(&self) -> bool {
        self.depth == self.proc.len()
    }

    pub fn num_procs(&self) -> usize {
        self.finish.len()
    }

    /// Data-ready time of unplaced `t` on `p`; all parents must be placed.
    fn drt(&self, g: &TaskGraph, t: TaskId, p: usize) -> Time {
        g.parents(t)
            .iter()
            .map(|&(q, c)| {
                let end = self.start[q] + g.weight(q);
                if self.proc[q] as usize == p { end } else { end + c }
            })
            .max()
            .unwrap_or(0)
    }

    /// Places `t` on `p` as early as possible. The result is not normalised.
    pub fn place(&self, g: &TaskGraph, t: TaskId, p: usize) -> ElsState {
        let mut c = self.clone();
        let s = self.finish[p].max(self.drt(g, t, p));
        c.idle += s - self.finish[p];
        c.proc[t] = p as u8;
        c.start[t] = s;
        c.finish[p] = s + g.weight(t);
        c.placed |= 1 << t;
        c.depth += 1;
        if p >= c.used {
            c.used = p + 1;
        }
        c
    }

    /// Renames processors so that they appear in order of their
    /// topologically first task, empty processors last.
    pub fn normalise(&self, g: &TaskGraph) -> ElsState {
        let procs = self.num_procs();
        let mut first = vec![usize::MAX; procs];
        for t in 0..self.proc.len() {
            if self.is_placed(t) {
                let p = self.proc[t] as usize;
                first[p] = first[p].min(g.topo_pos(t));
            }
        }
        let mut order: Vec<usize> = (0..procs).collect();
        order.sort_by_key(|&p| (first[p], p));
        let mut rename = vec![0u8; procs];
        for (new, &old) in order.iter().enumerate() {
            rename[old] = new as u8;
        }
        let mut c = self.clone();
        for t in 0..c.proc.len() {
            if c.is_placed(t) {
                c.proc[t] = rename[c.proc[t] as usize];
            }
        }
        for (new, &old) in order.iter().enumerate() {
            c.finish[new] = self.finish[old];
        }
        c.used = first.iter().filter(|&&f| f != usize::MAX).count();
        c
    }

    /// Canonical bytes of the (normalised) partial schedule.
    pub fn key(&self) -> Vec<u8> {
        let mut k = Vec::with_capacity(self.proc.len() * 5);
        for t in 0..self.proc.len() {
            if self.is_placed(t) {
                k.push(self.proc[t]);
                k.extend_from_slice(&self.start[t].to_le_bytes());
            } else {
                k.push(UNPLACED);
            }
        }
        k
    }

    pub fn to_schedule(&self) -> Schedule {
        assert!(self.is_complete());
        Schedule::new(self.proc.iter().map(|&p| p as usize).collect(), self.start.clone(), self.num_procs())
    }
}

/// Lower bound on the best completion of `s`, before smoothing: the larger
/// of placed paths, idle-aware load, and estimated starts of unplaced tasks
/// plus their bottom levels.
pub fn els_f(s: &ElsState, g: &TaskGraph) -> Time {
    let n = g.num_tasks();
    let mut bound = (g.total_weight() + s.idle).div_ceil(s.num_procs() as Time);
    let mut est = vec![0 as Time; n];
    let candidates = s.used.min(s.num_procs() - 1) + 1;
    for &t in g.topo_order() {
        if s.is_placed(t) {
            bound = bound.max(s.start[t] + g.bl(t));
            continue;
        }
        est[t] = (0..candidates)
            .map(|p| {
                let data = g
                    .parents(t)
                    .iter()
                    .map(|&(q, c)| match s.placement(q) {
                        Some((qp, qs)) => qs + g.weight(q) + if qp == p { 0 } else { c },
                        None => est[q] + g.weight(q),
                    })
                    .max()
                    .unwrap_or(0);
                data.max(s.finish[p])
            })
            .min()
            .unwrap();
        bound = bound.max(est[t] + g.bl(t));
    }
    bound
}

pub struct ElsSpace<'g> {
    graph: &'g TaskGraph,
    num_procs: usize,
    cfg: ElsConfig,
    parents_mask: Vec<u64>,
    earlier: Vec<u64>,
}

impl<'g> ElsSpace<'g> {
    pub fn new(graph: &'g TaskGraph, num_procs: usize, cfg: ElsConfig) -> Self {
        assert!(graph.num_tasks() <= 64, "search models support at most 64 tasks");
        assert!(num_procs >= 1 && num_procs < UNPLACED as usize);
        let parents_mask = (0..graph.num_tasks())
            .map(|t| graph.parents(t).iter().fold(0u64, |m, &(q, _)| m | 1 << q))
            .collect();
        let mut earlier = vec![0u64; graph.num_tasks()];
        if cfg.identical {
            for grp in graph.identical_groups().groups() {
                let mut mask = 0u64;
                for &t in grp {
                    earlier[t] = mask;
                    mask |= 1 << t;
                }
            }
        }
        ElsSpace { graph, num_procs, cfg, parents_mask, earlier }
    }

    /// Unplaced tasks whose parents, and earlier identical twins, are all
    /// placed; in topological order.
    pub fn ready(&self, s: &ElsState) -> Vec<TaskId> {
        let g = self.graph;
        let unplaced = !s.placed;
        let mut out: Vec<TaskId> = (0..g.num_tasks())
            .filter(|&t| !s.is_placed(t))
            .filter(|&t| (self.parents_mask[t] | self.earlier[t]) & unplaced == 0)
            .collect();
        out.sort_by_key(|&t| g.topo_pos(t));
        out
    }

    /// Safe order for a fork/join ready list: incoming cost ascending with
    /// outgoing cost descending.
    pub fn fixed_order(&self, s: &ElsState, ready: &[TaskId]) -> Option<Vec<TaskId>> {
        let g = self.graph;
        if ready.len() <= 1 {
            return Some(ready.to_vec());
        }
        let shape = fork_join_shape(g, ready)?;
        if shape.child.is_none() && ready.len() != g.num_tasks() - s.depth {
            return None;
        }
        let mut keyed: Vec<(Time, Time, usize, TaskId)> = ready
            .iter()
            .map(|&t| {
                let cin = g.parents(t).first().map_or(0, |&(_, c)| c);
                let cout = g.children(t).first().map_or(0, |&(_, c)| c);
                (cin, cout, g.topo_pos(t), t)
            })
            .collect();
        keyed.sort_by_key(|&(cin, cout, pos, _)| (cin, Reverse(cout), pos));
        keyed.windows(2).all(|w| w[0].1 >= w[1].1).then(|| keyed.into_iter().map(|k| k.3).collect())
    }

    fn child(&self, s: &ElsState, t: TaskId, p: usize) -> ElsState {
        let mut c = s.place(self.graph, t, p).normalise(self.graph);
        c.f = s.f.max(els_f(&c, self.graph));
        c
    }
}

impl SearchSpace for ElsSpace<'_> {
    type State = ElsState;

    fn root(&self) -> ElsState {
        let mut s = ElsState::empty(self.graph, self.num_procs);
        s.f = s.f.max(els_f(&s, self.graph));
        s
    }

    fn expand(&self, s: &ElsState, out: &mut Vec<ElsState>) {
        let mut ready = self.ready(s);
        if self.cfg.fixed_order {
            if let Some(order) = self.fixed_order(s, &ready) {
                ready.clear();
                ready.extend(order.first());
            }
        }
        // every empty processor is equivalent after normalisation
        let procs = (s.used + 1).min(self.num_procs);
        for &t in &ready {
            for p in 0..procs {
                out.push(self.child(s, t, p));
            }
        }
    }

    fn f(&self, s: &ElsState) -> Time {
        s.f
    }

    fn depth(&self, s: &ElsState) -> usize {
        s.depth
    }

    fn is_goal(&self, s: &ElsState) -> bool {
        s.is_complete()
    }

    fn key(&self, s: &ElsState) -> Option<Vec<u8>> {
        Some(s.key())
    }

    fn full_key(&self, s: &ElsState) -> Vec<u8> {
        s.key()
    }

    fn schedule(&self, s: &ElsState) -> Schedule {
        s.to_schedule()
    }

    fn state_bytes(&self, _: &ElsState) -> usize {
        let n = self.graph.num_tasks();
        200 + 5 * n + 4 * self.num_procs
    }
}
