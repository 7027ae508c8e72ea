//! The allocation-ordering state space: first partition the tasks over the
//! processors, then order the tasks on each processor.

pub mod alloc;
pub mod order;

use std::cell::Cell;

use crate::graph::{TaskGraph, Time};
use crate::schedule::Schedule;
use crate::search::SearchSpace;

use alloc::{AllocContext, AllocState};
use order::{OrderContext, OrderState};

pub use alloc::Heuristics;
pub use order::{ProcSelect, ReadyCondition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AoConfig {
    pub heuristics: Heuristics,
    pub ready: ReadyCondition,
    pub select: ProcSelect,
    /// Identical-task pruning in both phases.
    pub identical: bool,
    /// Fixed task order on local free lists.
    pub fixed_order: bool,
}

#[derive(Debug, Clone)]
pub enum AoState {
    Alloc(AllocState),
    Order(OrderState),
}

pub struct AoSpace<'g> {
    graph: &'g TaskGraph,
    num_procs: usize,
    alloc: AllocContext<'g>,
    order: OrderContext<'g>,
    invalid: Cell<u64>,
}

impl<'g> AoSpace<'g> {
    pub fn new(graph: &'g TaskGraph, num_procs: usize, cfg: AoConfig) -> Self {
        assert!(graph.num_tasks() <= 64, "search models support at most 64 tasks");
        let alloc = AllocContext::new(graph, num_procs, cfg.heuristics, cfg.identical);
        let order = OrderContext::new(graph, num_procs, cfg.ready, cfg.select, &alloc.groups, cfg.fixed_order);
        AoSpace { graph, num_procs, alloc, order, invalid: Cell::new(0) }
    }

    pub fn alloc_context(&self) -> &AllocContext<'g> {
        &self.alloc
    }

    pub fn order_context(&self) -> &OrderContext<'g> {
        &self.order
    }

    /// Ordering steps dropped because they could never complete.
    pub fn invalid_discarded(&self) -> u64 {
        self.invalid.get()
    }

    fn promote(&self, a: AllocState) -> AoState {
        if a.is_complete() {
            AoState::Order(OrderState::root(&self.order, &a))
        } else {
            AoState::Alloc(a)
        }
    }
}

impl SearchSpace for AoSpace<'_> {
    type State = AoState;

    fn root(&self) -> AoState {
        self.promote(AllocState::root(self.graph, self.num_procs))
    }

    fn expand(&self, s: &AoState, out: &mut Vec<AoState>) {
        match s {
            AoState::Alloc(a) => {
                let mut kids = Vec::new();
                a.expand(&self.alloc, &mut kids);
                out.extend(kids.into_iter().map(|k| self.promote(k)));
            }
            AoState::Order(o) => {
                let mut kids = Vec::new();
                let mut invalid = 0;
                order::expand(&self.order, o, &mut kids, &mut invalid);
                self.invalid.set(self.invalid.get() + invalid);
                out.extend(kids.into_iter().map(AoState::Order));
            }
        }
    }

    fn f(&self, s: &AoState) -> Time {
        match s {
            AoState::Alloc(a) => a.f(),
            AoState::Order(o) => o.f(),
        }
    }

    fn depth(&self, s: &AoState) -> usize {
        match s {
            AoState::Alloc(a) => a.next(),
            AoState::Order(o) => self.graph.num_tasks() + o.depth(),
        }
    }

    fn is_goal(&self, s: &AoState) -> bool {
        matches!(s, AoState::Order(o) if o.is_complete())
    }

    fn key(&self, _: &AoState) -> Option<Vec<u8>> {
        None
    }

    fn full_key(&self, s: &AoState) -> Vec<u8> {
        match s {
            AoState::Alloc(a) => {
                let mut k = vec![0];
                k.extend_from_slice(a.part_vector());
                k
            }
            AoState::Order(o) => {
                let mut k = vec![1];
                k.extend(o.full_key());
                k
            }
        }
    }

    fn schedule(&self, s: &AoState) -> Schedule {
        let AoState::Order(o) = s else { panic!("allocation states are not schedules") };
        assert!(o.is_complete());
        let n = self.graph.num_tasks();
        Schedule::new((0..n).map(|t| o.proc_of(t)).collect(), (0..n).map(|t| o.eest(t)).collect(), self.num_procs)
    }

    fn state_bytes(&self, s: &AoState) -> usize {
        let n = self.graph.num_tasks();
        match s {
            AoState::Alloc(_) => 120 + 9 * n,
            AoState::Order(_) => 160 + 14 * n + self.num_procs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::g1;
    use crate::search::{astar, SearchConfig};

    #[test]
    fn solves_g1() {
        let g = g1();
        for cfg in [
            AoConfig::default(),
            AoConfig { identical: true, fixed_order: true, heuristics: Heuristics::ALL, ..AoConfig::default() },
            AoConfig { select: ProcSelect::RoundRobin, ready: ReadyCondition::Simple, ..AoConfig::default() },
        ] {
            let space = AoSpace::new(&g, 2, cfg);
            let r = astar(&space, &SearchConfig::default());
            assert_eq!(r.length, Some(6));
            let s = r.schedule.unwrap();
            assert!(s.is_valid(&g));
            assert_eq!(s.length(&g), 6);
            assert_eq!(r.stats.duplicates_discarded, 0);
        }
    }

    #[test]
    fn single_task_root_is_ordering_state() {
        let g = TaskGraph::from_weights(&[4], &[]).unwrap();
        let space = AoSpace::new(&g, 3, AoConfig::default());
        let r = astar(&space, &SearchConfig::default());
        assert_eq!(r.length, Some(4));
    }

    #[test]
    fn deterministic_children() {
        let g = TaskGraph::from_weights(&[2, 2, 3, 1], &[(0, 2, 3), (1, 3, 2)]).unwrap();
        let space = AoSpace::new(&g, 2, AoConfig::default());
        let walk = || {
            let mut keys = Vec::new();
            let mut stack = vec![space.root()];
            while let Some(s) = stack.pop() {
                keys.push(space.full_key(&s));
                space.expand(&s, &mut stack);
            }
            keys
        };
        assert_eq!(walk(), walk());
    }

    #[test]
    fn exhaustive_walk_has_no_duplicates() {
        let g = TaskGraph::from_weights(&[1, 1, 1, 1], &[]).unwrap();
        let space = AoSpace::new(&g, 2, AoConfig::default());
        let audit = crate::oracle::explore_all(&space, 100_000).unwrap();
        assert!(audit.states > 10);
        assert_eq!(audit.duplicates, 0);
        let g = TaskGraph::from_weights(&[2, 2, 3, 1], &[(0, 2, 3), (1, 3, 2)]).unwrap();
        let audit = crate::oracle::explore_all(&AoSpace::new(&g, 2, AoConfig::default()), 100_000).unwrap();
        assert_eq!(audit.duplicates, 0);
    }
}
