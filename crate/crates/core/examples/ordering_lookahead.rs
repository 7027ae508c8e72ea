//! Two tasks on each processor with crossing edges: the simple ready
//! condition walks into orderings that can never be scheduled, the
//! lookahead condition never builds them.

use aosched::ao::alloc::AllocState;
use aosched::ao::{AoConfig, AoSpace, ReadyCondition};
use aosched::graph::TaskGraph;
use aosched::oracle::explore_all;

fn main() {
    let g = TaskGraph::from_weights(&[1, 1, 1, 1], &[(0, 2, 1), (3, 1, 1)]).unwrap();
    for ready in [ReadyCondition::Lookahead, ReadyCondition::Simple] {
        let space = AoSpace::new(&g, 2, AoConfig { ready, identical: false, fixed_order: false, ..AoConfig::default() });
        let audit = explore_all(&space, 100_000).unwrap();
        println!(
            "{:<10} states {:>4}  dead orderings dropped {}",
            ready.as_str(),
            audit.states,
            space.invalid_discarded()
        );
    }
    let space = AoSpace::new(&g, 2, AoConfig::default());
    let alloc = AllocState::from_parts(space.alloc_context(), &[Some(0), Some(0), Some(1), Some(1)]);
    println!("allocation {:?} bound {}", alloc.parts(&g), alloc.f());
}
