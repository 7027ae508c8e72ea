//! Walks the allocation tree and checks the leaf count against the
//! partition count, with and without identical-task filtering.

use aosched::ao::alloc::{count_allocations, AllocContext, AllocState};
use aosched::ao::Heuristics;
use aosched::graph::TaskGraph;

fn leaves(ctx: &AllocContext<'_>) -> Vec<AllocState> {
    let mut out = Vec::new();
    let mut stack = vec![AllocState::root(ctx.graph, ctx.num_procs)];
    while let Some(s) = stack.pop() {
        if s.is_complete() {
            out.push(s);
        } else {
            s.expand(ctx, &mut stack);
        }
    }
    out
}

fn main() {
    // one source, four identical children
    let g = TaskGraph::from_weights(&[3, 2, 2, 2, 2], &[(0, 1, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1)]).unwrap();
    for p in 1..=4 {
        let plain = leaves(&AllocContext::new(&g, p, Heuristics::BASELINE, false));
        let filtered = leaves(&AllocContext::new(&g, p, Heuristics::BASELINE, true));
        println!(
            "P={p}: {} allocations (expected {}), {} up to identical tasks",
            plain.len(),
            count_allocations(g.num_tasks(), p),
            filtered.len()
        );
    }
    for s in leaves(&AllocContext::new(&g, 2, Heuristics::BASELINE, true)) {
        println!("{:?} f={}", s.parts(&g), s.f());
    }
}
