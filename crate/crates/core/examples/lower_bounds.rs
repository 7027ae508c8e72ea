//! Allocation bounds for every profile on a small fork-join.

use aosched::ao::alloc::{f_acp, f_acp_load, f_load, f_load_mft, AllocContext, AllocState};
use aosched::ao::Heuristics;
use aosched::graph::TaskGraph;

fn main() {
    let g = TaskGraph::from_weights(&[2, 4, 3, 5, 1], &[(0, 1, 3), (0, 2, 1), (0, 3, 2), (1, 4, 2), (2, 4, 5), (3, 4, 1)])
        .unwrap();
    let ctx = AllocContext::new(&g, 2, Heuristics::ALL, false);
    let allocs = [
        vec![Some(0), Some(0), Some(0), Some(0), Some(0)],
        vec![Some(0), Some(0), Some(1), Some(1), Some(0)],
        vec![Some(0), Some(1), Some(0), Some(1), None],
    ];
    println!("{:<28} {:>5} {:>8} {:>4} {:>8}", "parts", "load", "load+mft", "acp", "acp+load");
    for parts in &allocs {
        let s = AllocState::from_parts(&ctx, parts);
        println!(
            "{:<28} {:>5} {:>8} {:>4} {:>8}",
            format!("{:?}", s.parts(&g)),
            f_load(&s, &g),
            f_load_mft(&s, &g),
            f_acp(&s, &g),
            f_acp_load(&s, &g, &ctx.load)
        );
    }
}
