//! A join solved directly and through its reversed graph.

use aosched::generator::{generate, GenSpec};
use aosched::graph::StructureTag;
use aosched::search::Clock;
use aosched::solver::{solve, wants_reversal, Model, SolverConfig};

fn main() {
    let g = generate(&GenSpec::new(StructureTag::Join, 12, 10.0, 1)).unwrap();
    println!("{} tasks, ccr {:.2}, reversal applies: {}", g.num_tasks(), g.ccr(), wants_reversal(&g));
    for reverse_joins in [true, false] {
        let cfg = SolverConfig {
            reverse_joins,
            clock: Clock::Expansions { per_second: 100_000 },
            ..SolverConfig::new(Model::Ao, 3)
        };
        let sol = solve(&g, &cfg).unwrap();
        let valid = sol.schedule.as_ref().is_some_and(|s| s.is_valid(&g));
        println!(
            "reverse={reverse_joins:<5} length {:?} states {} valid on original {valid}",
            sol.length, sol.stats.states_created
        );
    }
}
