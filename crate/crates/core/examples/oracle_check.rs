//! Cross-checks both models against brute-force enumeration on random
//! small graphs.

use aosched::generator::{generate, GenSpec};
use aosched::graph::StructureTag;
use aosched::oracle::{brute_force_optimal, DEFAULT_MAX_TASKS};
use aosched::solver::{solve, Model, SolverConfig};

fn main() {
    let mut checked = 0;
    for structure in StructureTag::ALL {
        for seed in 0..3 {
            let g = generate(&GenSpec::new(structure, 7, 1.0, seed)).unwrap();
            for p in [2, 3] {
                let oracle = brute_force_optimal(&g, p, DEFAULT_MAX_TASKS).unwrap();
                for model in Model::ALL {
                    let sol = solve(&g, &SolverConfig::new(model, p)).unwrap();
                    assert_eq!(sol.length, Some(oracle.optimal_length), "{structure} seed {seed} P={p} {model}");
                }
                checked += 1;
                if seed == 0 && p == 2 {
                    println!(
                        "{structure:<16} optimum {:>3} over {} schedules of {} allocations",
                        oracle.optimal_length, oracle.schedule_count, oracle.allocation_count
                    );
                }
            }
        }
    }
    println!("{checked} instances agree");
}
