//! AO and ELS on the same generated graphs, side by side.

use aosched::generator::{generate, GenSpec};
use aosched::graph::StructureTag;
use aosched::search::Clock;
use aosched::solver::{solve, Model, SolverConfig};

fn main() {
    println!("{:<24} {:>6} {:>10} {:>10}", "graph", "length", "ao states", "els states");
    for structure in StructureTag::ALL {
        let spec = GenSpec::new(structure, 10, 1.0, 7);
        let g = generate(&spec).unwrap();
        let mut row = Vec::new();
        for model in Model::ALL {
            let cfg = SolverConfig { clock: Clock::Expansions { per_second: 100_000 }, ..SolverConfig::new(model, 3) };
            let sol = solve(&g, &cfg).unwrap();
            row.push((sol.length, sol.stats.states_created));
        }
        let len = row[0].0.map_or("-".into(), |l| l.to_string());
        println!("{:<24} {:>6} {:>10} {:>10}", spec.stem(), len, row[0].1, row[1].1);
    }
}
