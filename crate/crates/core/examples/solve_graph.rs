//! Solve a DOT task graph optimally with either model.
//!
//! cargo run --example solve_graph -- path/to/graph.dot 3 els

use std::env;
use std::fs;

use aosched::graph::{parse_graph, TaskGraph};
use aosched::solver::{solve, Model, SolverConfig};

fn main() {
    let args: Vec<String> = env::args().skip(1).collect();
    let g = match args.first() {
        Some(path) => parse_graph(&fs::read_to_string(path).expect("readable graph")).expect("valid graph"),
        None => TaskGraph::from_weights(&[2, 3, 1], &[(0, 1, 1), (0, 2, 4)]).unwrap(),
    };
    let procs = args.get(1).map_or(2, |p| p.parse().expect("processor count"));
    let model: Model = args.get(2).map_or(Model::Ao, |m| m.parse().expect("ao or els"));

    let sol = solve(&g, &SolverConfig::new(model, procs)).expect("solvable");
    let Some(s) = sol.schedule else {
        println!("{}", sol.stats.outcome.as_str());
        return;
    };
    println!("length {} in {} states", s.length(&g), sol.stats.states_created);
    for (p, tasks) in s.processor_orders().iter().enumerate() {
        let row: Vec<String> = tasks.iter().map(|&t| format!("{}@{}", g.label(t), s.start(t))).collect();
        println!("p{p}: {}", row.join(" "));
    }
}
