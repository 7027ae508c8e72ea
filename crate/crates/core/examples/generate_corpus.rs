//! Writes one graph per structure to a directory and prints its shape.
//!
//! cargo run --example generate_corpus -- /tmp/corpus

use std::env;
use std::fs;
use std::path::PathBuf;

use aosched::generator::{generate, GenSpec};
use aosched::graph::{serialize_graph, StructureTag};

fn main() {
    let dir = PathBuf::from(env::args().nth(1).unwrap_or_else(|| "corpus".into()));
    fs::create_dir_all(&dir).unwrap();
    for structure in StructureTag::ALL {
        for ccr in [0.1, 1.0, 10.0] {
            let spec = GenSpec::new(structure, 16, ccr, 0);
            let g = generate(&spec).unwrap();
            fs::write(dir.join(spec.file_name()), serialize_graph(&g)).unwrap();
            println!("{:<28} edges {:>3} ccr {:>6.3} {}", spec.file_name(), g.num_edges(), g.ccr(), g.classify());
        }
    }
}
