//! Parses the DefectExample listing and prints the facts detectors read:
//! flattened members, the internal call graph and per-variable liveness.

use defectscan::semantic::{build_call_graph, compute_def_use, flatten};
use defectscan::source::{parse, tokenize, FileId};

const SOURCE: &str = include_str!("../corpus/listings/listing3.sol");

fn main() {
    let tokens = tokenize(SOURCE, FileId(0)).unwrap();
    let parsed = parse(&tokens);
    assert!(!parsed.has_errors());
    for c in &parsed.unit.contracts {
        let flat = flatten(c, &parsed.unit.contracts);
        let graph = build_call_graph(&flat);
        println!("contract {}: {} function(s), {} call edge(s)", c.name, flat.functions.len(), graph.edges.len());
        for f in &c.functions {
            let facts = compute_def_use(&flat, f);
            for v in &facts.vars {
                println!("  {}::{} {:?} live={} sinks={:?}", f.display_name(), v.name, v.role, v.live, v.sinks);
            }
        }
    }
}
