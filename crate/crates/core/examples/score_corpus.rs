//! Analyzes the shipped listing corpus and scores it against its manifest.

use defectscan::analysis::{analyze_files, collect_inputs};
use defectscan::corpus::{load_manifest, score};
use defectscan::detectors::DetectorConfig;
use std::path::Path;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/listings");
    let manifest = load_manifest(&root.join("manifest.txt")).unwrap();
    let files = collect_inputs(std::slice::from_ref(&root), None).unwrap();
    let batch = analyze_files(&files, Some(&root), None, &DetectorConfig::default(), 4).unwrap();
    let card = score(&batch.report, &manifest);
    print!("{}", card.render_text());
}
