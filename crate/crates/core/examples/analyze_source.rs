//! Runs every source detector on the Gamble listing and prints text output.

use defectscan::analysis::analyze_source;
use defectscan::detectors::DetectorConfig;
use defectscan::report::{render, OutputFormat, Report};

const GAMBLE: &str = include_str!("../corpus/listings/listing1.sol");

fn main() {
    let result = analyze_source("listing1.sol", GAMBLE, &DetectorConfig::default());
    for d in &result.diagnostics {
        eprintln!("{d}");
    }
    let report = Report::new(result.input.into_iter().collect(), result.findings);
    print!("{}", String::from_utf8(render(&report, OutputFormat::Text)).unwrap());
}
