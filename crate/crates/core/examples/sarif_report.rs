//! Builds a report over the three listings and writes it as SARIF.

use defectscan::analysis::analyze_source;
use defectscan::detectors::DetectorConfig;
use defectscan::report::{filter_by_impact, render, ImpactLevel, OutputFormat, Report};

fn main() {
    let config = DetectorConfig::default();
    let sources = [
        ("listing1.sol", include_str!("../corpus/listings/listing1.sol")),
        ("listing2.sol", include_str!("../corpus/listings/listing2.sol")),
        ("listing3.sol", include_str!("../corpus/listings/listing3.sol")),
    ];
    let mut inputs = Vec::new();
    let mut findings = Vec::new();
    for (path, text) in sources {
        let r = analyze_source(path, text, &config);
        inputs.extend(r.input);
        findings.extend(r.findings);
    }
    let report = filter_by_impact(&Report::new(inputs, findings), ImpactLevel::IP2);
    print!("{}", String::from_utf8(render(&report, OutputFormat::Sarif)).unwrap());
}
