mod common;

use defectscan::analysis::analyze_source;
use defectscan::detectors::DetectorConfig;
use std::collections::BTreeSet;

#[test]
fn synthetic_contracts_parse_and_cover_many_detectors() {
    let mut rng = common::rng(11);
    let config = DetectorConfig::default();
    let mut seen = BTreeSet::new();
    for n in 0..40 {
        let text = common::synthetic_contract(&mut rng, &format!("S{n}"), 200);
        let r = analyze_source("s.sol", &text, &config);
        assert!(!r.failed, "{:?}\n{text}", r.diagnostics);
        seen.extend(r.findings.into_iter().map(|f| f.detector));
    }
    assert!(seen.len() >= 10, "{seen:?}");
}
