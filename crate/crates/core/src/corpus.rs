//! Labeled corpora: manifest parsing and precision/recall scoring.

use crate::detectors::{descriptor, registry};
use crate::report::Report;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    /// `None` is the `*` wildcard.
    pub line: Option<u32>,
    pub detector: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown detector `{id}`")]
    UnknownDetector { line: usize, id: String },
    #[error("line {line}: `{path}` does not exist under the corpus root")]
    MissingFile { line: usize, path: String },
}

impl CorpusManifest {
    pub fn parse(text: &str) -> Result<CorpusManifest, ManifestError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.rsplitn(3, ':');
            let (Some(id), Some(pos), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(ManifestError::Malformed {
                    line: n,
                    message: format!("expected `path:line:detector`, got `{line}`"),
                });
            };
            let (id, pos, path) = (id.trim(), pos.trim(), path.trim());
            if path.is_empty() {
                return Err(ManifestError::Malformed {
                    line: n,
                    message: "empty path".into(),
                });
            }
            let line_no = match pos {
                "*" => None,
                _ => match pos.parse::<u32>() {
                    Ok(v) if v > 0 => Some(v),
                    _ => {
                        return Err(ManifestError::Malformed {
                            line: n,
                            message: format!("line must be a positive integer or `*`, got `{pos}`"),
                        })
                    }
                },
            };
            let d = descriptor(id).ok_or_else(|| ManifestError::UnknownDetector {
                line: n,
                id: id.to_string(),
            })?;
            entries.push(ManifestEntry {
                path: path.to_string(),
                line: line_no,
                detector: d.id.to_string(),
            });
        }
        Ok(CorpusManifest { entries })
    }

    /// Every referenced path must exist under `root`. Reports the first offender.
    pub fn check_paths(&self, text: &str, root: &Path) -> Result<(), ManifestError> {
        for e in &self.entries {
            if !root.join(&e.path).is_file() {
                let line = text
                    .lines()
                    .position(|l| l.trim().starts_with(&format!("{}:", e.path)))
                    .map_or(0, |i| i + 1);
                return Err(ManifestError::MissingFile {
                    line,
                    path: e.path.clone(),
                });
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    CorpusManifest::parse(&text)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DetectorScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

impl DetectorScore {
    fn finish(mut self) -> Self {
        self.precision = ratio(self.tp, self.tp + self.fp);
        self.recall = ratio(self.tp, self.tp + self.fn_);
        self
    }
}

/// `0/0` is 1.
pub fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionRow {
    /// Inputs with at least one finding of this detector.
    pub count: usize,
    pub percent: f64,
}

impl DistributionRow {
    pub fn formatted(&self) -> String {
        format!("{} ({:.2}%)", self.count, self.percent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreCard {
    pub per_detector: BTreeMap<String, DetectorScore>,
    pub overall: DetectorScore,
    pub files: usize,
    pub distribution: BTreeMap<String, DistributionRow>,
    pub false_positives: Vec<ManifestEntry>,
    pub false_negatives: Vec<ManifestEntry>,
}

impl ScoreCard {
    pub fn is_perfect(&self) -> bool {
        self.overall.precision == 1.0 && self.overall.recall == 1.0
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<32} {:>4} {:>4} {:>4} {:>9} {:>7}  distribution", "detector", "tp", "fp", "fn", "precision", "recall");
        for d in registry() {
            let sc = &self.per_detector[d.id];
            let dist = self.distribution[d.id].formatted();
            let _ = writeln!(
                s,
                "{:<32} {:>4} {:>4} {:>4} {:>9.4} {:>7.4}  {}",
                d.id, sc.tp, sc.fp, sc.fn_, sc.precision, sc.recall, dist
            );
        }
        let o = &self.overall;
        let _ = writeln!(
            s,
            "{:<32} {:>4} {:>4} {:>4} {:>9.4} {:>7.4}  files: {}",
            "overall", o.tp, o.fp, o.fn_, o.precision, o.recall, self.files
        );
        for e in &self.false_positives {
            let _ = writeln!(s, "unexpected: {}", fmt_entry(e));
        }
        for e in &self.false_negatives {
            let _ = writeln!(s, "missing: {}", fmt_entry(e));
        }
        s
    }
}

fn fmt_entry(e: &ManifestEntry) -> String {
    match e.line {
        Some(l) => format!("{}:{}:{}", e.path, l, e.detector),
        None => format!("{}:*:{}", e.path, e.detector),
    }
}

/// A finding keyed as a manifest entry. Bytecode findings have no line and
/// only match wildcard entries.
fn finding_keys(report: &Report) -> BTreeSet<(String, String, Option<u32>)> {
    report
        .findings
        .iter()
        .map(|f| (f.file.clone(), f.detector.clone(), f.line))
        .collect()
}

pub fn score(report: &Report, manifest: &CorpusManifest) -> ScoreCard {
    let found = finding_keys(report);
    let expected: BTreeSet<&ManifestEntry> = manifest.entries.iter().collect();
    let wildcards: BTreeSet<(&str, &str)> = expected
        .iter()
        .filter(|e| e.line.is_none())
        .map(|e| (e.path.as_str(), e.detector.as_str()))
        .collect();
    let mut per: BTreeMap<String, DetectorScore> =
        registry().iter().map(|d| (d.id.to_string(), DetectorScore::default())).collect();
    let mut false_positives = Vec::new();
    let mut false_negatives = Vec::new();

    for e in &expected {
        let hit = found
            .iter()
            .any(|(p, d, l)| *p == e.path && *d == e.detector && (e.line.is_none() || *l == e.line));
        let slot = per.entry(e.detector.clone()).or_default();
        if hit {
            slot.tp += 1;
        } else {
            slot.fn_ += 1;
            false_negatives.push((*e).clone());
        }
    }
    for (p, d, l) in &found {
        let matched = wildcards.contains(&(p.as_str(), d.as_str()))
            || (l.is_some()
                && expected.contains(&ManifestEntry {
                    path: p.clone(),
                    line: *l,
                    detector: d.clone(),
                }));
        if !matched {
            per.entry(d.clone()).or_default().fp += 1;
            false_positives.push(ManifestEntry {
                path: p.clone(),
                line: *l,
                detector: d.clone(),
            });
        }
    }

    let mut overall = DetectorScore::default();
    for s in per.values_mut() {
        overall.tp += s.tp;
        overall.fp += s.fp;
        overall.fn_ += s.fn_;
        *s = s.finish();
    }

    ScoreCard {
        per_detector: per,
        overall: overall.finish(),
        files: report.inputs.len(),
        distribution: distribution(report),
        false_positives,
        false_negatives,
    }
}

/// Per detector: how many inputs have at least one finding, and the share of all inputs.
pub fn distribution(report: &Report) -> BTreeMap<String, DistributionRow> {
    let mut files: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for f in &report.findings {
        files.entry(f.detector.as_str()).or_default().insert(f.file.as_str());
    }
    let total = report.inputs.len();
    registry()
        .iter()
        .map(|d| {
            let count = files.get(d.id).map_or(0, |s| s.len());
            let percent = if total == 0 { 0.0 } else { 100.0 * count as f64 / total as f64 };
            (d.id.to_string(), DistributionRow { count, percent })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{Finding, InputDigest};
    use proptest::prelude::*;

    fn finding(id: &str, file: &str, line: u32) -> Finding {
        let d = descriptor(id).unwrap();
        Finding {
            detector: d.id.into(),
            category: d.category,
            impact: d.impact,
            file: file.into(),
            line: Some(line),
            column: Some(1),
            pc: None,
            message: String::new(),
            advice: String::new(),
            note: None,
            block: None,
        }
    }

    fn report(files: &[&str], findings: Vec<Finding>) -> Report {
        Report::new(files.iter().map(|f| InputDigest::of(f, f.as_bytes())).collect(), findings)
    }

    #[test]
    fn manifest_forms() {
        let m = CorpusManifest::parse("# header\n\nlisting1.sol:8:transaction-state-dependency\nlisting1.sol:*:D20\n").unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].line, Some(8));
        assert_eq!(m.entries[1].line, None);
        assert_eq!(m.entries[1].detector, "unspecified-compiler-version");
        assert!(CorpusManifest::parse("").unwrap().entries.is_empty());
    }

    #[test]
    fn manifest_errors_carry_line_numbers() {
        let e = CorpusManifest::parse("a.sol:1:reentrancy\nbroken\n").unwrap_err();
        assert!(matches!(e, ManifestError::Malformed { line: 2, .. }));
        let e = CorpusManifest::parse("\na.sol:x:reentrancy").unwrap_err();
        assert!(matches!(e, ManifestError::Malformed { line: 2, .. }));
        let e = CorpusManifest::parse("a.sol:3:no-such-thing").unwrap_err();
        assert!(matches!(e, ManifestError::UnknownDetector { line: 1, .. }));
    }

    #[test]
    fn exact_match_is_perfect() {
        let r = report(&["a.sol"], vec![finding("reentrancy", "a.sol", 6)]);
        let m = CorpusManifest::parse("a.sol:6:reentrancy").unwrap();
        let s = score(&r, &m);
        assert!(s.is_perfect());
        assert_eq!(s.per_detector["reentrancy"].tp, 1);
    }

    #[test]
    fn missing_one_of_two_halves_recall() {
        let r = report(&["a.sol"], vec![finding("reentrancy", "a.sol", 6)]);
        let m = CorpusManifest::parse("a.sol:6:reentrancy\na.sol:9:reentrancy").unwrap();
        let s = score(&r, &m);
        assert_eq!(s.per_detector["reentrancy"].recall, 0.5);
        assert_eq!(s.per_detector["reentrancy"].precision, 1.0);
        assert!(!s.is_perfect());
    }

    #[test]
    fn extra_finding_is_false_positive() {
        let r = report(&["a.sol"], vec![finding("reentrancy", "a.sol", 6), finding("reentrancy", "a.sol", 7)]);
        let m = CorpusManifest::parse("a.sol:6:reentrancy").unwrap();
        let s = score(&r, &m);
        assert_eq!(s.per_detector["reentrancy"].precision, 0.5);
        assert_eq!(s.false_positives.len(), 1);
    }

    #[test]
    fn wildcard_absorbs_all_lines() {
        let r = report(&["a.sol"], vec![finding("deprecated-apis", "a.sol", 3), finding("deprecated-apis", "a.sol", 9)]);
        let m = CorpusManifest::parse("a.sol:*:deprecated-apis").unwrap();
        assert!(score(&r, &m).is_perfect());
    }

    #[test]
    fn distribution_two_files_both_hit() {
        let r = report(&["a.sol", "b.sol"], vec![finding("greedy-contract", "a.sol", 2), finding("greedy-contract", "b.sol", 4)]);
        let d = distribution(&r);
        assert_eq!(d["greedy-contract"].count, 2);
        assert_eq!(d["greedy-contract"].formatted(), "2 (100.00%)");
        assert_eq!(d["reentrancy"].formatted(), "0 (0.00%)");
    }

    #[test]
    fn distribution_matches_table_format() {
        let files: Vec<String> = (0..587).map(|i| format!("c{i}.sol")).collect();
        let refs: Vec<&str> = files.iter().map(|s| s.as_str()).collect();
        let findings = files.iter().take(532).map(|f| finding("unspecified-compiler-version", f, 1)).collect();
        let d = distribution(&report(&refs, findings));
        assert_eq!(d["unspecified-compiler-version"].formatted(), "532 (90.63%)");
    }

    proptest! {
        #[test]
        fn file_order_and_clean_files(seed in proptest::collection::vec((0usize..3, 1u32..6, 0usize..20), 0..12)) {
            let ids: Vec<&str> = registry().iter().map(|d| d.id).collect();
            let files = ["a.sol", "b.sol", "c.sol"];
            let findings: Vec<Finding> = seed.iter().map(|(f, l, d)| finding(ids[*d], files[*f], *l)).collect();
            let manifest = CorpusManifest {
                entries: seed.iter().step_by(2).map(|(f, l, d)| ManifestEntry {
                    path: files[*f].into(), line: Some(l + 1), detector: ids[*d].into(),
                }).collect(),
            };
            let fwd = score(&report(&files, findings.clone()), &manifest);
            let mut rev_findings = findings;
            rev_findings.reverse();
            let mut rev_files = files;
            rev_files.reverse();
            let rev = score(&report(&rev_files, rev_findings.clone()), &manifest);
            prop_assert_eq!(&fwd, &rev);
            let more = score(&report(&["a.sol", "b.sol", "c.sol", "z.sol"], rev_findings), &manifest);
            prop_assert_eq!(&fwd.per_detector, &more.per_detector);
            prop_assert_eq!(fwd.overall, more.overall);
            for (k, row) in &fwd.distribution {
                prop_assert_eq!(row.count, more.distribution[k].count);
            }
        }
    }
}
