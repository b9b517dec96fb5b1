//! Findings, reports, impact filtering and output rendering.

mod render;

pub use render::{render, OutputFormat};

use crate::detectors::registry;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const TOOL_NAME: &str = "defectscan";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// IP1 is the most severe level, IP5 the least.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ImpactLevel {
    IP1,
    IP2,
    IP3,
    IP4,
    IP5,
}

impl ImpactLevel {
    pub const ALL: [ImpactLevel; 5] = [
        ImpactLevel::IP1,
        ImpactLevel::IP2,
        ImpactLevel::IP3,
        ImpactLevel::IP4,
        ImpactLevel::IP5,
    ];

    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ImpactLevel::IP1 => "IP1",
            ImpactLevel::IP2 => "IP2",
            ImpactLevel::IP3 => "IP3",
            ImpactLevel::IP4 => "IP4",
            ImpactLevel::IP5 => "IP5",
        }
    }
}

impl fmt::Display for ImpactLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown impact level `{0}` (expected IP1..IP5)")]
pub struct UnknownImpact(pub String);

impl FromStr for ImpactLevel {
    type Err = UnknownImpact;

    /// Accepts `IP3`, `ip3` or `3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t
            .strip_prefix("IP")
            .or_else(|| t.strip_prefix("ip"))
            .or_else(|| t.strip_prefix("Ip"))
            .or_else(|| t.strip_prefix("iP"))
            .unwrap_or(t);
        match digits {
            "1" => Ok(ImpactLevel::IP1),
            "2" => Ok(ImpactLevel::IP2),
            "3" => Ok(ImpactLevel::IP3),
            "4" => Ok(ImpactLevel::IP4),
            "5" => Ok(ImpactLevel::IP5),
            _ => Err(UnknownImpact(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Security,
    Availability,
    Performance,
    Maintainability,
    Reusability,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Security,
        Category::Availability,
        Category::Performance,
        Category::Maintainability,
        Category::Reusability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Security => "security",
            Category::Availability => "availability",
            Category::Performance => "performance",
            Category::Maintainability => "maintainability",
            Category::Reusability => "reusability",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One defect instance. Source findings carry `line`/`column`, bytecode
/// findings carry `pc`/`block`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub detector: String,
    pub category: Category,
    pub impact: ImpactLevel,
    pub file: String,
    pub line: Option<u32>,
    pub column: Option<u32>,
    pub pc: Option<usize>,
    pub message: String,
    pub advice: String,
    pub note: Option<String>,
    pub block: Option<usize>,
}

impl Finding {
    /// Line for source findings, pc for bytecode findings.
    pub fn position(&self) -> u64 {
        self.line.map(u64::from).or(self.pc.map(|p| p as u64)).unwrap_or(0)
    }

    pub fn identity(&self) -> (&str, &str, u64) {
        (&self.detector, &self.file, self.position())
    }

    fn sort_key(&self) -> (&str, u64, &str, Option<u32>, &str) {
        (&self.file, self.position(), &self.detector, self.column, &self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &str, contents: &[u8]) -> Self {
        use sha2::{Digest, Sha256};
        InputDigest {
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(contents)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub by_detector: BTreeMap<String, usize>,
    pub by_impact: BTreeMap<String, usize>,
    pub by_category: BTreeMap<String, usize>,
}

impl Summary {
    /// Counts per detector, impact and category; every key is present.
    pub fn of(findings: &[Finding]) -> Self {
        let mut s = Summary::default();
        for d in registry() {
            s.by_detector.insert(d.id.to_string(), 0);
        }
        for i in ImpactLevel::ALL {
            s.by_impact.insert(i.to_string(), 0);
        }
        for c in Category::ALL {
            s.by_category.insert(c.to_string(), 0);
        }
        for f in findings {
            *s.by_detector.entry(f.detector.clone()).or_default() += 1;
            *s.by_impact.entry(f.impact.to_string()).or_default() += 1;
            *s.by_category.entry(f.category.to_string()).or_default() += 1;
        }
        s
    }

    pub fn total(&self) -> usize {
        self.by_impact.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub findings: Vec<Finding>,
    pub summary: Summary,
}

/// Sorts and merges duplicates by identity, keeping the first occurrence
/// and any note a later duplicate carries.
pub fn normalize(findings: &mut Vec<Finding>) {
    findings.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then_with(|| (a.impact, a.category, a.pc, a.block).cmp(&(b.impact, b.category, b.pc, b.block)))
            .then_with(|| (&a.note, &a.advice).cmp(&(&b.note, &b.advice)))
    });
    let mut out: Vec<Finding> = Vec::with_capacity(findings.len());
    for f in findings.drain(..) {
        if let Some(last) = out.last_mut() {
            if last.identity() == f.identity() {
                if last.note.is_none() {
                    last.note = f.note;
                }
                continue;
            }
        }
        out.push(f);
    }
    *findings = out;
}

impl Report {
    pub fn new(mut inputs: Vec<InputDigest>, mut findings: Vec<Finding>) -> Self {
        inputs.sort();
        inputs.dedup();
        normalize(&mut findings);
        let summary = Summary::of(&findings);
        Report {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            inputs,
            findings,
            summary,
        }
    }

    pub fn empty() -> Self {
        Report::new(Vec::new(), Vec::new())
    }

    /// Combines per-file reports; the result does not depend on their order.
    pub fn merge<I: IntoIterator<Item = Report>>(parts: I) -> Self {
        let mut inputs = Vec::new();
        let mut findings = Vec::new();
        for r in parts {
            inputs.extend(r.inputs);
            findings.extend(r.findings);
        }
        Report::new(inputs, findings)
    }

    /// Keeps findings of the named detectors only.
    pub fn retain_detectors(&self, ids: &[&str]) -> Report {
        let findings = self.findings.iter().filter(|f| ids.contains(&f.detector.as_str())).cloned().collect();
        Report::new(self.inputs.clone(), findings)
    }
}

/// Keeps findings at `min` or more severe (numerically lower or equal).
pub fn filter_by_impact(report: &Report, min: ImpactLevel) -> Report {
    let findings: Vec<Finding> = report.findings.iter().filter(|f| f.impact <= min).cloned().collect();
    Report {
        tool: report.tool.clone(),
        version: report.version.clone(),
        inputs: report.inputs.clone(),
        summary: Summary::of(&findings),
        findings,
    }
}

/// Parses a level string and filters; unknown levels are a usage error.
pub fn filter_by_impact_str(report: &Report, min: &str) -> Result<Report, UnknownImpact> {
    Ok(filter_by_impact(report, min.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn finding(det: &str, impact: ImpactLevel, file: &str, line: u32) -> Finding {
        Finding {
            detector: det.to_string(),
            category: Category::Security,
            impact,
            file: file.to_string(),
            line: Some(line),
            column: Some(1),
            pc: None,
            message: format!("{det} at {line}"),
            advice: String::new(),
            note: None,
            block: None,
        }
    }

    #[test]
    fn impact_parsing() {
        assert_eq!("ip3".parse::<ImpactLevel>().unwrap(), ImpactLevel::IP3);
        assert_eq!("IP1".parse::<ImpactLevel>().unwrap(), ImpactLevel::IP1);
        assert_eq!("5".parse::<ImpactLevel>().unwrap(), ImpactLevel::IP5);
        assert!("IP6".parse::<ImpactLevel>().is_err());
        assert!(filter_by_impact_str(&Report::empty(), "high").is_err());
    }

    #[test]
    fn duplicates_merge_by_identity() {
        let mut a = finding("reentrancy", ImpactLevel::IP1, "a.sol", 3);
        let mut b = a.clone();
        b.column = Some(9);
        b.note = Some("n".into());
        a.column = Some(2);
        let r = Report::new(vec![], vec![b, a, finding("reentrancy", ImpactLevel::IP1, "a.sol", 4)]);
        assert_eq!(r.findings.len(), 2);
        assert_eq!(r.findings[0].column, Some(2));
        assert_eq!(r.findings[0].note.as_deref(), Some("n"));
    }

    #[test]
    fn empty_summary_has_every_key() {
        let s = Report::empty().summary;
        assert_eq!(s.by_detector.len(), 20);
        assert_eq!(s.by_impact.len(), 5);
        assert_eq!(s.by_category.len(), 5);
        assert_eq!(s.total(), 0);
    }

    fn arb_finding() -> impl Strategy<Value = Finding> {
        (0usize..20, 0usize..5, 0u32..3, 1u32..30).prop_map(|(d, i, f, l)| {
            let desc = &registry()[d];
            let mut x = finding(desc.id, ImpactLevel::ALL[i], &format!("f{f}.sol"), l);
            x.note = (i % 2 == 0).then(|| format!("n{i}"));
            x.category = desc.category;
            x
        })
    }

    proptest! {
        #[test]
        fn filter_idempotent_and_commutes(fs in proptest::collection::vec(arb_finding(), 0..40), lvl in 0usize..5, keep in 0usize..20) {
            let r = Report::new(vec![], fs);
            let min = ImpactLevel::ALL[lvl];
            let once = filter_by_impact(&r, min);
            prop_assert_eq!(filter_by_impact(&once, min), once.clone());
            let ids: Vec<&str> = registry().iter().take(keep).map(|d| d.id).collect();
            prop_assert_eq!(filter_by_impact(&r.retain_detectors(&ids), min), once.retain_detectors(&ids));
            prop_assert!(once.findings.iter().all(|f| f.impact <= min));
        }

        #[test]
        fn merge_is_order_insensitive(fs in proptest::collection::vec(arb_finding(), 0..30), split in 0usize..30) {
            let k = split.min(fs.len());
            let a = Report::new(vec![], fs[..k].to_vec());
            let b = Report::new(vec![], fs[k..].to_vec());
            prop_assert_eq!(Report::merge([a.clone(), b.clone()]), Report::merge([b, a]));
        }

        #[test]
        fn json_round_trips(fs in proptest::collection::vec(arb_finding(), 0..20)) {
            let r = Report::new(vec![InputDigest::of("x.sol", b"contract C {}")], fs);
            let bytes = render(&r, OutputFormat::Json);
            let back: Report = serde_json::from_slice(&bytes).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
