use super::{ImpactLevel, Report};
use crate::detectors::registry;
use serde_json::{json, Value};
use std::fmt::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Sarif,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "sarif" => Ok(OutputFormat::Sarif),
            other => Err(format!("unknown format `{other}` (expected text, json or sarif)")),
        }
    }
}

pub fn render(report: &Report, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Text => render_text(report).into_bytes(),
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        OutputFormat::Sarif => {
            let mut out = serde_json::to_vec_pretty(&sarif(report)).expect("sarif serializes");
            out.push(b'\n');
            out
        }
    }
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    for f in &report.findings {
        let loc = match (f.line, f.pc) {
            (Some(l), _) => l.to_string(),
            (None, Some(pc)) => format!("0x{pc:04x}"),
            (None, None) => "0".to_string(),
        };
        let _ = write!(out, "{}:{}: [{}][{}] {}", f.file, loc, f.detector, f.impact, f.message);
        if let Some(n) = &f.note {
            let _ = write!(out, " ({n})");
        }
        out.push('\n');
    }
    let counts: Vec<String> = ImpactLevel::ALL
        .iter()
        .map(|i| format!("{i}: {}", report.summary.by_impact.get(i.as_str()).copied().unwrap_or(0)))
        .collect();
    let _ = writeln!(
        out,
        "summary: {} finding(s) in {} input(s) [{}]",
        report.findings.len(),
        report.inputs.len(),
        counts.join(", ")
    );
    out
}

fn sarif_level(i: ImpactLevel) -> &'static str {
    match i {
        ImpactLevel::IP1 | ImpactLevel::IP2 => "error",
        ImpactLevel::IP3 => "warning",
        ImpactLevel::IP4 | ImpactLevel::IP5 => "note",
    }
}

fn sarif(report: &Report) -> Value {
    let rules: Vec<Value> = registry()
        .iter()
        .map(|d| {
            json!({
                "id": d.id,
                "name": d.name,
                "shortDescription": { "text": d.name },
                "help": { "text": d.advice },
                "properties": { "code": d.code, "category": d.category.as_str(), "impact": d.impact.as_str() }
            })
        })
        .collect();
    let results: Vec<Value> = report
        .findings
        .iter()
        .map(|f| {
            let mut region = serde_json::Map::new();
            if let Some(l) = f.line {
                region.insert("startLine".into(), json!(l));
            }
            if let Some(c) = f.column {
                region.insert("startColumn".into(), json!(c));
            }
            if let Some(pc) = f.pc {
                region.insert("byteOffset".into(), json!(pc));
            }
            let mut text = f.message.clone();
            if let Some(n) = &f.note {
                text.push_str(&format!(" ({n})"));
            }
            json!({
                "ruleId": f.detector,
                "ruleIndex": registry().iter().position(|d| d.id == f.detector),
                "level": sarif_level(f.impact),
                "message": { "text": text },
                "locations": [{
                    "physicalLocation": {
                        "artifactLocation": { "uri": f.file },
                        "region": region
                    }
                }],
                "properties": { "impact": f.impact.as_str(), "category": f.category.as_str(), "advice": f.advice }
            })
        })
        .collect();
    json!({
        "$schema": "https://json.schemastore.org/sarif-2.1.0.json",
        "version": "2.1.0",
        "runs": [{
            "tool": { "driver": { "name": report.tool, "version": report.version, "rules": rules } },
            "artifacts": report.inputs.iter().map(|i| json!({
                "location": { "uri": i.path },
                "hashes": { "sha-256": i.sha256 }
            })).collect::<Vec<_>>(),
            "results": results
        }]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{Category, Finding, InputDigest};

    fn one() -> Report {
        Report::new(
            vec![InputDigest::of("a.sol", b"x")],
            vec![Finding {
                detector: "reentrancy".into(),
                category: Category::Security,
                impact: ImpactLevel::IP1,
                file: "a.sol".into(),
                line: Some(6),
                column: Some(3),
                pc: None,
                message: "m".into(),
                advice: "a".into(),
                note: None,
                block: None,
            }],
        )
    }

    #[test]
    fn text_has_one_line_per_finding() {
        let text = String::from_utf8(render(&one(), OutputFormat::Text)).unwrap();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with("summary:")).collect();
        assert_eq!(lines, vec!["a.sol:6: [reentrancy][IP1] m"]);
    }

    #[test]
    fn empty_json_has_nulls_and_zeros() {
        let v: Value = serde_json::from_slice(&render(&Report::empty(), OutputFormat::Json)).unwrap();
        assert_eq!(v["findings"], json!([]));
        assert!(v["summary"]["by_impact"].as_object().unwrap().values().all(|c| c == 0));
        let v: Value = serde_json::from_slice(&render(&one(), OutputFormat::Json)).unwrap();
        assert!(v["findings"][0]["pc"].is_null());
        assert!(v["findings"][0].as_object().unwrap().contains_key("pc"));
    }

    #[test]
    fn sarif_shape_and_determinism() {
        let r = one();
        let a = render(&r, OutputFormat::Sarif);
        assert_eq!(a, render(&r, OutputFormat::Sarif));
        let v: Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(v["runs"][0]["tool"]["driver"]["rules"].as_array().unwrap().len(), 20);
        assert_eq!(v["runs"][0]["results"].as_array().unwrap().len(), 1);
        assert_eq!(v["runs"][0]["results"][0]["level"], "error");
    }
}
