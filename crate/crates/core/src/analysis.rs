//! Single-file and multi-file analysis drivers.

use crate::detectors::{run_detectors, AnalysisContext, BytecodeFacts, DetectorConfig, SourceFacts};
use crate::evm::{decode_hex, load_bytecode, BytecodeError};
use crate::report::{Finding, InputDigest, Report};
use crate::source::{parse, tokenize, DiagnosticLevel, FileId};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    Source,
    Bytecode,
}

impl InputMode {
    /// `.sol` is source; `.hex` and `.bin` are bytecode.
    pub fn from_extension(path: &Path) -> Option<InputMode> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "sol" => Some(InputMode::Source),
            "hex" | "bin" => Some(InputMode::Bytecode),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl InputError {
    pub fn is_io(&self) -> bool {
        matches!(self, InputError::Io { .. })
    }
}

/// Outcome for one input file.
#[derive(Debug, Clone, Default)]
pub struct FileAnalysis {
    pub input: Option<InputDigest>,
    pub findings: Vec<Finding>,
    /// Parser warnings and errors, already formatted with the file path.
    pub diagnostics: Vec<String>,
    pub skipped: Vec<&'static str>,
    /// The input could not be analyzed (lex or parse error, bad hex).
    pub failed: bool,
}

pub fn analyze_source(path: &str, text: &str, config: &DetectorConfig) -> FileAnalysis {
    let mut out = FileAnalysis {
        input: Some(InputDigest::of(path, text.as_bytes())),
        ..FileAnalysis::default()
    };
    let tokens = match tokenize(text, FileId(0)) {
        Ok(t) => t,
        Err(e) => {
            out.diagnostics.push(format!("{path}: error: {e}"));
            out.failed = true;
            return out;
        }
    };
    let parsed = parse(&tokens);
    for d in &parsed.diagnostics {
        let level = if d.level == DiagnosticLevel::Error { "error" } else { "warning" };
        out.diagnostics.push(format!("{path}:{}:{}: {level}: {}", d.span.line, d.span.column, d.message));
    }
    if parsed.has_errors() {
        out.failed = true;
        return out;
    }
    let facts = SourceFacts::build(path, text, &parsed.unit);
    let (findings, skipped) = run_detectors(&AnalysisContext::for_source(&facts, config));
    out.findings = findings;
    out.skipped = skipped;
    out
}

/// `raw` is the file content: hex text, or raw bytes for a `.bin` that is not hex.
pub fn analyze_bytecode(path: &str, raw: &[u8], config: &DetectorConfig) -> FileAnalysis {
    let mut out = FileAnalysis {
        input: Some(InputDigest::of(path, raw)),
        ..FileAnalysis::default()
    };
    let decoded = if path.ends_with(".bin") {
        load_bytecode(raw)
    } else {
        std::str::from_utf8(raw).map_err(|_| BytecodeError::InvalidHex('\u{fffd}')).and_then(decode_hex)
    };
    let code = match decoded {
        Ok(c) => c,
        Err(e) => {
            out.diagnostics.push(format!("{path}: error: invalid bytecode hex: {e}"));
            out.failed = true;
            return out;
        }
    };
    let facts = BytecodeFacts::build(path, code);
    let (findings, skipped) = run_detectors(&AnalysisContext::for_bytecode(&facts, config));
    out.findings = findings;
    out.skipped = skipped;
    out
}

/// Expands directories into the files whose extension fits `mode` (any of
/// `.sol`/`.hex`/`.bin` when `mode` is `None`), sorted. Explicit file
/// arguments are kept as given.
pub fn collect_inputs(paths: &[PathBuf], mode: Option<InputMode>) -> Result<Vec<PathBuf>, InputError> {
    let mut out = Vec::new();
    for p in paths {
        let meta = std::fs::metadata(p).map_err(|source| InputError::Io {
            path: p.display().to_string(),
            source,
        })?;
        if !meta.is_dir() {
            out.push(p.clone());
            continue;
        }
        let mut found = Vec::new();
        for entry in walkdir::WalkDir::new(p).sort_by_file_name() {
            let entry = entry.map_err(|e| InputError::Io {
                path: p.display().to_string(),
                source: e.into(),
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let wanted = match mode {
                Some(InputMode::Source) => InputMode::from_extension(entry.path()) == Some(InputMode::Source),
                Some(InputMode::Bytecode) => InputMode::from_extension(entry.path()) == Some(InputMode::Bytecode),
                None => InputMode::from_extension(entry.path()).is_some(),
            };
            if wanted {
                found.push(entry.into_path());
            }
        }
        out.extend(found);
    }
    Ok(out)
}

/// Merged outcome over many inputs.
#[derive(Debug, Clone)]
pub struct BatchAnalysis {
    pub report: Report,
    pub diagnostics: Vec<String>,
    pub failed_inputs: usize,
    pub total_inputs: usize,
}

/// Path as it appears in findings: relative to `root` when given.
pub fn display_path(path: &Path, root: Option<&Path>) -> String {
    let rel = root.and_then(|r| path.strip_prefix(r).ok()).unwrap_or(path);
    rel.to_string_lossy().replace('\\', "/")
}

pub fn analyze_file(path: &Path, display: &str, mode: Option<InputMode>, config: &DetectorConfig) -> Result<FileAnalysis, InputError> {
    let mode = mode.or_else(|| InputMode::from_extension(path)).ok_or_else(|| InputError::Invalid {
        path: display.to_string(),
        message: "cannot infer input mode from extension; use --mode".into(),
    })?;
    let bytes = std::fs::read(path).map_err(|source| InputError::Io {
        path: display.to_string(),
        source,
    })?;
    Ok(match mode {
        InputMode::Source => match String::from_utf8(bytes) {
            Ok(text) => analyze_source(display, &text, config),
            Err(e) => FileAnalysis {
                input: Some(InputDigest::of(display, e.as_bytes())),
                diagnostics: vec![format!("{display}: error: source is not UTF-8")],
                failed: true,
                ..FileAnalysis::default()
            },
        },
        InputMode::Bytecode => analyze_bytecode(display, &bytes, config),
    })
}

/// Analyzes `files` on `jobs` threads. The merged report does not depend on `jobs`.
pub fn analyze_files(
    files: &[PathBuf],
    root: Option<&Path>,
    mode: Option<InputMode>,
    config: &DetectorConfig,
    jobs: usize,
) -> Result<BatchAnalysis, InputError> {
    let work = |p: &PathBuf| analyze_file(p, &display_path(p, root), mode, config);
    let results: Vec<Result<FileAnalysis, InputError>> = if jobs <= 1 {
        files.iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| InputError::Invalid {
                path: String::new(),
                message: e.to_string(),
            })?;
        pool.install(|| files.par_iter().map(work).collect())
    };
    let mut inputs = Vec::new();
    let mut findings = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failed_inputs = 0;
    for r in results {
        let fa = r?;
        if fa.failed {
            failed_inputs += 1;
        }
        inputs.extend(fa.input);
        findings.extend(fa.findings);
        diagnostics.extend(fa.diagnostics);
    }
    Ok(BatchAnalysis {
        report: Report::new(inputs, findings),
        diagnostics,
        failed_inputs,
        total_inputs: files.len(),
    })
}
