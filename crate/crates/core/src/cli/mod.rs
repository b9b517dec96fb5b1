//! Command-line driver.

pub mod config;
pub mod fetch;

use crate::analysis::{analyze_files, collect_inputs, InputMode};
use crate::corpus::{load_manifest, score, CorpusManifest, ManifestError};
use crate::detectors::{registry, DetectorConfig};
use crate::report::{filter_by_impact, render, ImpactLevel, OutputFormat};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::FileConfig;
use fetch::{fetch_contract, FetchSettings, HttpTransport, UreqTransport, API_KEY_ENV, DEFAULT_API_BASE_URL};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "defectscan", version, about = "Detect contract defects in Solidity source and EVM bytecode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze files or directories
    Analyze(AnalyzeArgs),
    /// Download verified source and deployed bytecode for an address
    Fetch(FetchArgs),
    /// Score detector output against a labeled manifest
    Score(ScoreArgs),
    /// List the detector catalog
    Detectors(DetectorsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Source,
    Bytecode,
}

impl ModeArg {
    fn resolve(self) -> Option<InputMode> {
        match self {
            ModeArg::Auto => None,
            ModeArg::Source => Some(InputMode::Source),
            ModeArg::Bytecode => Some(InputMode::Bytecode),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    /// Only run these detectors (ids or D01..D20, comma-separated)
    #[arg(long, value_delimiter = ',')]
    pub enable: Vec<String>,
    /// Skip these detectors
    #[arg(long, value_delimiter = ',')]
    pub disable: Vec<String>,
    /// Report every tx.origin read, not only those in conditions
    #[arg(long)]
    pub strict_tx_origin: bool,
    /// Also report `!=` against the contract balance
    #[arg(long)]
    pub strict_balance_neq: bool,
    /// Extra deprecated identifiers or member paths, e.g. block.blockhash
    #[arg(long, value_delimiter = ',')]
    pub deprecated_extra: Vec<String>,
    /// INI-style configuration file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: logical CPUs)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// text, json or sarif
    #[arg(long)]
    pub format: Option<String>,
    /// Drop findings less severe than this level (IP1..IP5)
    #[arg(long)]
    pub min_impact: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: ModeArg,
    /// Write the report here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub detectors: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    pub address: String,
    #[arg(long)]
    pub api_base_url: Option<String>,
    /// Cache directory (default: ./contracts)
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Manifest of expected findings
    #[arg(long)]
    pub manifest: PathBuf,
    /// Corpus root (default: the manifest's directory)
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Match on file and detector only, ignoring lines
    #[arg(long)]
    pub wildcard: bool,
    /// text or json
    #[arg(long, default_value = "text")]
    pub format: String,
    #[command(flatten)]
    pub detectors: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct DetectorsArgs {
    /// text or json
    #[arg(long, default_value = "text")]
    pub format: String,
}

/// Error that ends a subcommand with a given exit code.
struct Fail(i32, String);

fn usage(msg: impl std::fmt::Display) -> Fail {
    Fail(EXIT_USAGE, msg.to_string())
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Fail> {
    let Some(p) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(p).map_err(|e| Fail(EXIT_IO, format!("{}: {e}", p.display())))?;
    FileConfig::parse(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn detector_config(args: &DetectorArgs, file: &FileConfig) -> Result<DetectorConfig, Fail> {
    let mut cfg = DetectorConfig::default();
    let enable = if args.enable.is_empty() { file.list("enable") } else { args.enable.clone() };
    let mut disable = file.list("disable");
    disable.extend(args.disable.iter().cloned());
    cfg.apply_selection(&enable, &disable).map_err(usage)?;
    cfg.strict_tx_origin_all_uses = args.strict_tx_origin || file.flag("strict.tx_origin_all_uses").map_err(usage)?;
    cfg.strict_balance_neq = args.strict_balance_neq || file.flag("strict.balance_neq").map_err(usage)?;
    cfg.deprecated_extra = file.list("deprecated.extra");
    cfg.deprecated_extra.extend(args.deprecated_extra.iter().cloned());
    Ok(cfg)
}

fn jobs(args: &DetectorArgs, file: &FileConfig) -> Result<usize, Fail> {
    if let Some(j) = args.jobs {
        return Ok(j.max(1));
    }
    match file.get("jobs") {
        Some(v) => v.parse::<usize>().map(|j| j.max(1)).map_err(|_| usage(format!("config: `jobs` must be a number, got `{v}`"))),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run_analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Fail> {
    let file = load_file_config(args.detectors.config.as_deref())?;
    let cfg = detector_config(&args.detectors, &file)?;
    let format: OutputFormat = args
        .format
        .as_deref()
        .or(file.get("format"))
        .unwrap_or("text")
        .parse()
        .map_err(usage)?;
    let min_impact: ImpactLevel = args
        .min_impact
        .as_deref()
        .or(file.get("min_impact"))
        .unwrap_or("IP5")
        .parse()
        .map_err(usage)?;
    let jobs = jobs(&args.detectors, &file)?;
    let mode = args.mode.resolve();

    let files = collect_inputs(&args.inputs, mode).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    if files.is_empty() {
        return Err(usage("no analyzable inputs (.sol, .hex, .bin) found"));
    }
    let root = match args.inputs.as_slice() {
        [single] if single.is_dir() => Some(single.as_path()),
        _ => None,
    };
    let batch = analyze_files(&files, root, mode, &cfg, jobs).map_err(|e| {
        let code = if e.is_io() { EXIT_IO } else { EXIT_USAGE };
        Fail(code, e.to_string())
    })?;
    for d in &batch.diagnostics {
        let _ = writeln!(err, "{d}");
    }
    let report = filter_by_impact(&batch.report, min_impact);
    let bytes = render(&report, format);
    match &args.output {
        Some(p) => std::fs::write(p, &bytes).map_err(|e| Fail(EXIT_IO, format!("{}: {e}", p.display())))?,
        None => out.write_all(&bytes).map_err(|e| Fail(EXIT_IO, e.to_string()))?,
    }
    if batch.failed_inputs == batch.total_inputs {
        return Ok(EXIT_USAGE);
    }
    Ok(if report.findings.is_empty() { EXIT_CLEAN } else { EXIT_FINDINGS })
}

fn run_fetch(args: &FetchArgs, transport: &dyn HttpTransport, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Fail> {
    let file = load_file_config(args.config.as_deref())?;
    let settings = FetchSettings {
        api_base_url: args
            .api_base_url
            .clone()
            .or_else(|| file.get("fetch.api_base_url").map(str::to_string))
            .unwrap_or_else(|| DEFAULT_API_BASE_URL.to_string()),
        api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
        cache_dir: args
            .cache_dir
            .clone()
            .or_else(|| file.get("fetch.cache_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("contracts")),
    };
    let outcome = fetch_contract(&args.address, &settings, transport).map_err(|e| Fail(e.exit_code(), e.to_string()))?;
    if !outcome.verified {
        let _ = writeln!(err, "notice: {} has no verified source; stored bytecode only", args.address);
    }
    if outcome.from_cache {
        let _ = writeln!(err, "notice: served from cache");
    }
    if let Some(s) = &outcome.source {
        let _ = writeln!(out, "{}", s.display());
    }
    let _ = writeln!(out, "{}", outcome.bytecode.display());
    Ok(EXIT_CLEAN)
}

fn manifest_error(e: ManifestError) -> Fail {
    match e {
        ManifestError::Io { .. } => Fail(EXIT_USAGE, e.to_string()),
        other => usage(other),
    }
}

fn run_score(args: &ScoreArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Fail> {
    let file = load_file_config(args.detectors.config.as_deref())?;
    let cfg = detector_config(&args.detectors, &file)?;
    let jobs = jobs(&args.detectors, &file)?;
    let json = match args.format.to_ascii_lowercase().as_str() {
        "text" => false,
        "json" => true,
        other => return Err(usage(format!("unknown score format `{other}` (expected text or json)"))),
    };
    let mut manifest = load_manifest(&args.manifest).map_err(manifest_error)?;
    let root = args
        .root
        .clone()
        .unwrap_or_else(|| args.manifest.parent().map(Path::to_path_buf).unwrap_or_default());
    let root = if root.as_os_str().is_empty() { PathBuf::from(".") } else { root };
    let manifest_text = std::fs::read_to_string(&args.manifest).unwrap_or_default();
    manifest.check_paths(&manifest_text, &root).map_err(manifest_error)?;
    if args.wildcard {
        manifest = as_wildcard(manifest);
    }
    let files = collect_inputs(std::slice::from_ref(&root), None).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    let batch = analyze_files(&files, Some(&root), None, &cfg, jobs).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    for d in &batch.diagnostics {
        let _ = writeln!(err, "{d}");
    }
    let card = score(&batch.report, &manifest);
    if json {
        let mut s = serde_json::to_string_pretty(&card).expect("score card serializes");
        s.push('\n');
        out.write_all(s.as_bytes()).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    } else {
        out.write_all(card.render_text().as_bytes()).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    }
    Ok(if card.is_perfect() { EXIT_CLEAN } else { EXIT_FINDINGS })
}

fn as_wildcard(m: CorpusManifest) -> CorpusManifest {
    let mut entries = m.entries;
    for e in &mut entries {
        e.line = None;
    }
    entries.sort();
    entries.dedup();
    CorpusManifest { entries }
}

fn run_detectors_cmd(args: &DetectorsArgs, out: &mut dyn Write) -> Result<i32, Fail> {
    let text = match args.format.to_ascii_lowercase().as_str() {
        "text" => {
            let mut s = String::new();
            for d in registry() {
                let fronts: Vec<&str> = d.frontends.iter().map(|f| f.as_str()).collect();
                s.push_str(&format!(
                    "{} {:<32} {:<15} {} {:<36} {}\n",
                    d.code,
                    d.id,
                    d.category.as_str(),
                    d.impact,
                    d.name,
                    fronts.join("+")
                ));
            }
            s
        }
        "json" => {
            let mut s = serde_json::to_string_pretty(registry()).expect("registry serializes");
            s.push('\n');
            s
        }
        other => return Err(usage(format!("unknown format `{other}` (expected text or json)"))),
    };
    out.write_all(text.as_bytes()).map_err(|e| Fail(EXIT_IO, e.to_string()))?;
    Ok(EXIT_CLEAN)
}

/// Runs the CLI with an injected transport for `fetch`. Returns the exit code.
pub fn run_with<I, T>(args: I, transport: &dyn HttpTransport, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_CLEAN };
            let text = e.render().to_string();
            if code == EXIT_CLEAN {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a, out, err),
        Command::Fetch(a) => run_fetch(a, transport, out, err),
        Command::Score(a) => run_score(a, out, err),
        Command::Detectors(a) => run_detectors_cmd(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &UreqTransport::default(), out, err)
}

#[cfg(test)]
mod tests {
    use super::fetch::fixtures::{ok, FixtureTransport};
    use super::*;

    fn cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let t = FixtureTransport::new(vec![]);
        let code = run_with(std::iter::once("defectscan").chain(args.iter().copied()), &t, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let clean = write(dir.path(), "clean.sol", "pragma solidity 0.4.25;\ncontract C { uint x; function s(uint v) external { x = v; } }");
        let dirty = write(dir.path(), "dirty.sol", "pragma solidity ^0.4.25;\ncontract C {}");
        let broken = write(dir.path(), "broken.sol", "contract {");
        let s = |p: &PathBuf| p.to_string_lossy().to_string();
        assert_eq!(cli(&["analyze", &s(&clean)]).0, 0);
        assert_eq!(cli(&["analyze", &s(&dirty)]).0, 1);
        assert_eq!(cli(&["analyze", &s(&dirty), "--min-impact", "IP4"]).0, 0);
        assert_eq!(cli(&["analyze", &s(&broken)]).0, 2);
        assert_eq!(cli(&["analyze", &s(&broken), &s(&dirty)]).0, 1);
        assert_eq!(cli(&["analyze", "/no/such/file.sol"]).0, 3);
        assert_eq!(cli(&["analyze", &s(&clean), "--enable", "nope"]).0, 2);
        assert_eq!(cli(&["analyze", &s(&clean), "--format", "xml"]).0, 2);
        assert_eq!(cli(&["frobnicate"]).0, 2);
    }

    #[test]
    fn config_file_and_output() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "a.sol", "pragma solidity ^0.4.25;\ncontract C {}");
        let conf = write(dir.path(), "d.ini", "disable = D20\n[strict]\nbalance_neq = yes\n");
        let out = dir.path().join("r.json");
        let (code, stdout, _) = cli(&[
            "analyze",
            &src.to_string_lossy(),
            "--config",
            &conf.to_string_lossy(),
            "--format",
            "json",
            "--output",
            &out.to_string_lossy(),
        ]);
        assert_eq!(code, 0);
        assert!(stdout.is_empty());
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
        assert_eq!(v["findings"].as_array().unwrap().len(), 0);
        let bad = write(dir.path(), "bad.ini", "colour = blue\n");
        assert_eq!(cli(&["analyze", &src.to_string_lossy(), "--config", &bad.to_string_lossy()]).0, 2);
    }

    #[test]
    fn score_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.sol", "pragma solidity ^0.4.25;\ncontract C {}");
        let good = write(dir.path(), "good.txt", "a.sol:1:unspecified-compiler-version\n");
        let extra = write(dir.path(), "extra.txt", "a.sol:1:unspecified-compiler-version\na.sol:2:reentrancy\n");
        let unknown = write(dir.path(), "unknown.txt", "a.sol:1:nope\n");
        let missing_file = write(dir.path(), "mf.txt", "zzz.sol:1:reentrancy\n");
        let m = |p: &PathBuf| p.to_string_lossy().to_string();
        assert_eq!(cli(&["score", "--manifest", &m(&good)]).0, 0);
        assert_eq!(cli(&["score", "--manifest", &m(&extra)]).0, 1);
        assert_eq!(cli(&["score", "--manifest", &m(&unknown)]).0, 2);
        assert_eq!(cli(&["score", "--manifest", &m(&missing_file)]).0, 2);
        assert_eq!(cli(&["score", "--manifest", &dir.path().join("none.txt").to_string_lossy()]).0, 2);
        let (code, out, _) = cli(&["score", "--manifest", &m(&good), "--wildcard"]);
        assert_eq!(code, 0);
        assert!(out.contains("1 (100.00%)"));
    }

    #[test]
    fn detectors_catalog() {
        let (code, out, _) = cli(&["detectors"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 20);
        let (_, json, _) = cli(&["detectors", "--format", "json"]);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 20);
    }

    #[test]
    fn fetch_through_cli() {
        let dir = tempfile::tempdir().unwrap();
        let t = FixtureTransport::new(vec![
            ("getsourcecode", ok(r#"{"status":"1","message":"OK","result":[{"SourceCode":""}]}"#)),
            ("eth_getCode", ok(r#"{"jsonrpc":"2.0","id":1,"result":"0x00"}"#)),
        ]);
        let cache = dir.path().to_string_lossy().to_string();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let args = ["defectscan", "fetch", "0x5aaeb6053f3e94c9b9a09f33669435e7ef1beaed", "--cache-dir", &cache, "--api-base-url", "http://x/api"];
        assert_eq!(run_with(args, &t, &mut out, &mut err), 0);
        assert!(String::from_utf8(err).unwrap().contains("no verified source"));
        let mut e2 = Vec::new();
        let bad = ["defectscan", "fetch", "0x5aaeb6053f3e94c9b9a09f33669435e7ef1beae", "--cache-dir", &cache];
        assert_eq!(run_with(bad, &t, &mut Vec::new(), &mut e2), 2);
    }
}
