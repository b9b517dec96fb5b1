use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_defectscan"))
}

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn analyze_listing_exit_and_formats() {
    let l1 = s(&corpus("listings/listing1.sol"));
    let o = run(&["analyze", &l1]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("listing1.sol:21: [strict-balance-equality][IP2]"));
    assert!(text.lines().last().unwrap().starts_with("summary: 13 finding(s) in 1 input(s)"));

    let o = run(&["analyze", &l1, "--format", "sarif"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["version"], "2.1.0");
    assert_eq!(v["runs"][0]["results"].as_array().unwrap().len(), 13);

    let o = run(&["analyze", &l1, "--format", "json", "--min-impact", "IP1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let f = v["findings"].as_array().unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0]["detector"], "transaction-state-dependency");
    assert!(f[0]["pc"].is_null());
}

#[test]
fn analyze_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.sol");
    std::fs::write(&clean, "pragma solidity 0.4.25;\ncontract C {\n uint x;\n function set(uint v) external { x = v; }\n}\n").unwrap();
    assert_eq!(run(&["analyze", &s(&clean)]).status.code(), Some(0));
    assert_eq!(run(&["analyze", &s(&dir.path().join("missing.sol"))]).status.code(), Some(3));
    assert_eq!(run(&["analyze"]).status.code(), Some(2));
    let bad = dir.path().join("bad.sol");
    std::fs::write(&bad, "contract {").unwrap();
    let o = run(&["analyze", &s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.sol:1:"));
}

#[test]
fn bytecode_mode_and_directory_input() {
    let o = run(&["analyze", &s(&corpus("bytecode")), "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let files: Vec<&str> = v["findings"].as_array().unwrap().iter().map(|f| f["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["balance_equality.hex", "erc20_partial.hex", "hard_code_address.hex", "nested_call_unbounded.hex"]);
    assert!(v["findings"][0]["line"].is_null());
    assert_eq!(v["inputs"].as_array().unwrap().len(), 6);

    let dir = tempfile::tempdir().unwrap();
    let odd = dir.path().join("code.txt");
    std::fs::copy(corpus("bytecode/balance_equality.hex"), &odd).unwrap();
    assert_eq!(run(&["analyze", &s(&odd)]).status.code(), Some(2));
    assert_eq!(run(&["analyze", &s(&odd), "--mode", "bytecode"]).status.code(), Some(1));
}

#[test]
fn score_subcommand() {
    let o = run(&["score", "--manifest", &s(&corpus("bytecode/manifest.txt"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    let dir = tempfile::tempdir().unwrap();
    for f in ["balance_equality.hex", "clean.hex"] {
        std::fs::copy(corpus("bytecode").join(f), dir.path().join(f)).unwrap();
    }
    let m = dir.path().join("m.txt");
    std::fs::write(&m, "balance_equality.hex:*:strict-balance-equality\n").unwrap();
    assert_eq!(run(&["score", "--manifest", &s(&m)]).status.code(), Some(0));
    std::fs::write(&m, "balance_equality.hex:*:strict-balance-equality\nclean.hex:*:nested-call\n").unwrap();
    assert_eq!(run(&["score", "--manifest", &s(&m)]).status.code(), Some(1));
    assert_eq!(run(&["score", "--manifest", &s(&dir.path().join("none.txt"))]).status.code(), Some(2));
    std::fs::write(&m, "balance_equality.hex:seven:strict-balance-equality\n").unwrap();
    let o = run(&["score", "--manifest", &s(&m)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let o = run(&["score", "--manifest", &s(&corpus("bytecode/manifest.txt")), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["overall"]["precision"], 1.0);
    assert_eq!(v["distribution"]["nested-call"]["count"], 1);
}

/// Serves `responses` in order, one per connection, and returns the request lines.
fn serve(responses: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/api", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for resp in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut first = String::new();
            reader.read_line(&mut first).unwrap();
            loop {
                let mut l = String::new();
                if reader.read_line(&mut l).unwrap() == 0 || l == "\r\n" {
                    break;
                }
            }
            seen.push(first.trim().to_string());
            stream.write_all(resp.as_bytes()).unwrap();
        }
        seen
    });
    (base, handle)
}

fn http(status: &str, extra: &str, body: &str) -> String {
    format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n{extra}\r\n{body}",
        body.len()
    )
}

const ADDR: &str = "0x5aaeb6053f3e94c9b9a09f33669435e7ef1beaed";

#[test]
fn fetch_unverified_then_cached() {
    let cache = tempfile::tempdir().unwrap();
    let (base, server) = serve(vec![
        http("200 OK", "", r#"{"status":"1","message":"OK","result":[{"SourceCode":"","ABI":"Contract source code not verified"}]}"#),
        http("200 OK", "", r#"{"jsonrpc":"2.0","id":1,"result":"0x6001600055"}"#),
    ]);
    let args = ["fetch", ADDR, "--api-base-url", &base, "--cache-dir", &s(cache.path())];
    let o = bin().args(args).env("DEFECTSCAN_API_KEY", "secret").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no verified source"));
    let requests = server.join().unwrap();
    assert!(requests[0].contains("action=getsourcecode") && requests[0].contains("apikey=secret"));
    assert!(requests[1].contains("eth_getCode"));
    let files: Vec<String> = std::fs::read_dir(cache.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(files, [format!("{ADDR}.hex")]);

    let again = run(&["fetch", ADDR, "--api-base-url", "http://127.0.0.1:9/api", "--cache-dir", &s(cache.path())]);
    assert_eq!(again.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&again.stderr).contains("cache"));
}

#[test]
fn fetch_rate_limit_and_bad_address() {
    let cache = tempfile::tempdir().unwrap();
    let (base, server) = serve(vec![http("429 Too Many Requests", "Retry-After: 5\r\n", "{}")]);
    let o = run(&["fetch", ADDR, "--api-base-url", &base, "--cache-dir", &s(cache.path())]);
    server.join().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("retry after 5 s"));
    assert_eq!(std::fs::read_dir(cache.path()).unwrap().count(), 0);

    let o = run(&["fetch", &ADDR[..41], "--cache-dir", &s(cache.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["fetch", ADDR, "--api-base-url", "http://127.0.0.1:9/api", "--cache-dir", &s(cache.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn detectors_catalog_lines() {
    let o = run(&["detectors"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert!(text.lines().next().unwrap().starts_with("D01 unchecked-external-calls"));
    assert!(text.contains("source+bytecode"));
}
