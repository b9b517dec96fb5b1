//! Explorer-API contract fetcher with an on-disk cache keyed by address.

use crate::evm::{decode_hex, eip55_is_valid};
use serde_json::Value;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const API_KEY_ENV: &str = "DEFECTSCAN_API_KEY";
pub const DEFAULT_API_BASE_URL: &str = "https://api.etherscan.io/api";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub retry_after: Option<String>,
    pub body: String,
}

#[derive(Debug, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        UreqTransport {
            agent: ureq::AgentBuilder::new().timeout(std::time::Duration::from_secs(30)).build(),
        }
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let resp = match self.agent.get(url).call() {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(e) => return Err(TransportError(e.to_string())),
        };
        let status = resp.status();
        let retry_after = resp.header("Retry-After").map(str::to_string);
        let body = resp.into_string().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse {
            status,
            retry_after,
            body,
        })
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("malformed address `{0}`: expected 0x followed by 40 hex digits")]
    MalformedAddress(String),
    #[error("address `{0}` fails its EIP-55 checksum")]
    BadChecksum(String),
    #[error("rate limited by {url}; retry after {retry_after}")]
    RateLimited { url: String, retry_after: String },
    #[error("request to {url} failed: {message}")]
    Http { url: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FetchError {
    /// Usage errors exit 2, everything else 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            FetchError::MalformedAddress(_) | FetchError::BadChecksum(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchSettings {
    pub api_base_url: String,
    pub api_key: Option<String>,
    pub cache_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    pub source: Option<PathBuf>,
    pub bytecode: PathBuf,
    pub from_cache: bool,
    pub verified: bool,
}

/// Lowercase `0x`-prefixed form of a well-formed address.
pub fn normalize_address(addr: &str) -> Result<String, FetchError> {
    let a = addr.trim();
    let body = a.strip_prefix("0x").or_else(|| a.strip_prefix("0X"));
    match body {
        Some(b) if b.len() == 40 && b.bytes().all(|c| c.is_ascii_hexdigit()) => {}
        _ => return Err(FetchError::MalformedAddress(addr.to_string())),
    }
    if eip55_is_valid(a) == Ok(false) {
        return Err(FetchError::BadChecksum(addr.to_string()));
    }
    Ok(format!("0x{}", a[2..].to_ascii_lowercase()))
}

fn cache_paths(dir: &Path, addr: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{addr}.sol")), dir.join(format!("{addr}.hex")))
}

fn request(transport: &dyn HttpTransport, url: &str) -> Result<Value, FetchError> {
    let redacted = url.split("&apikey=").next().unwrap_or(url).to_string();
    let resp = transport.get(url).map_err(|e| FetchError::Http {
        url: redacted.clone(),
        message: e.0,
    })?;
    if resp.status == 429 {
        return Err(FetchError::RateLimited {
            url: redacted,
            retry_after: resp.retry_after.map_or_else(|| "a few seconds".to_string(), |s| format!("{s} s")),
        });
    }
    if !(200..300).contains(&resp.status) {
        return Err(FetchError::Http {
            url: redacted,
            message: format!("HTTP status {}", resp.status),
        });
    }
    let v: Value = serde_json::from_str(&resp.body).map_err(|e| FetchError::Http {
        url: redacted.clone(),
        message: format!("invalid JSON: {e}"),
    })?;
    let text = v.get("result").and_then(Value::as_str).unwrap_or("");
    if v.get("status").and_then(Value::as_str) == Some("0") && text.to_ascii_lowercase().contains("rate limit") {
        return Err(FetchError::RateLimited {
            url: redacted,
            retry_after: resp.retry_after.map_or_else(|| "a few seconds".to_string(), |s| format!("{s} s")),
        });
    }
    if let Some(err) = v.get("error") {
        return Err(FetchError::Http {
            url: redacted,
            message: err.to_string(),
        });
    }
    Ok(v)
}

/// Source text from a `getsourcecode` result entry. Multi-file JSON inputs are
/// concatenated in key order.
fn extract_source(entry: &Value) -> Option<String> {
    let raw = entry.get("SourceCode")?.as_str()?.trim();
    if raw.is_empty() {
        return None;
    }
    let json_text = raw.strip_prefix("{{").and_then(|r| r.strip_suffix("}}")).map(|r| format!("{{{r}}}"));
    let parsed: Option<Value> = json_text
        .as_deref()
        .or_else(|| raw.starts_with('{').then_some(raw))
        .and_then(|t| serde_json::from_str(t).ok());
    let Some(parsed) = parsed else { return Some(raw.to_string()) };
    let sources = parsed.get("sources").unwrap_or(&parsed).as_object()?;
    let mut out = String::new();
    for (name, file) in sources {
        let content = file.get("content").and_then(Value::as_str).unwrap_or("");
        out.push_str(&format!("// file: {name}\n{content}\n"));
    }
    Some(out)
}

fn write(path: &Path, contents: &str) -> Result<(), FetchError> {
    std::fs::write(path, contents).map_err(|source| FetchError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Fetches verified source (when available) and deployed bytecode for
/// `address` into the cache. A cached address makes no request.
pub fn fetch_contract(address: &str, settings: &FetchSettings, transport: &dyn HttpTransport) -> Result<FetchOutcome, FetchError> {
    let addr = normalize_address(address)?;
    let (sol, hex_path) = cache_paths(&settings.cache_dir, &addr);
    if hex_path.is_file() {
        let source = sol.is_file().then_some(sol);
        return Ok(FetchOutcome {
            verified: source.is_some(),
            source,
            bytecode: hex_path,
            from_cache: true,
        });
    }
    let key = settings.api_key.as_deref().map(|k| format!("&apikey={k}")).unwrap_or_default();
    let base = settings.api_base_url.trim_end_matches('?');
    let src_url = format!("{base}?module=contract&action=getsourcecode&address={addr}{key}");
    let code_url = format!("{base}?module=proxy&action=eth_getCode&address={addr}&tag=latest{key}");

    let src_json = request(transport, &src_url)?;
    let source_text = src_json
        .get("result")
        .and_then(Value::as_array)
        .and_then(|a| a.first())
        .and_then(extract_source);
    let code_json = request(transport, &code_url)?;
    let code_hex = code_json.get("result").and_then(Value::as_str).unwrap_or("").to_string();
    decode_hex(&code_hex).map_err(|e| FetchError::Http {
        url: code_url.split("&apikey=").next().unwrap_or("").to_string(),
        message: format!("bytecode result is not hex: {e}"),
    })?;

    std::fs::create_dir_all(&settings.cache_dir).map_err(|source| FetchError::Io {
        path: settings.cache_dir.display().to_string(),
        source,
    })?;
    let source = match source_text {
        Some(text) => {
            write(&sol, &text)?;
            Some(sol)
        }
        None => None,
    };
    write(&hex_path, &format!("{code_hex}\n"))?;
    Ok(FetchOutcome {
        verified: source.is_some(),
        source,
        bytecode: hex_path,
        from_cache: false,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use std::cell::RefCell;

    /// Replays canned responses by URL substring and records every request.
    pub struct FixtureTransport {
        pub routes: Vec<(&'static str, HttpResponse)>,
        pub log: RefCell<Vec<String>>,
    }

    impl FixtureTransport {
        pub fn new(routes: Vec<(&'static str, HttpResponse)>) -> Self {
            FixtureTransport {
                routes,
                log: RefCell::new(Vec::new()),
            }
        }
    }

    impl HttpTransport for FixtureTransport {
        fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
            self.log.borrow_mut().push(url.to_string());
            self.routes
                .iter()
                .find(|(k, _)| url.contains(k))
                .map(|(_, r)| r.clone())
                .ok_or_else(|| TransportError(format!("no fixture for {url}")))
        }
    }

    pub fn ok(body: &str) -> HttpResponse {
        HttpResponse {
            status: 200,
            retry_after: None,
            body: body.to_string(),
        }
    }
}
