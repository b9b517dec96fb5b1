//! Fetches a contract through a canned transport, then again from the cache.

use defectscan::cli::fetch::{fetch_contract, FetchSettings, HttpResponse, HttpTransport, TransportError};
use std::cell::Cell;

struct Canned {
    calls: Cell<usize>,
}

impl HttpTransport for Canned {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        self.calls.set(self.calls.get() + 1);
        let body = if url.contains("getsourcecode") {
            r#"{"status":"1","message":"OK","result":[{"SourceCode":"pragma solidity 0.4.25;\ncontract Vault { function() payable {} }"}]}"#
        } else {
            r#"{"jsonrpc":"2.0","id":1,"result":"0x6080604052"}"#
        };
        Ok(HttpResponse {
            status: 200,
            retry_after: None,
            body: body.to_string(),
        })
    }
}

fn main() {
    let dir = std::env::temp_dir().join(format!("defectscan-fetch-{}", std::process::id()));
    let settings = FetchSettings {
        api_base_url: "http://explorer.invalid/api".into(),
        api_key: None,
        cache_dir: dir.clone(),
    };
    let transport = Canned { calls: Cell::new(0) };
    let addr = "0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed";
    let first = fetch_contract(addr, &settings, &transport).unwrap();
    let second = fetch_contract(addr, &settings, &transport).unwrap();
    println!("first: {first:?}");
    println!("second: {second:?}");
    println!("requests: {}", transport.calls.get());
    std::fs::remove_dir_all(dir).ok();
}
