#![allow(dead_code)]

use proptest::test_runner::{RngAlgorithm, TestRng};
use proptest::prelude::Rng;
use std::fmt::Write;
use std::path::{Path, PathBuf};

pub fn rng(seed: u8) -> TestRng {
    TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32])
}

fn pick(rng: &mut TestRng, n: u64) -> u64 {
    rng.next_u64() % n
}

fn address(rng: &mut TestRng) -> String {
    let mut b = [0u8; 20];
    rng.fill_bytes(&mut b);
    defectscan::evm::eip55_checksum(&hex::encode(b)).unwrap()
}

/// One member function in one of several shapes, some defective.
fn function(rng: &mut TestRng, i: usize, out: &mut String) {
    match pick(rng, 12) {
        0 => writeln!(out, "    function deposit{i}() payable {{\n        balances[msg.sender] += msg.value;\n        total += msg.value;\n    }}").unwrap(),
        1 => writeln!(out, "    function withdraw{i}() {{\n        uint amount = balances[msg.sender];\n        if (amount > 0) {{\n            msg.sender.call.value(amount)();\n            balances[msg.sender] = 0;\n        }}\n    }}").unwrap(),
        2 => writeln!(out, "    function pay{i}(uint n) onlyOwner {{\n        for (uint j = 0; j < members.length; j++) {{\n            if (j > n) break;\n            members[j].transfer(1 finney);\n        }}\n    }}").unwrap(),
        3 => writeln!(out, "    function lottery{i}() returns (uint) {{\n        uint seed = uint(keccak256(block.timestamp, {i}));\n        if (seed % 2 == 0) {{\n            return seed;\n        }}\n        return 0;\n    }}").unwrap(),
        4 => writeln!(out, "    function sum{i}(uint[] values) public returns (uint s) {{\n        for (uint k = 0; k < values.length; k++) {{\n            s += values[k];\n        }}\n    }}").unwrap(),
        5 => writeln!(out, "    function set{i}(uint a, uint b) external {{\n        uint unused = a * 2;\n        total = b;\n    }}").unwrap(),
        6 => writeln!(out, "    function send{i}(address to) onlyOwner {{\n        to.send(1 ether);\n        emit Paid(to, 1 ether);\n    }}").unwrap(),
        7 => writeln!(out, "    function check{i}() constant returns (bool) {{\n        return this.balance == {i} ether;\n    }}").unwrap(),
        8 => writeln!(out, "    function hash{i}(bytes data) external returns (bytes32) {{\n        return sha3(data);\n    }}").unwrap(),
        9 => writeln!(out, "    function target{i}() {{\n        address t = {};\n        t.transfer(1 wei);\n    }}", address(rng)).unwrap(),
        10 => writeln!(out, "    function count{i}() returns (uint c) {{\n        for (uint8 x = 0; x < 10; x++) {{\n            c += x;\n        }}\n    }}").unwrap(),
        _ => writeln!(out, "    function get{i}(address who) external view returns (uint) {{\n        return balances[who];\n    }}").unwrap(),
    }
}

/// A contract of roughly `target_lines` lines.
pub fn synthetic_contract(rng: &mut TestRng, name: &str, target_lines: usize) -> String {
    let mut out = String::new();
    if pick(rng, 4) == 0 {
        out.push_str("pragma solidity 0.4.25;\n\n");
    } else {
        out.push_str("pragma solidity ^0.4.24;\n\n");
    }
    writeln!(out, "contract {name} {{").unwrap();
    out.push_str("    address owner;\n    uint total;\n    address[] members;\n    mapping(address => uint) balances;\n\n");
    out.push_str("    event Paid(address to, uint amount);\n\n");
    out.push_str("    modifier onlyOwner {\n        require(msg.sender == owner);\n        _;\n    }\n\n");
    let mut i = 0;
    while out.lines().count() + 2 < target_lines {
        function(rng, i, &mut out);
        out.push('\n');
        i += 1;
    }
    out.push_str("}\n");
    out
}

/// Writes `files` contracts of about `lines` lines each. Returns their paths and total line count.
pub fn write_corpus(dir: &Path, seed: u8, files: usize, lines: usize) -> (Vec<PathBuf>, usize) {
    let mut rng = rng(seed);
    let mut paths = Vec::new();
    let mut total = 0;
    for n in 0..files {
        let text = synthetic_contract(&mut rng, &format!("Synthetic{n}"), lines);
        total += text.lines().count();
        let p = dir.join(format!("c{n:04}.sol"));
        std::fs::write(&p, text).unwrap();
        paths.push(p);
    }
    (paths, total)
}
