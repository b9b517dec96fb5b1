//! Assembles two loops that send Ether and checks which one the bytecode
//! nested-call detector reports.

use defectscan::analysis::analyze_bytecode;
use defectscan::detectors::DetectorConfig;
use defectscan::evm::assemble;

const UNBOUNDED: &str = include_str!("../corpus/bytecode/nested_call_unbounded.asm");
const BOUNDED: &str = include_str!("../corpus/bytecode/nested_call_bounded.asm");

fn main() {
    let config = DetectorConfig::default();
    for (name, asm) in [("unbounded", UNBOUNDED), ("bounded", BOUNDED)] {
        let code = assemble(asm).expect("probe assembles");
        let hex_text = format!("0x{}", hex::encode(&code));
        let result = analyze_bytecode(&format!("{name}.hex"), hex_text.as_bytes(), &config);
        println!("{name}: {} byte(s), {} finding(s)", code.len(), result.findings.len());
        for f in &result.findings {
            println!("  pc 0x{:04x} block {:?} [{}] {}", f.pc.unwrap_or(0), f.block, f.detector, f.message);
        }
    }
}
