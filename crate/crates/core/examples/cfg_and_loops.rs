//! Disassembles a counted loop, then prints its blocks, dominator tree and
//! natural loops.

use defectscan::evm::{assemble, build_cfg, disassemble, serialize};

fn main() {
    let code = assemble(
        "PUSH1 0x00 \
         head: JUMPDEST DUP1 PUSH1 0x05 SWAP1 LT ISZERO PUSH1 @done JUMPI \
         PUSH1 0x01 ADD PUSH1 @head JUMP \
         done: JUMPDEST STOP",
    )
    .unwrap();
    let ins = disassemble(&code);
    assert_eq!(serialize(&ins), code);
    let cfg = build_cfg(&ins);
    for b in &cfg.blocks {
        let text: Vec<String> = b.instructions.iter().map(|i| i.to_string()).collect();
        println!(
            "block {} @0x{:04x} idom {:?} succ {:?}: {}",
            b.id,
            b.start_pc,
            cfg.dominators[b.id],
            b.successors,
            text.join(" ")
        );
    }
    for l in &cfg.loops {
        println!("loop header {} body {:?} bound {:?}", l.header, l.body, l.bound);
    }
}
