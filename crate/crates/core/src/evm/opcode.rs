//! Opcode table (Byzantium instruction set, before Constantinople).
//!
//! Bytes without an entry decode to an INVALID-class instruction.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpcodeInfo {
    pub mnemonic: &'static str,
    /// Stack items consumed.
    pub inputs: u8,
    /// Stack items produced.
    pub outputs: u8,
}

const fn op(mnemonic: &'static str, inputs: u8, outputs: u8) -> Option<OpcodeInfo> {
    Some(OpcodeInfo {
        mnemonic,
        inputs,
        outputs,
    })
}

pub const STOP: u8 = 0x00;
pub const ADD: u8 = 0x01;
pub const MUL: u8 = 0x02;
pub const SUB: u8 = 0x03;
pub const DIV: u8 = 0x04;
pub const LT: u8 = 0x10;
pub const GT: u8 = 0x11;
pub const SLT: u8 = 0x12;
pub const SGT: u8 = 0x13;
pub const EQ: u8 = 0x14;
pub const ISZERO: u8 = 0x15;
pub const AND: u8 = 0x16;
pub const OR: u8 = 0x17;
pub const XOR: u8 = 0x18;
pub const NOT: u8 = 0x19;
pub const SHA3: u8 = 0x20;
pub const BALANCE: u8 = 0x31;
pub const ORIGIN: u8 = 0x32;
pub const CALLER: u8 = 0x33;
pub const CALLVALUE: u8 = 0x34;
pub const CALLDATALOAD: u8 = 0x35;
pub const CALLDATASIZE: u8 = 0x36;
pub const BLOCKHASH: u8 = 0x40;
pub const COINBASE: u8 = 0x41;
pub const TIMESTAMP: u8 = 0x42;
pub const NUMBER: u8 = 0x43;
pub const DIFFICULTY: u8 = 0x44;
pub const GASLIMIT: u8 = 0x45;
pub const POP: u8 = 0x50;
pub const MLOAD: u8 = 0x51;
pub const MSTORE: u8 = 0x52;
pub const SLOAD: u8 = 0x54;
pub const SSTORE: u8 = 0x55;
pub const JUMP: u8 = 0x56;
pub const JUMPI: u8 = 0x57;
pub const JUMPDEST: u8 = 0x5b;
pub const PUSH1: u8 = 0x60;
pub const PUSH4: u8 = 0x63;
pub const PUSH20: u8 = 0x73;
pub const PUSH32: u8 = 0x7f;
pub const DUP1: u8 = 0x80;
pub const DUP16: u8 = 0x8f;
pub const SWAP1: u8 = 0x90;
pub const SWAP16: u8 = 0x9f;
pub const CALL: u8 = 0xf1;
pub const CALLCODE: u8 = 0xf2;
pub const RETURN: u8 = 0xf3;
pub const DELEGATECALL: u8 = 0xf4;
pub const REVERT: u8 = 0xfd;
pub const INVALID: u8 = 0xfe;
pub const SELFDESTRUCT: u8 = 0xff;

static TABLE: [Option<OpcodeInfo>; 256] = build_table();

const fn build_table() -> [Option<OpcodeInfo>; 256] {
    let mut t: [Option<OpcodeInfo>; 256] = [None; 256];
    t[0x00] = op("STOP", 0, 0);
    t[0x01] = op("ADD", 2, 1);
    t[0x02] = op("MUL", 2, 1);
    t[0x03] = op("SUB", 2, 1);
    t[0x04] = op("DIV", 2, 1);
    t[0x05] = op("SDIV", 2, 1);
    t[0x06] = op("MOD", 2, 1);
    t[0x07] = op("SMOD", 2, 1);
    t[0x08] = op("ADDMOD", 3, 1);
    t[0x09] = op("MULMOD", 3, 1);
    t[0x0a] = op("EXP", 2, 1);
    t[0x0b] = op("SIGNEXTEND", 2, 1);
    t[0x10] = op("LT", 2, 1);
    t[0x11] = op("GT", 2, 1);
    t[0x12] = op("SLT", 2, 1);
    t[0x13] = op("SGT", 2, 1);
    t[0x14] = op("EQ", 2, 1);
    t[0x15] = op("ISZERO", 1, 1);
    t[0x16] = op("AND", 2, 1);
    t[0x17] = op("OR", 2, 1);
    t[0x18] = op("XOR", 2, 1);
    t[0x19] = op("NOT", 1, 1);
    t[0x1a] = op("BYTE", 2, 1);
    t[0x20] = op("SHA3", 2, 1);
    t[0x30] = op("ADDRESS", 0, 1);
    t[0x31] = op("BALANCE", 1, 1);
    t[0x32] = op("ORIGIN", 0, 1);
    t[0x33] = op("CALLER", 0, 1);
    t[0x34] = op("CALLVALUE", 0, 1);
    t[0x35] = op("CALLDATALOAD", 1, 1);
    t[0x36] = op("CALLDATASIZE", 0, 1);
    t[0x37] = op("CALLDATACOPY", 3, 0);
    t[0x38] = op("CODESIZE", 0, 1);
    t[0x39] = op("CODECOPY", 3, 0);
    t[0x3a] = op("GASPRICE", 0, 1);
    t[0x3b] = op("EXTCODESIZE", 1, 1);
    t[0x3c] = op("EXTCODECOPY", 4, 0);
    t[0x3d] = op("RETURNDATASIZE", 0, 1);
    t[0x3e] = op("RETURNDATACOPY", 3, 0);
    t[0x40] = op("BLOCKHASH", 1, 1);
    t[0x41] = op("COINBASE", 0, 1);
    t[0x42] = op("TIMESTAMP", 0, 1);
    t[0x43] = op("NUMBER", 0, 1);
    t[0x44] = op("DIFFICULTY", 0, 1);
    t[0x45] = op("GASLIMIT", 0, 1);
    t[0x50] = op("POP", 1, 0);
    t[0x51] = op("MLOAD", 1, 1);
    t[0x52] = op("MSTORE", 2, 0);
    t[0x53] = op("MSTORE8", 2, 0);
    t[0x54] = op("SLOAD", 1, 1);
    t[0x55] = op("SSTORE", 2, 0);
    t[0x56] = op("JUMP", 1, 0);
    t[0x57] = op("JUMPI", 2, 0);
    t[0x58] = op("PC", 0, 1);
    t[0x59] = op("MSIZE", 0, 1);
    t[0x5a] = op("GAS", 0, 1);
    t[0x5b] = op("JUMPDEST", 0, 0);
    const PUSH: [&str; 32] = [
        "PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9", "PUSH10", "PUSH11",
        "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18", "PUSH19", "PUSH20", "PUSH21",
        "PUSH22", "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27", "PUSH28", "PUSH29", "PUSH30", "PUSH31",
        "PUSH32",
    ];
    const DUP: [&str; 16] = [
        "DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10", "DUP11", "DUP12",
        "DUP13", "DUP14", "DUP15", "DUP16",
    ];
    const SWAP: [&str; 16] = [
        "SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10", "SWAP11",
        "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16",
    ];
    const LOG: [&str; 5] = ["LOG0", "LOG1", "LOG2", "LOG3", "LOG4"];
    let mut i = 0;
    while i < 32 {
        t[0x60 + i] = op(PUSH[i], 0, 1);
        i += 1;
    }
    i = 0;
    while i < 16 {
        t[0x80 + i] = op(DUP[i], i as u8 + 1, i as u8 + 2);
        t[0x90 + i] = op(SWAP[i], i as u8 + 2, i as u8 + 2);
        i += 1;
    }
    i = 0;
    while i < 5 {
        t[0xa0 + i] = op(LOG[i], i as u8 + 2, 0);
        i += 1;
    }
    t[0xf0] = op("CREATE", 3, 1);
    t[0xf1] = op("CALL", 7, 1);
    t[0xf2] = op("CALLCODE", 7, 1);
    t[0xf3] = op("RETURN", 2, 0);
    t[0xf4] = op("DELEGATECALL", 6, 1);
    t[0xfa] = op("STATICCALL", 6, 1);
    t[0xfd] = op("REVERT", 2, 0);
    t[0xfe] = op("INVALID", 0, 0);
    t[0xff] = op("SELFDESTRUCT", 1, 0);
    t
}

pub fn info(opcode: u8) -> Option<&'static OpcodeInfo> {
    TABLE[opcode as usize].as_ref()
}

pub fn mnemonic(opcode: u8) -> &'static str {
    info(opcode).map(|i| i.mnemonic).unwrap_or("INVALID")
}

pub fn from_mnemonic(name: &str) -> Option<u8> {
    let upper = name.to_ascii_uppercase();
    (0..=255u8).find(|b| TABLE[*b as usize].is_some_and(|i| i.mnemonic == upper))
}

/// Number of immediate bytes following the opcode (PUSH1..PUSH32).
pub fn push_size(opcode: u8) -> usize {
    if (PUSH1..=PUSH32).contains(&opcode) {
        (opcode - PUSH1 + 1) as usize
    } else {
        0
    }
}

pub fn is_terminator(opcode: u8) -> bool {
    matches!(opcode, STOP | JUMP | JUMPI | RETURN | REVERT | SELFDESTRUCT) || info(opcode).is_none() || opcode == INVALID
}
