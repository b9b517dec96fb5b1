//! Linear disassembly, re-serialization and a small label-aware assembler.

use super::opcode::{self, INVALID, JUMPDEST};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub pc: usize,
    pub opcode: u8,
    pub mnemonic: &'static str,
    /// Immediate bytes, non-empty only for PUSH1..PUSH32.
    pub push_bytes: Vec<u8>,
    /// Set for a PUSH cut short by the end of the code.
    pub truncated: bool,
}

impl Instruction {
    pub fn is_push(&self) -> bool {
        opcode::push_size(self.opcode) > 0
    }

    pub fn is_jumpdest(&self) -> bool {
        self.opcode == JUMPDEST
    }

    /// Unknown opcodes, the designated INVALID byte and truncated pushes.
    pub fn is_invalid(&self) -> bool {
        self.truncated || self.opcode == INVALID || opcode::info(self.opcode).is_none()
    }

    /// Encoded size in bytes (a truncated push counts only its present bytes).
    pub fn size(&self) -> usize {
        1 + self.push_bytes.len()
    }

    /// Push immediate as a 256-bit value.
    pub fn push_value(&self) -> Option<primitive_types::U256> {
        if self.is_push() && !self.truncated {
            Some(primitive_types::U256::from_big_endian(&self.push_bytes))
        } else {
            None
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04x}: {}", self.pc, self.mnemonic)?;
        if !self.push_bytes.is_empty() {
            write!(f, " 0x{}", hex::encode(&self.push_bytes))?;
        }
        if self.truncated {
            write!(f, " (truncated)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BytecodeError {
    #[error("hex input has odd length {0}")]
    OddLength(usize),
    #[error("invalid hex character {0:?}")]
    InvalidHex(char),
}

/// Decodes `0x`-prefixed (or bare) hex text, ignoring whitespace.
pub fn decode_hex(text: &str) -> Result<Vec<u8>, BytecodeError> {
    let trimmed = text.trim();
    let body = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
        .unwrap_or(trimmed);
    let digits: String = body.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(c) = digits.chars().find(|c| !c.is_ascii_hexdigit()) {
        return Err(BytecodeError::InvalidHex(c));
    }
    if !digits.len().is_multiple_of(2) {
        return Err(BytecodeError::OddLength(digits.len()));
    }
    hex::decode(&digits).map_err(|_| BytecodeError::OddLength(digits.len()))
}

/// Treats file contents as hex text when they look like it, else as raw bytes.
pub fn load_bytecode(contents: &[u8]) -> Result<Vec<u8>, BytecodeError> {
    match std::str::from_utf8(contents) {
        Ok(text)
            if text
                .trim()
                .trim_start_matches("0x")
                .chars()
                .all(|c| c.is_ascii_hexdigit() || c.is_whitespace()) =>
        {
            decode_hex(text)
        }
        _ => Ok(contents.to_vec()),
    }
}

pub fn disassemble(code: &[u8]) -> Vec<Instruction> {
    let mut out = Vec::new();
    let mut pc = 0;
    while pc < code.len() {
        let op = code[pc];
        let n = opcode::push_size(op);
        let end = (pc + 1 + n).min(code.len());
        let push_bytes = code[pc + 1..end].to_vec();
        let truncated = push_bytes.len() < n;
        out.push(Instruction {
            pc,
            opcode: op,
            mnemonic: opcode::mnemonic(op),
            push_bytes,
            truncated,
        });
        pc = end;
    }
    out
}

/// Inverse of [`disassemble`].
pub fn serialize(instructions: &[Instruction]) -> Vec<u8> {
    let mut out = Vec::with_capacity(instructions.iter().map(Instruction::size).sum());
    for i in instructions {
        out.push(i.opcode);
        out.extend_from_slice(&i.push_bytes);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("`{0}` needs an immediate operand")]
    MissingOperand(String),
    #[error("bad immediate `{0}`")]
    BadImmediate(String),
    #[error("immediate `{operand}` does not fit in {mnemonic}")]
    ImmediateTooWide { mnemonic: String, operand: String },
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
}

enum AsmItem {
    Op(u8),
    Push { opcode: u8, operand: String },
    Label(String),
    Raw(Vec<u8>),
}

/// Assembles whitespace-separated mnemonics. `name:` defines a label at the
/// current offset, `@name` refers to one, `;` starts a comment and
/// `DATA 0x..` emits raw bytes.
///
/// ```
/// use defectscan::evm::assemble;
/// let code = assemble("PUSH1 @end JUMP end: JUMPDEST STOP").unwrap();
/// assert_eq!(code, vec![0x60, 0x03, 0x56, 0x5b, 0x00]);
/// ```
pub fn assemble(source: &str) -> Result<Vec<u8>, AsmError> {
    let mut items = Vec::new();
    let mut words = source
        .lines()
        .flat_map(|l| l.split(';').next().unwrap_or("").split_whitespace())
        .peekable();
    while let Some(w) = words.next() {
        if let Some(label) = w.strip_suffix(':') {
            items.push(AsmItem::Label(label.to_string()));
            continue;
        }
        if w.eq_ignore_ascii_case("DATA") {
            let operand = words.next().ok_or_else(|| AsmError::MissingOperand(w.to_string()))?;
            let bytes = decode_hex(operand).map_err(|_| AsmError::BadImmediate(operand.to_string()))?;
            items.push(AsmItem::Raw(bytes));
            continue;
        }
        let op = opcode::from_mnemonic(w).ok_or_else(|| AsmError::UnknownMnemonic(w.to_string()))?;
        if opcode::push_size(op) > 0 {
            let operand = words.next().ok_or_else(|| AsmError::MissingOperand(w.to_string()))?;
            items.push(AsmItem::Push {
                opcode: op,
                operand: operand.to_string(),
            });
        } else {
            items.push(AsmItem::Op(op));
        }
    }

    let mut labels = HashMap::new();
    let mut pc = 0usize;
    for item in &items {
        match item {
            AsmItem::Label(l) => {
                labels.insert(l.clone(), pc);
            }
            AsmItem::Op(_) => pc += 1,
            AsmItem::Push { opcode, .. } => pc += 1 + opcode::push_size(*opcode),
            AsmItem::Raw(b) => pc += b.len(),
        }
    }

    let mut out = Vec::with_capacity(pc);
    for item in items {
        match item {
            AsmItem::Label(_) => {}
            AsmItem::Op(op) => out.push(op),
            AsmItem::Raw(b) => out.extend(b),
            AsmItem::Push { opcode, operand } => {
                let width = opcode::push_size(opcode);
                let bytes = if let Some(label) = operand.strip_prefix('@') {
                    let target = *labels.get(label).ok_or_else(|| AsmError::UndefinedLabel(label.to_string()))?;
                    let be = (target as u64).to_be_bytes();
                    be.iter().skip_while(|b| **b == 0).copied().collect::<Vec<u8>>()
                } else {
                    let digits = operand
                        .strip_prefix("0x")
                        .ok_or_else(|| AsmError::BadImmediate(operand.clone()))?;
                    let padded = if digits.len() % 2 == 1 { format!("0{digits}") } else { digits.to_string() };
                    hex::decode(&padded).map_err(|_| AsmError::BadImmediate(operand.clone()))?
                };
                if bytes.len() > width {
                    return Err(AsmError::ImmediateTooWide {
                        mnemonic: opcode::mnemonic(opcode).to_string(),
                        operand,
                    });
                }
                out.push(opcode);
                out.extend(std::iter::repeat_n(0, width - bytes.len()));
                out.extend(bytes);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_program() {
        let ins = disassemble(&decode_hex("0x6001600201").unwrap());
        let text: Vec<String> = ins.iter().map(|i| i.to_string()).collect();
        assert_eq!(text, vec!["0000: PUSH1 0x01", "0002: PUSH1 0x02", "0004: ADD"]);
    }

    #[test]
    fn empty_code() {
        assert!(disassemble(&[]).is_empty());
    }

    #[test]
    fn truncated_push() {
        let ins = disassemble(&decode_hex("0x61").unwrap());
        assert_eq!(ins.len(), 1);
        assert_eq!(ins[0].mnemonic, "PUSH2");
        assert!(ins[0].truncated && ins[0].push_bytes.is_empty() && ins[0].is_invalid());
        let partial = disassemble(&[0x62, 0xaa]);
        assert_eq!(partial[0].push_bytes, vec![0xaa]);
        assert_eq!(serialize(&partial), vec![0x62, 0xaa]);
    }

    #[test]
    fn odd_length_hex() {
        assert_eq!(decode_hex("0x600"), Err(BytecodeError::OddLength(3)));
    }

    #[test]
    fn post_byzantium_opcodes_are_invalid_class() {
        // SHL, CREATE2, EXTCODEHASH
        for b in [0x1bu8, 0xf5, 0x3f] {
            let ins = disassemble(&[b]);
            assert!(ins[0].is_invalid());
            assert_eq!(ins[0].mnemonic, "INVALID");
            assert_eq!(serialize(&ins), vec![b]);
        }
    }

    #[test]
    fn assembler_labels_and_widths() {
        let code = assemble("PUSH2 @x x: JUMPDEST PUSH4 0xa9059cbb").unwrap();
        assert_eq!(code, vec![0x61, 0x00, 0x03, 0x5b, 0x63, 0xa9, 0x05, 0x9c, 0xbb]);
        assert!(matches!(assemble("PUSH1 0x1234"), Err(AsmError::ImmediateTooWide { .. })));
        assert!(matches!(assemble("FOO"), Err(AsmError::UnknownMnemonic(_))));
    }

    #[test]
    fn hex_text_or_raw() {
        assert_eq!(load_bytecode(b"0x6001\n").unwrap(), vec![0x60, 0x01]);
        assert_eq!(load_bytecode(&[0x60, 0x01]).unwrap(), vec![0x60, 0x01]);
    }

    proptest::proptest! {
        #[test]
        fn round_trip(code in proptest::collection::vec(proptest::num::u8::ANY, 0..512)) {
            let ins = disassemble(&code);
            proptest::prop_assert_eq!(serialize(&ins), code);
            for w in ins.windows(2) {
                proptest::prop_assert!(w[0].pc < w[1].pc);
                proptest::prop_assert_eq!(w[0].pc + w[0].size(), w[1].pc);
            }
        }
    }
}
