//! Abstract stack machine used to resolve jump targets and carry taint.

use super::opcode::{self, *};
use primitive_types::U256;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{BitOr, BitOrAssign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Taint(u8);

impl Taint {
    pub const NONE: Taint = Taint(0);
    pub const BALANCE: Taint = Taint(1);
    pub const CALLER: Taint = Taint(2);
    pub const BLOCKINFO: Taint = Taint(4);
    pub const CALLDATA: Taint = Taint(8);

    pub fn contains(self, other: Taint) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl BitOr for Taint {
    type Output = Taint;
    fn bitor(self, rhs: Taint) -> Taint {
        Taint(self.0 | rhs.0)
    }
}

impl BitOrAssign for Taint {
    fn bitor_assign(&mut self, rhs: Taint) {
        self.0 |= rhs.0;
    }
}

impl fmt::Display for Taint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (Taint::BALANCE, "BALANCE"),
            (Taint::CALLER, "CALLER"),
            (Taint::BLOCKINFO, "BLOCKINFO"),
            (Taint::CALLDATA, "CALLDATA"),
        ];
        let parts: Vec<&str> = names.iter().filter(|(t, _)| self.contains(*t)).map(|(_, n)| *n).collect();
        if parts.is_empty() {
            write!(f, "-")
        } else {
            write!(f, "{}", parts.join("|"))
        }
    }
}

/// Taint introduced by an environment-reading opcode.
pub fn source_taint(op: u8) -> Taint {
    match op {
        BALANCE => Taint::BALANCE,
        CALLER | ORIGIN => Taint::CALLER,
        BLOCKHASH | COINBASE | TIMESTAMP | NUMBER | DIFFICULTY | GASLIMIT => Taint::BLOCKINFO,
        CALLDATALOAD | CALLDATASIZE => Taint::CALLDATA,
        _ => Taint::NONE,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AbsValue {
    pub concrete: Option<U256>,
    pub taint: Taint,
}

impl AbsValue {
    pub fn constant(v: U256) -> Self {
        AbsValue {
            concrete: Some(v),
            taint: Taint::NONE,
        }
    }

    pub fn unknown(taint: Taint) -> Self {
        AbsValue { concrete: None, taint }
    }

    /// Least upper bound: differing constants become unknown, taints union.
    pub fn join(&self, other: &AbsValue) -> AbsValue {
        AbsValue {
            concrete: if self.concrete == other.concrete { self.concrete } else { None },
            taint: self.taint | other.taint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StackState {
    /// Bottom first; the top of the stack is the last element.
    pub stack: Vec<AbsValue>,
    /// Words stored at constant memory offsets.
    pub memory: BTreeMap<U256, AbsValue>,
}

impl StackState {
    /// Element `i` positions below the top.
    pub fn peek(&self, i: usize) -> Option<&AbsValue> {
        self.stack.len().checked_sub(i + 1).map(|idx| &self.stack[idx])
    }

    /// Pointwise join of two states of equal depth.
    pub fn join(&self, other: &StackState) -> StackState {
        debug_assert_eq!(self.stack.len(), other.stack.len());
        let stack = self.stack.iter().zip(&other.stack).map(|(a, b)| a.join(b)).collect();
        let memory = self
            .memory
            .iter()
            .filter_map(|(k, v)| other.memory.get(k).map(|w| (*k, v.join(w))))
            .collect();
        StackState { stack, memory }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Jump(AbsValue),
    Jumpi { target: AbsValue, condition: AbsValue },
    Fallthrough,
    Halt,
    /// Stack underflow, overflow or an invalid instruction.
    Invalid,
}

const MAX_STACK: usize = 1024;

fn bool_word(b: bool) -> U256 {
    if b {
        U256::one()
    } else {
        U256::zero()
    }
}

/// Constant-folds the opcodes whose result depends only on their operands.
/// `args[0]` is the top of the stack.
pub fn fold(op: u8, args: &[U256]) -> Option<U256> {
    let a = *args.first()?;
    let b = args.get(1).copied().unwrap_or_default();
    Some(match op {
        ADD => a.overflowing_add(b).0,
        MUL => a.overflowing_mul(b).0,
        SUB => a.overflowing_sub(b).0,
        DIV => {
            if b.is_zero() {
                U256::zero()
            } else {
                a / b
            }
        }
        0x06 => {
            if b.is_zero() {
                U256::zero()
            } else {
                a % b
            }
        }
        0x0a => a.overflowing_pow(b).0,
        LT => bool_word(a < b),
        GT => bool_word(a > b),
        EQ => bool_word(a == b),
        ISZERO => bool_word(a.is_zero()),
        AND => a & b,
        OR => a | b,
        XOR => a ^ b,
        NOT => !a,
        0x1a => {
            if a >= U256::from(32) {
                U256::zero()
            } else {
                (b >> (8 * (31 - a.as_usize()))) & U256::from(0xff)
            }
        }
        _ => return None,
    })
}

fn clobbers_memory(op: u8) -> bool {
    matches!(op, 0x53 | 0x37 | 0x39 | 0x3c | 0x3e | CALL | CALLCODE | DELEGATECALL | 0xfa)
}

/// Runs one block's instructions over `state`.
pub fn step_block(instructions: &[super::disasm::Instruction], state: &mut StackState) -> Outcome {
    for ins in instructions {
        let op = ins.opcode;
        if ins.is_invalid() {
            return Outcome::Invalid;
        }
        let info = match opcode::info(op) {
            Some(i) => i,
            None => return Outcome::Invalid,
        };
        let inputs = info.inputs as usize;
        if state.stack.len() < inputs {
            return Outcome::Invalid;
        }
        if (DUP1..=DUP16).contains(&op) {
            let n = (op - DUP1) as usize + 1;
            let v = state.stack[state.stack.len() - n].clone();
            state.stack.push(v);
        } else if (SWAP1..=SWAP16).contains(&op) {
            let n = (op - SWAP1) as usize + 1;
            let top = state.stack.len() - 1;
            state.stack.swap(top, top - n);
        } else if ins.is_push() {
            state.stack.push(AbsValue::constant(ins.push_value().unwrap_or_default()));
        } else {
            let args: Vec<AbsValue> = (0..inputs).map(|_| state.stack.pop().unwrap_or_default()).collect();
            match op {
                JUMP => return Outcome::Jump(args[0].clone()),
                JUMPI => {
                    return Outcome::Jumpi {
                        target: args[0].clone(),
                        condition: args[1].clone(),
                    }
                }
                STOP | RETURN | REVERT | SELFDESTRUCT => return Outcome::Halt,
                _ => {}
            }
            let mut taint = source_taint(op);
            for a in &args {
                taint |= a.taint;
            }
            match op {
                MSTORE => {
                    if let Some(addr) = args[0].concrete {
                        let lo = addr.saturating_sub(U256::from(31));
                        let hi = addr.saturating_add(U256::from(31));
                        state.memory.retain(|k, _| *k < lo || *k > hi);
                        state.memory.insert(addr, args[1].clone());
                    } else {
                        state.memory.clear();
                    }
                }
                _ if clobbers_memory(op) => state.memory.clear(),
                _ => {}
            }
            if info.outputs == 1 {
                let value = if op == MLOAD {
                    args[0]
                        .concrete
                        .and_then(|a| state.memory.get(&a).cloned())
                        .unwrap_or(AbsValue::unknown(taint))
                } else {
                    let concrete: Option<Vec<U256>> = args.iter().map(|a| a.concrete).collect();
                    AbsValue {
                        concrete: concrete.and_then(|c| fold(op, &c)),
                        taint,
                    }
                };
                state.stack.push(value);
            }
        }
        if state.stack.len() > MAX_STACK {
            return Outcome::Invalid;
        }
    }
    Outcome::Fallthrough
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{assemble, disassemble};

    fn run(src: &str) -> (Outcome, StackState) {
        let ins = disassemble(&assemble(src).unwrap());
        let mut st = StackState::default();
        let out = step_block(&ins, &mut st);
        (out, st)
    }

    #[test]
    fn folds_and_resolves_jump() {
        let (out, _) = run("PUSH1 0x02 PUSH1 0x03 ADD PUSH1 0x01 SWAP1 SUB JUMP");
        assert_eq!(out, Outcome::Jump(AbsValue::constant(U256::from(4))));
    }

    #[test]
    fn taint_flows_through_arithmetic() {
        let (_, st) = run("ADDRESS BALANCE PUSH1 0x0a EQ CALLER ADD");
        let top = st.peek(0).unwrap();
        assert!(top.taint.contains(Taint::BALANCE) && top.taint.contains(Taint::CALLER));
        assert_eq!(top.concrete, None);
    }

    #[test]
    fn underflow_is_invalid() {
        assert_eq!(run("ADD").0, Outcome::Invalid);
    }

    #[test]
    fn memory_words_are_tracked() {
        let (_, st) = run("PUSH1 0x07 PUSH1 0x40 MSTORE PUSH1 0x40 MLOAD");
        assert_eq!(st.peek(0).unwrap().concrete, Some(U256::from(7)));
        let (_, st) = run("PUSH1 0x07 PUSH1 0x40 MSTORE PUSH1 0x01 CALLDATALOAD MSTORE PUSH1 0x40 MLOAD");
        assert_eq!(st.peek(0).unwrap().concrete, None);
    }

    proptest::proptest! {
        #[test]
        fn join_never_drops_taint(a in 0u8..16, b in 0u8..16, x in 0u64..4, y in 0u64..4) {
            let va = AbsValue { concrete: Some(U256::from(x)), taint: Taint(a) };
            let vb = AbsValue { concrete: Some(U256::from(y)), taint: Taint(b) };
            let j = va.join(&vb);
            proptest::prop_assert!(j.taint.contains(va.taint) && j.taint.contains(vb.taint));
            proptest::prop_assert_eq!(j.join(&va), j.clone());
            if x != y { proptest::prop_assert_eq!(j.concrete, None); }
        }
    }
}
