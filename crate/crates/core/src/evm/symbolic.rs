//! Block-local symbolic evaluation over expressions rooted at the entry stack.

use super::cfg::BasicBlock;
use super::emulate::fold;
use super::opcode::{self, *};
use primitive_types::U256;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sym {
    Const(U256),
    /// Entry stack slot, 0 being the top on block entry.
    Entry(usize),
    Op { opcode: u8, pc: usize, args: Vec<Rc<Sym>> },
}

impl Sym {
    pub fn as_const(&self) -> Option<U256> {
        match self {
            Sym::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn opcode(&self) -> Option<u8> {
        match self {
            Sym::Op { opcode, .. } => Some(*opcode),
            _ => None,
        }
    }

    /// Removes leading ISZERO wrappers; the flag tells whether their count was odd.
    pub fn strip_iszero(self: &Rc<Sym>) -> (Rc<Sym>, bool) {
        let mut cur = self.clone();
        let mut negated = false;
        loop {
            match &*cur {
                Sym::Op { opcode: ISZERO, args, .. } => {
                    let inner = args[0].clone();
                    cur = inner;
                    negated = !negated;
                }
                _ => return (cur, negated),
            }
        }
    }

    /// Pre-order search through the expression.
    pub fn any(&self, pred: &mut dyn FnMut(&Sym) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Sym::Op { args, .. } => args.iter().any(|a| a.any(pred)),
            _ => false,
        }
    }

    pub fn mentions_opcode(&self, op: u8) -> bool {
        self.any(&mut |s| s.opcode() == Some(op))
    }

    /// Entry slots the expression depends on.
    pub fn entry_slots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.any(&mut |s| {
            if let Sym::Entry(i) = s {
                out.push(*i);
            }
            false
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSummary {
    /// Stack on exit, bottom first, not counting consumed entry slots.
    pub stack: Vec<Rc<Sym>>,
    /// Entry slots consumed or materialized.
    pub entry_depth: usize,
    pub jump_target: Option<Rc<Sym>>,
    pub jump_condition: Option<Rc<Sym>>,
    /// (pc, args) for every CALL-family, SSTORE and SELFDESTRUCT instruction.
    pub effects: Vec<(usize, u8, Vec<Rc<Sym>>)>,
}

struct Machine {
    stack: Vec<Rc<Sym>>,
    base: usize,
}

impl Machine {
    fn ensure(&mut self, n: usize) {
        while self.stack.len() < n {
            self.stack.insert(0, Rc::new(Sym::Entry(self.base)));
            self.base += 1;
        }
    }

    fn pop(&mut self) -> Rc<Sym> {
        self.ensure(1);
        self.stack.pop().expect("ensured")
    }
}

pub fn summarize(block: &BasicBlock) -> BlockSummary {
    let mut m = Machine {
        stack: Vec::new(),
        base: 0,
    };
    let mut summary = BlockSummary {
        stack: Vec::new(),
        entry_depth: 0,
        jump_target: None,
        jump_condition: None,
        effects: Vec::new(),
    };
    for ins in &block.instructions {
        let op = ins.opcode;
        let Some(info) = opcode::info(op) else { break };
        if ins.is_invalid() {
            break;
        }
        if ins.is_push() {
            m.stack.push(Rc::new(Sym::Const(ins.push_value().unwrap_or_default())));
        } else if (DUP1..=DUP16).contains(&op) {
            let n = (op - DUP1) as usize + 1;
            m.ensure(n);
            let v = m.stack[m.stack.len() - n].clone();
            m.stack.push(v);
        } else if (SWAP1..=SWAP16).contains(&op) {
            let n = (op - SWAP1) as usize + 1;
            m.ensure(n + 1);
            let top = m.stack.len() - 1;
            m.stack.swap(top, top - n);
        } else {
            let args: Vec<Rc<Sym>> = (0..info.inputs).map(|_| m.pop()).collect();
            match op {
                JUMP => summary.jump_target = Some(args[0].clone()),
                JUMPI => {
                    summary.jump_target = Some(args[0].clone());
                    summary.jump_condition = Some(args[1].clone());
                }
                CALL | CALLCODE | DELEGATECALL | 0xfa | SSTORE | SELFDESTRUCT => {
                    summary.effects.push((ins.pc, op, args.clone()))
                }
                _ => {}
            }
            if info.outputs == 1 {
                let consts: Option<Vec<U256>> = args.iter().map(|a| a.as_const()).collect();
                let folded = consts.and_then(|c| fold(op, &c));
                m.stack.push(Rc::new(match folded {
                    Some(v) => Sym::Const(v),
                    None => Sym::Op { opcode: op, pc: ins.pc, args },
                }));
            }
        }
    }
    summary.entry_depth = m.base;
    summary.stack = m.stack;
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{assemble, build_cfg, disassemble};

    #[test]
    fn loop_condition_shape() {
        let g = build_cfg(&disassemble(
            &assemble("DUP1 PUSH1 0x05 SWAP1 LT ISZERO PUSH1 0x20 JUMPI").unwrap(),
        ));
        let s = summarize(&g.blocks[0]);
        let (cond, negated) = s.jump_condition.unwrap().strip_iszero();
        assert!(negated);
        match &*cond {
            Sym::Op { opcode, args, .. } => {
                assert_eq!(*opcode, LT);
                assert_eq!(*args[0], Sym::Entry(0));
                assert_eq!(args[1].as_const(), Some(U256::from(5)));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s.jump_target.unwrap().as_const(), Some(U256::from(0x20)));
    }

    #[test]
    fn swap_below_entry() {
        let g = build_cfg(&disassemble(&assemble("SWAP2 POP").unwrap()));
        let s = summarize(&g.blocks[0]);
        assert_eq!(s.entry_depth, 3);
        assert_eq!(s.stack, vec![Rc::new(Sym::Entry(0)), Rc::new(Sym::Entry(1))]);
    }
}
