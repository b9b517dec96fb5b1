//! Natural loops and their iteration bounds.

use super::cfg::{BlockId, ControlFlowGraph, Terminator};
use super::opcode::*;
use super::symbolic::{summarize, Sym};
use primitive_types::U256;
use std::collections::BTreeSet;
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopBound {
    Constant(U256),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loop {
    pub header: BlockId,
    pub body: BTreeSet<BlockId>,
    /// Edges `(source, header)` closing the loop.
    pub back_edges: Vec<(BlockId, BlockId)>,
    /// Block whose JUMPI leaves the loop, if any.
    pub exit: Option<BlockId>,
    pub bound: LoopBound,
}

impl Loop {
    pub fn is_bounded(&self) -> bool {
        matches!(self.bound, LoopBound::Constant(_))
    }

    /// Whether any block of the loop executes `op`.
    pub fn contains_opcode(&self, cfg: &ControlFlowGraph, op: u8) -> bool {
        self.body.iter().any(|b| cfg.blocks[*b].contains_opcode(op))
    }
}

/// One loop per header; bodies of back edges sharing a header are merged.
pub fn detect_loops(cfg: &ControlFlowGraph) -> Vec<Loop> {
    let mut loops: Vec<Loop> = Vec::new();
    for (src, dst) in cfg.edges() {
        if !cfg.dominates(dst, src) {
            continue;
        }
        let mut body = BTreeSet::from([dst]);
        let mut stack = vec![src];
        while let Some(b) = stack.pop() {
            if body.insert(b) {
                stack.extend(cfg.blocks[b].predecessors.iter().copied());
            }
        }
        match loops.iter_mut().find(|l| l.header == dst) {
            Some(l) => {
                l.body.extend(body);
                l.back_edges.push((src, dst));
            }
            None => loops.push(Loop {
                header: dst,
                body,
                back_edges: vec![(src, dst)],
                exit: None,
                bound: LoopBound::Unbounded,
            }),
        }
    }
    loops.sort_by_key(|l| l.header);
    for l in &mut loops {
        l.exit = exit_block(cfg, l);
        l.bound = l.exit.map_or(LoopBound::Unbounded, |e| bound_at(cfg, e));
    }
    loops
}

fn exit_block(cfg: &ControlFlowGraph, l: &Loop) -> Option<BlockId> {
    let exits = |b: &BlockId| {
        let blk = &cfg.blocks[*b];
        blk.terminator == Terminator::Jumpi && blk.successors.iter().any(|s| !l.body.contains(s))
    };
    if exits(&l.header) {
        Some(l.header)
    } else {
        l.body.iter().copied().find(exits)
    }
}

/// A loop is bounded when its exit test compares a counter that starts out
/// constant against a constant.
fn bound_at(cfg: &ControlFlowGraph, exit: BlockId) -> LoopBound {
    let summary = summarize(&cfg.blocks[exit]);
    let Some(cond) = summary.jump_condition else {
        return LoopBound::Unbounded;
    };
    let (cond, _) = cond.strip_iszero();
    let Sym::Op { opcode, args, .. } = &*cond else {
        return LoopBound::Unbounded;
    };
    if !matches!(*opcode, LT | GT | SLT | SGT | EQ) {
        return LoopBound::Unbounded;
    }
    let (counter, limit) = match (args[0].as_const(), args[1].as_const()) {
        (None, Some(c)) => (&args[0], c),
        (Some(c), None) => (&args[1], c),
        _ => return LoopBound::Unbounded,
    };
    if starts_constant(cfg, exit, counter) {
        LoopBound::Constant(limit)
    } else {
        LoopBound::Unbounded
    }
}

fn starts_constant(cfg: &ControlFlowGraph, block: BlockId, counter: &Rc<Sym>) -> bool {
    let Some(first) = &cfg.first_entry[block] else {
        return false;
    };
    match &**counter {
        Sym::Entry(i) => first.peek(*i).is_some_and(|v| v.concrete.is_some()),
        Sym::Op { opcode: MLOAD, args, .. } => args[0]
            .as_const()
            .and_then(|addr| first.memory.get(&addr))
            .is_some_and(|v| v.concrete.is_some()),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{assemble, build_cfg, disassemble};

    const COUNTED: &str = "PUSH1 0x00 \
        head: JUMPDEST DUP1 PUSH1 0x05 SWAP1 LT ISZERO PUSH1 @done JUMPI \
        PUSH1 0x01 ADD PUSH1 @head JUMP \
        done: JUMPDEST STOP";

    const STORAGE_BOUND: &str = "PUSH1 0x00 \
        head: JUMPDEST PUSH1 0x00 SLOAD DUP2 LT ISZERO PUSH1 @done JUMPI \
        PUSH1 0x01 ADD PUSH1 @head JUMP \
        done: JUMPDEST STOP";

    fn loops(src: &str) -> (ControlFlowGraph, Vec<Loop>) {
        let g = build_cfg(&disassemble(&assemble(src).unwrap()));
        let l = g.loops.clone();
        (g, l)
    }

    #[test]
    fn acyclic_has_no_loops() {
        assert!(loops("PUSH1 @a JUMP a: JUMPDEST STOP").1.is_empty());
    }

    #[test]
    fn counted_loop_is_bounded() {
        let (g, l) = loops(COUNTED);
        assert_eq!(l.len(), 1);
        assert_eq!(l[0].bound, LoopBound::Constant(U256::from(5)));
        assert_eq!(l[0].exit, Some(l[0].header));
        for b in &l[0].body {
            assert!(g.dominates(l[0].header, *b));
        }
    }

    #[test]
    fn storage_bound_is_unbounded() {
        let (_, l) = loops(STORAGE_BOUND);
        assert_eq!(l.len(), 1);
        assert_eq!(l[0].bound, LoopBound::Unbounded);
    }

    #[test]
    fn memory_counter() {
        let src = "PUSH1 0x00 PUSH1 0x80 MSTORE \
            head: JUMPDEST PUSH1 0x0a PUSH1 0x80 MLOAD LT ISZERO PUSH1 @done JUMPI \
            PUSH1 0x80 MLOAD PUSH1 0x01 ADD PUSH1 0x80 MSTORE PUSH1 @head JUMP \
            done: JUMPDEST STOP";
        let (_, l) = loops(src);
        assert_eq!(l.len(), 1);
        assert_eq!(l[0].bound, LoopBound::Constant(U256::from(10)));
    }

    #[test]
    fn calldata_counter_start_is_unbounded() {
        let src = "PUSH1 0x04 CALLDATALOAD \
            head: JUMPDEST DUP1 PUSH1 0x05 SWAP1 LT ISZERO PUSH1 @done JUMPI \
            PUSH1 0x01 ADD PUSH1 @head JUMP \
            done: JUMPDEST STOP";
        assert_eq!(loops(src).1[0].bound, LoopBound::Unbounded);
    }
}
