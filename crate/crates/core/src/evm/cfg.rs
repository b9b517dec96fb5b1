//! Basic-block partition and jump resolution by abstract stack emulation.

use super::disasm::Instruction;
use super::dominators::immediate_dominators;
use super::emulate::{step_block, AbsValue, Outcome, StackState, Taint};
use super::loops::{detect_loops, Loop};
use super::opcode::*;
use primitive_types::U256;
use std::collections::{BTreeMap, HashMap};

pub type BlockId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminator {
    Jump,
    Jumpi,
    Fallthrough,
    Stop,
    Return,
    Revert,
    SelfDestruct,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub start_pc: usize,
    pub instructions: Vec<Instruction>,
    /// Sorted, deduplicated.
    pub successors: Vec<BlockId>,
    pub predecessors: Vec<BlockId>,
    pub terminator: Terminator,
    /// A jump whose target could not be resolved on some explored path.
    pub jumps_to_unknown: bool,
    /// Reached by the emulator from the entry block.
    pub reachable: bool,
}

impl BasicBlock {
    pub fn last(&self) -> &Instruction {
        self.instructions.last().expect("blocks are never empty")
    }

    pub fn contains_opcode(&self, op: u8) -> bool {
        self.instructions.iter().any(|i| i.opcode == op)
    }

    pub fn end_pc(&self) -> usize {
        let l = self.last();
        l.pc + l.size()
    }
}

/// Bounds for the emulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmulationLimits {
    /// Distinct entry states per block and stack depth before widening.
    pub visits_per_state: usize,
    /// Distinct entry stack depths per block.
    pub depths_per_block: usize,
    /// Longest block chain followed from the entry.
    pub max_path_depth: usize,
    /// Total block executions.
    pub budget: usize,
}

impl Default for EmulationLimits {
    fn default() -> Self {
        EmulationLimits {
            visits_per_state: 4,
            depths_per_block: 8,
            max_path_depth: 2048,
            budget: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlFlowGraph {
    pub blocks: Vec<BasicBlock>,
    pub entry: BlockId,
    /// Immediate dominator per block; `None` for the entry and unreachable blocks.
    pub dominators: Vec<Option<BlockId>>,
    pub loops: Vec<Loop>,
    /// Union of taints seen per entry stack slot, indexed from the top.
    pub entry_taint: Vec<Vec<Taint>>,
    /// First entry state the emulator explored for each block.
    pub first_entry: Vec<Option<StackState>>,
    /// Some limit cut exploration short.
    pub truncated: bool,
    by_pc: HashMap<usize, BlockId>,
}

impl ControlFlowGraph {
    pub fn block_at_pc(&self, pc: usize) -> Option<BlockId> {
        self.by_pc.get(&pc).copied()
    }

    /// Block containing the instruction at `pc`.
    pub fn block_containing(&self, pc: usize) -> Option<BlockId> {
        let idx = self.blocks.partition_point(|b| b.start_pc <= pc);
        let b = self.blocks.get(idx.checked_sub(1)?)?;
        (pc < b.end_pc()).then_some(b.id)
    }

    pub fn edges(&self) -> impl Iterator<Item = (BlockId, BlockId)> + '_ {
        self.blocks.iter().flat_map(|b| b.successors.iter().map(move |s| (b.id, *s)))
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Whether `a` dominates `b` (reflexive).
    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        if !self.blocks.get(b).is_some_and(|blk| blk.reachable) {
            return false;
        }
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.dominators[cur] {
                Some(d) => cur = d,
                None => return false,
            }
        }
    }
}

fn terminator_of(ins: &Instruction) -> Terminator {
    if ins.is_invalid() {
        return Terminator::Invalid;
    }
    match ins.opcode {
        JUMP => Terminator::Jump,
        JUMPI => Terminator::Jumpi,
        STOP => Terminator::Stop,
        RETURN => Terminator::Return,
        REVERT => Terminator::Revert,
        SELFDESTRUCT => Terminator::SelfDestruct,
        _ => Terminator::Fallthrough,
    }
}

fn partition(instructions: &[Instruction]) -> Vec<BasicBlock> {
    let mut blocks: Vec<BasicBlock> = Vec::new();
    let mut current: Vec<Instruction> = Vec::new();
    let flush = |current: &mut Vec<Instruction>, blocks: &mut Vec<BasicBlock>| {
        if current.is_empty() {
            return;
        }
        let ins = std::mem::take(current);
        let terminator = terminator_of(ins.last().unwrap());
        blocks.push(BasicBlock {
            id: blocks.len(),
            start_pc: ins[0].pc,
            instructions: ins,
            successors: Vec::new(),
            predecessors: Vec::new(),
            terminator,
            jumps_to_unknown: false,
            reachable: false,
        });
    };
    for ins in instructions {
        if ins.is_jumpdest() {
            flush(&mut current, &mut blocks);
        }
        let ends = ins.is_invalid() || is_terminator(ins.opcode);
        current.push(ins.clone());
        if ends {
            flush(&mut current, &mut blocks);
        }
    }
    flush(&mut current, &mut blocks);
    blocks
}

#[derive(Default)]
struct DepthSlot {
    seen: Vec<StackState>,
    widened: Option<StackState>,
}

pub fn build_cfg(instructions: &[Instruction]) -> ControlFlowGraph {
    build_cfg_with(instructions, EmulationLimits::default())
}

pub fn build_cfg_with(instructions: &[Instruction], limits: EmulationLimits) -> ControlFlowGraph {
    let mut blocks = partition(instructions);
    let n = blocks.len();
    let by_pc: HashMap<usize, BlockId> = blocks.iter().map(|b| (b.start_pc, b.id)).collect();
    let mut succ: Vec<Vec<BlockId>> = vec![Vec::new(); n];
    let mut entry_taint: Vec<Vec<Taint>> = vec![Vec::new(); n];
    let mut first_entry: Vec<Option<StackState>> = vec![None; n];
    let mut slots: Vec<BTreeMap<usize, DepthSlot>> = (0..n).map(|_| BTreeMap::new()).collect();
    let mut truncated = false;

    let jumpdests: HashMap<usize, BlockId> = blocks
        .iter()
        .filter(|b| b.instructions[0].is_jumpdest())
        .map(|b| (b.start_pc, b.id))
        .collect();
    let jump_target = |v: &AbsValue| -> Result<Option<BlockId>, ()> {
        match v.concrete {
            None => Err(()),
            Some(t) if t > U256::from(usize::MAX) => Ok(None),
            Some(t) => Ok(jumpdests.get(&t.as_usize()).copied()),
        }
    };

    let mut work: Vec<(BlockId, StackState, usize)> = Vec::new();
    if n > 0 {
        work.push((0, StackState::default(), 0));
    }
    let mut budget = limits.budget;
    while let Some((id, state, depth)) = work.pop() {
        let unresolvable = matches!(blocks[id].terminator, Terminator::Jump | Terminator::Jumpi);
        if budget == 0 || depth > limits.max_path_depth {
            truncated = true;
            if unresolvable {
                blocks[id].jumps_to_unknown = true;
            }
            continue;
        }
        let stack_depth = state.stack.len();
        let block_slots = &mut slots[id];
        if !block_slots.contains_key(&stack_depth) && block_slots.len() >= limits.depths_per_block {
            truncated = true;
            if unresolvable {
                blocks[id].jumps_to_unknown = true;
            }
            continue;
        }
        let slot = block_slots.entry(stack_depth).or_default();
        let to_run = if slot.seen.contains(&state) {
            continue;
        } else if let Some(w) = &slot.widened {
            let j = w.join(&state);
            if &j == w {
                continue;
            }
            slot.widened = Some(j.clone());
            j
        } else if slot.seen.len() < limits.visits_per_state {
            slot.seen.push(state.clone());
            state
        } else {
            let j = slot.seen.iter().fold(state, |acc, s| acc.join(s));
            slot.widened = Some(j.clone());
            j
        };
        budget -= 1;
        blocks[id].reachable = true;
        if first_entry[id].is_none() {
            first_entry[id] = Some(to_run.clone());
        }
        let taints = &mut entry_taint[id];
        for (i, v) in to_run.stack.iter().rev().enumerate() {
            if i < taints.len() {
                taints[i] |= v.taint;
            } else {
                taints.push(v.taint);
            }
        }

        let mut st = to_run;
        let outcome = step_block(&blocks[id].instructions, &mut st);
        let next = id + 1;
        let mut push = |target: BlockId, s: StackState, succ: &mut Vec<Vec<BlockId>>| {
            if !succ[id].contains(&target) {
                succ[id].push(target);
            }
            work.push((target, s, depth + 1));
        };
        match outcome {
            Outcome::Fallthrough => {
                if next < n {
                    push(next, st, &mut succ);
                }
            }
            Outcome::Jump(target) => match jump_target(&target) {
                Ok(Some(t)) => push(t, st, &mut succ),
                Ok(None) => {}
                Err(()) => blocks[id].jumps_to_unknown = true,
            },
            Outcome::Jumpi { target, .. } => {
                if next < n {
                    push(next, st.clone(), &mut succ);
                }
                match jump_target(&target) {
                    Ok(Some(t)) => push(t, st, &mut succ),
                    Ok(None) => {}
                    Err(()) => blocks[id].jumps_to_unknown = true,
                }
            }
            Outcome::Halt | Outcome::Invalid => {}
        }
    }

    for (id, mut s) in succ.into_iter().enumerate() {
        s.sort_unstable();
        for t in &s {
            blocks[*t].predecessors.push(id);
        }
        blocks[id].successors = s;
    }
    for b in &mut blocks {
        b.predecessors.sort_unstable();
        b.predecessors.dedup();
    }
    let dominators = immediate_dominators(&blocks, 0);
    let mut cfg = ControlFlowGraph {
        blocks,
        entry: 0,
        dominators,
        loops: Vec::new(),
        entry_taint,
        first_entry,
        truncated,
        by_pc,
    };
    cfg.loops = detect_loops(&cfg);
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{assemble, disassemble};

    fn cfg(src: &str) -> ControlFlowGraph {
        build_cfg(&disassemble(&assemble(src).unwrap()))
    }

    #[test]
    fn straight_line_is_one_block() {
        let g = cfg("PUSH1 0x01 PUSH1 0x02 ADD STOP");
        assert_eq!(g.blocks.len(), 1);
        assert_eq!(g.blocks[0].terminator, Terminator::Stop);
        assert!(g.loops.is_empty());
    }

    #[test]
    fn direct_jump_edge() {
        let g = cfg("PUSH1 @d JUMP INVALID d: JUMPDEST STOP");
        assert_eq!(g.blocks.len(), 3);
        assert_eq!(g.blocks[0].successors, vec![2]);
        assert!(!g.blocks[1].reachable);
        assert!(g.blocks[1].predecessors.is_empty());
    }

    #[test]
    fn jump_through_dup_and_swap() {
        let g = cfg("PUSH1 @d PUSH1 0x00 SWAP1 DUP1 POP JUMP d: JUMPDEST STOP");
        assert_eq!(g.blocks[0].successors, vec![1]);
    }

    #[test]
    fn dynamic_jump_goes_to_unknown() {
        let g = cfg("PUSH1 0x00 CALLDATALOAD JUMP d: JUMPDEST STOP");
        assert!(g.blocks[0].jumps_to_unknown);
        assert!(g.blocks[0].successors.is_empty());
    }

    #[test]
    fn jump_to_non_jumpdest_is_dropped() {
        let g = cfg("PUSH1 0x04 JUMP STOP STOP");
        assert!(g.blocks[0].successors.is_empty());
        assert!(!g.blocks[0].jumps_to_unknown);
    }

    #[test]
    fn internal_call_return_addresses_resolve() {
        // a shared subroutine called from two sites returns to both
        let g = cfg(
            "PUSH1 @r1 PUSH1 @f JUMP r1: JUMPDEST PUSH1 @r2 PUSH1 @f JUMP r2: JUMPDEST STOP \
             f: JUMPDEST JUMP",
        );
        let f = g.blocks.iter().find(|b| b.instructions.len() == 2 && b.terminator == Terminator::Jump).unwrap();
        assert_eq!(f.successors.len(), 2);
        assert!(!f.jumps_to_unknown);
    }

    #[test]
    fn empty_code() {
        let g = build_cfg(&[]);
        assert!(g.is_empty());
        assert!(g.loops.is_empty());
    }

    #[test]
    fn block_lookup() {
        let g = cfg("PUSH1 @d JUMP d: JUMPDEST STOP");
        assert_eq!(g.block_at_pc(3), Some(1));
        assert_eq!(g.block_containing(1), Some(0));
        assert_eq!(g.block_containing(4), Some(1));
        assert_eq!(g.block_containing(5), None);
    }
}
