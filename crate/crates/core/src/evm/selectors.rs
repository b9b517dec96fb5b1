//! Function selector recovery from the dispatcher.

use super::cfg::{BlockId, ControlFlowGraph, Terminator};
use super::opcode::{EQ, PUSH4};
use super::symbolic::{summarize, Sym};
use primitive_types::U256;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelectorTable {
    pub entries: BTreeMap<u32, BlockId>,
}

impl SelectorTable {
    pub fn contains(&self, selector: u32) -> bool {
        self.entries.contains_key(&selector)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn selectors(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }
}

/// Matches `PUSH4 s; EQ; PUSH dest; JUMPI` in reachable blocks.
pub fn extract_selectors(cfg: &ControlFlowGraph) -> SelectorTable {
    let mut table = SelectorTable::default();
    for block in cfg.blocks.iter().filter(|b| b.reachable && b.terminator == Terminator::Jumpi) {
        let pushed: Vec<U256> = block
            .instructions
            .iter()
            .filter(|i| i.opcode == PUSH4)
            .filter_map(|i| i.push_value())
            .collect();
        if pushed.is_empty() {
            continue;
        }
        let summary = summarize(block);
        let (Some(cond), Some(target)) = (summary.jump_condition, summary.jump_target) else {
            continue;
        };
        let Sym::Op { opcode: EQ, args, .. } = &*cond else {
            continue;
        };
        let selector = match (args[0].as_const(), args[1].as_const()) {
            (Some(c), None) | (None, Some(c)) if pushed.contains(&c) => c.low_u32(),
            _ => continue,
        };
        let dest = target
            .as_const()
            .filter(|d| *d <= U256::from(usize::MAX))
            .and_then(|d| cfg.block_at_pc(d.as_usize()));
        if let Some(dest) = dest {
            table.entries.entry(selector).or_insert(dest);
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{assemble, build_cfg, disassemble, selector_u32};

    #[test]
    fn two_function_dispatcher() {
        let src = "PUSH1 0x00 CALLDATALOAD PUSH29 0x0100000000000000000000000000000000000000000000000000000000 \
            SWAP1 DIV PUSH4 0xffffffff AND \
            DUP1 PUSH4 0xa9059cbb EQ PUSH2 @t JUMPI \
            DUP1 PUSH4 0x70a08231 EQ PUSH2 @b JUMPI \
            PUSH1 0x00 DUP1 REVERT \
            t: JUMPDEST STOP b: JUMPDEST STOP";
        let g = build_cfg(&disassemble(&assemble(src).unwrap()));
        let t = extract_selectors(&g);
        assert_eq!(t.len(), 2);
        assert!(t.contains(selector_u32("transfer(address,uint256)")));
        assert!(t.contains(selector_u32("balanceOf(address)")));
    }

    #[test]
    fn fallback_only() {
        let g = build_cfg(&disassemble(&assemble("CALLVALUE PUSH1 @x JUMPI STOP x: JUMPDEST STOP").unwrap()));
        assert!(extract_selectors(&g).is_empty());
    }
}
