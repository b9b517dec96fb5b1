//! Immediate dominators (Cooper, Harvey and Kennedy's iterative scheme).

use super::cfg::{BasicBlock, BlockId};

fn reverse_postorder(blocks: &[BasicBlock], entry: BlockId) -> Vec<BlockId> {
    let mut order = Vec::with_capacity(blocks.len());
    let mut visited = vec![false; blocks.len()];
    let mut stack = vec![(entry, 0usize)];
    visited[entry] = true;
    while let Some((node, idx)) = stack.pop() {
        let succ = &blocks[node].successors;
        if idx < succ.len() {
            stack.push((node, idx + 1));
            let next = succ[idx];
            if !visited[next] {
                visited[next] = true;
                stack.push((next, 0));
            }
        } else {
            order.push(node);
        }
    }
    order.reverse();
    order
}

pub fn immediate_dominators(blocks: &[BasicBlock], entry: BlockId) -> Vec<Option<BlockId>> {
    let n = blocks.len();
    let mut idom: Vec<Option<BlockId>> = vec![None; n];
    if n == 0 {
        return idom;
    }
    let rpo = reverse_postorder(blocks, entry);
    let mut rank = vec![usize::MAX; n];
    for (i, b) in rpo.iter().enumerate() {
        rank[*b] = i;
    }
    idom[entry] = Some(entry);
    let intersect = |idom: &[Option<BlockId>], mut a: BlockId, mut b: BlockId| {
        while a != b {
            while rank[a] > rank[b] {
                a = idom[a].expect("processed");
            }
            while rank[b] > rank[a] {
                b = idom[b].expect("processed");
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in rpo.iter().skip(1) {
            let mut new_idom: Option<BlockId> = None;
            for &p in &blocks[b].predecessors {
                if rank[p] == usize::MAX || idom[p].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => p,
                    Some(cur) => intersect(&idom, p, cur),
                });
            }
            if new_idom.is_some() && idom[b] != new_idom {
                idom[b] = new_idom;
                changed = true;
            }
        }
    }
    idom[entry] = None;
    idom
}

#[cfg(test)]
mod tests {
    use crate::evm::{assemble, build_cfg, disassemble};

    #[test]
    fn diamond() {
        // entry branches to two arms that rejoin
        let g = build_cfg(&disassemble(
            &assemble(
                "PUSH1 0x00 CALLDATALOAD PUSH1 @b JUMPI PUSH1 @j JUMP \
                 b: JUMPDEST PUSH1 @j JUMP j: JUMPDEST STOP",
            )
            .unwrap(),
        ));
        let join = g.block_at_pc(g.blocks.last().unwrap().start_pc).unwrap();
        assert_eq!(g.dominators[join], Some(0));
        assert_eq!(g.dominators[0], None);
        assert!(g.dominates(0, join));
        assert!(!g.dominates(1, join));
    }
}
