//! Bytecode-mode halves of the dual-route detectors.

use super::availability::{erc20_signature, ERC20_MANDATORY, ERC20_OPTIONAL};
use super::AnalysisContext;
use crate::evm::opcode::{BALANCE, CALL, EQ, PUSH20};
use crate::evm::symbolic::{summarize, Sym};
use crate::evm::{selector_u32, Taint, Terminator};
use crate::report::Finding;

/// JUMPI on an EQ whose operands carry the BALANCE result.
pub(crate) fn strict_balance_equality(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(bc) = ctx.bytecode else { return Vec::new() };
    let mut out = Vec::new();
    for b in bc.cfg.blocks.iter().filter(|b| b.reachable && b.terminator == Terminator::Jumpi) {
        let summary = summarize(b);
        let Some(cond) = summary.jump_condition else { continue };
        let (inner, _) = cond.strip_iszero();
        let Sym::Op { opcode: EQ, pc, args } = &*inner else { continue };
        let taint = &bc.cfg.entry_taint[b.id];
        let from_balance = args.iter().any(|a| {
            a.mentions_opcode(BALANCE)
                || a.entry_slots()
                    .iter()
                    .any(|i| taint.get(*i).is_some_and(|t| t.contains(Taint::BALANCE)))
        });
        if from_balance {
            out.push(bc.finding(
                "strict-balance-equality",
                *pc,
                "conditional jump depends on EQ over the BALANCE result".to_string(),
            ));
        }
    }
    out
}

/// Unbounded loop whose body contains CALL.
pub(crate) fn nested_call(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(bc) = ctx.bytecode else { return Vec::new() };
    bc.cfg
        .loops
        .iter()
        .filter(|l| !l.is_bounded() && l.contains_opcode(&bc.cfg, CALL))
        .map(|l| {
            bc.finding(
                "nested-call",
                bc.cfg.blocks[l.header].start_pc,
                format!("loop at block {} has no constant bound and executes CALL", l.header),
            )
        })
        .collect()
}

/// Dispatcher that recognizes some ERC-20 selectors but not all mandatory ones.
pub(crate) fn unmatched_erc20(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(bc) = ctx.bytecode else { return Vec::new() };
    let table = &bc.selectors;
    let known = ERC20_MANDATORY
        .iter()
        .chain(ERC20_OPTIONAL.iter())
        .any(|(n, p, _)| table.contains(selector_u32(&erc20_signature(n, p))));
    if !known {
        return Vec::new();
    }
    let missing: Vec<String> = ERC20_MANDATORY
        .iter()
        .map(|(n, p, _)| erc20_signature(n, p))
        .filter(|sig| !table.contains(selector_u32(sig)))
        .collect();
    if missing.is_empty() {
        return Vec::new();
    }
    vec![bc.finding(
        "unmatched-erc20",
        0,
        format!("dispatcher lacks ERC-20 selectors for {}", missing.join(", ")),
    )]
}

/// PUSH20 of a nonzero constant other than the all-ones mask.
pub(crate) fn hard_code_address(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(bc) = ctx.bytecode else { return Vec::new() };
    let mut out = Vec::new();
    for b in bc.cfg.blocks.iter().filter(|b| b.reachable) {
        for ins in &b.instructions {
            if ins.opcode != PUSH20 || ins.truncated {
                continue;
            }
            let bytes = &ins.push_bytes;
            if bytes.iter().all(|x| *x == 0) || bytes.iter().all(|x| *x == 0xff) {
                continue;
            }
            out.push(bc.finding(
                "hard-code-address",
                ins.pc,
                format!("PUSH20 of constant address 0x{}", hex::encode(bytes)),
            ));
        }
    }
    out
}
