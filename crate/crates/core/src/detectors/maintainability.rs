use super::bytecode;
use super::helpers::*;
use super::AnalysisContext;
use crate::evm::{eip55_checksum, eip55_is_valid};
use crate::report::Finding;
use crate::source::ast::*;
use std::collections::BTreeSet;

fn all_expressions<'a>(c: &'a ContractDefinition, f: &mut dyn FnMut(&'a Expression)) {
    for v in &c.state_variables {
        if let Some(init) = &v.initializer {
            init.walk(f);
        }
    }
    for func in &c.functions {
        for m in &func.modifiers_invoked {
            for a in &m.arguments {
                a.walk(f);
            }
        }
        if let Some(b) = &func.body {
            b.walk_expressions(f);
        }
    }
    for m in &c.modifiers {
        m.body.walk_expressions(f);
    }
}

pub fn detect_hard_code_address(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let mut out = bytecode::hard_code_address(ctx);
    let Some(src) = ctx.source else { return out };
    for c in &src.unit.contracts {
        all_expressions(c, &mut |e| {
            let ExpressionKind::Literal(Literal {
                kind: LiteralKind::Address,
                text,
            }) = &e.kind
            else {
                return;
            };
            if text.trim_start_matches("0x").bytes().all(|b| b == b'0') {
                return;
            }
            let mut f = src.finding("hard-code-address", e.span, format!("hard-coded address `{text}`"));
            if eip55_is_valid(text) == Ok(false) {
                let expected = eip55_checksum(text).unwrap_or_default();
                f.note = Some(format!("illegal address: EIP-55 checksum mismatch, expected {expected}"));
            }
            out.push(f);
        });
    }
    out
}

/// State bools that gate a public entry point and are written by a
/// caller-checked function.
fn has_circuit_breaker(c: &super::ContractFacts<'_>) -> bool {
    let bools: BTreeSet<&str> = c
        .flat
        .state_variables
        .iter()
        .filter(|v| v.type_name.elementary_name() == Some("bool") && !v.is_constant)
        .map(|v| v.name.as_str())
        .collect();
    if bools.is_empty() {
        return false;
    }
    let mentions = |e: &Expression, name: &str| e.any(&mut |x| x.as_identifier() == Some(name));
    let modifier_guards_caller = |name: &str| {
        c.flat
            .modifier(name)
            .is_some_and(|(_, m)| branch_conditions(&m.body).iter().any(|e| compares_caller(e)))
    };
    let mut checked: BTreeSet<&str> = BTreeSet::new();
    let mut written: BTreeSet<&str> = BTreeSet::new();
    for (scope, block, func) in flat_scopes(c) {
        let conds = branch_conditions(block);
        let public = func.is_none_or(|f| f.visibility.is_externally_callable());
        if public {
            for b in &bools {
                if conds.iter().any(|e| mentions(e, b)) {
                    checked.insert(b);
                }
            }
        }
        let Some(f) = func else { continue };
        if !f.visibility.is_externally_callable() {
            continue;
        }
        let gated = conds.iter().any(|e| compares_caller(e))
            || f.modifiers_invoked.iter().any(|m| modifier_guards_caller(&m.name));
        if gated {
            for (name, _) in block_state_writes(&scope, block) {
                if bools.contains(name) {
                    written.insert(name);
                }
            }
        }
    }
    checked.intersection(&written).next().is_some()
}

pub fn detect_missing_interrupter(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for c in &src.contracts {
        if c.flat.def.kind != ContractKind::Contract || c.flat.is_abstract() || c.is_base {
            continue;
        }
        if !c.flat.has_payable_function() {
            continue;
        }
        let (ether_out, destroy) = ether_capabilities(c);
        if !ether_out || destroy || has_circuit_breaker(c) {
            continue;
        }
        out.push(src.finding(
            "missing-interrupter",
            c.flat.def.span,
            format!("contract `{}` holds and sends Ether but has no selfdestruct or owner-controlled stop switch", c.flat.name()),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::detectors::testutil::run_on;

    #[test]
    fn address_literals() {
        let src = "contract C { address a = 0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed;\n address b = 0x5aAeb6053f3E94C9b9A09f33669435E7Ef1BeAed;\n address z = 0x0000000000000000000000000000000000000000;\n function f(address p) { p.transfer(1); } }";
        let f = run_on(src, "hard-code-address");
        assert_eq!(f.len(), 2);
        assert!(f[0].note.is_none());
        assert!(f[1].note.as_deref().unwrap().contains("0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed"));
    }

    #[test]
    fn interrupter_shapes() {
        let bare = "contract C { function() payable {} function w() { msg.sender.transfer(1); } }";
        assert_eq!(run_on(bare, "missing-interrupter").len(), 1);
        let destroy = "contract C { address o; function() payable {} function w() { msg.sender.transfer(1); } function k() { require(msg.sender == o); selfdestruct(o); } }";
        assert!(run_on(destroy, "missing-interrupter").is_empty());
        let breaker = "contract C { address o; bool stopped;
 modifier onlyOwner { require(msg.sender == o); _; }
 function() payable { require(!stopped); }
 function w() { require(!stopped); msg.sender.transfer(1); }
 function stop() onlyOwner { stopped = true; } }";
        assert!(run_on(breaker, "missing-interrupter").is_empty());
        let open_breaker = breaker.replace("function stop() onlyOwner", "function stop()");
        assert_eq!(run_on(&open_breaker, "missing-interrupter").len(), 1);
        assert!(run_on("contract P { function f() pure returns (uint) { return 1; } }", "missing-interrupter").is_empty());
    }
}
