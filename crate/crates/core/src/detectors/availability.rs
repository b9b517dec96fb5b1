use super::bytecode;
use super::helpers::*;
use super::{AnalysisContext, ContractFacts};
use crate::report::Finding;
use crate::source::ast::*;
use crate::source::Span;

/// (name, parameter types, return types)
pub(crate) const ERC20_MANDATORY: [(&str, &[&str], &str); 6] = [
    ("totalSupply", &[], "uint256"),
    ("balanceOf", &["address"], "uint256"),
    ("transfer", &["address", "uint256"], "bool"),
    ("transferFrom", &["address", "address", "uint256"], "bool"),
    ("approve", &["address", "uint256"], "bool"),
    ("allowance", &["address", "address"], "uint256"),
];

pub(crate) const ERC20_OPTIONAL: [(&str, &[&str], &str); 3] =
    [("name", &[], "string"), ("symbol", &[], "string"), ("decimals", &[], "uint8")];

const ERC20_EVENTS: [(&str, &[&str]); 2] = [
    ("Transfer", &["address", "address", "uint256"]),
    ("Approval", &["address", "address", "uint256"]),
];

pub(crate) fn erc20_signature(name: &str, params: &[&str]) -> String {
    format!("{name}({})", params.join(","))
}

/// An externally visible function or public state variable getter.
struct Callable {
    name: String,
    params: Vec<String>,
    returns: Vec<String>,
    span: Span,
}

fn getter(v: &VariableDeclaration) -> Callable {
    let mut params = Vec::new();
    let mut t = &v.type_name;
    loop {
        match &t.kind {
            TypeKind::Mapping { key, value } => {
                params.push(key.canonical());
                t = value;
            }
            TypeKind::Array { element, .. } => {
                params.push("uint256".to_string());
                t = element;
            }
            _ => break,
        }
    }
    Callable {
        name: v.name.clone(),
        params,
        returns: vec![t.canonical()],
        span: v.span,
    }
}

fn callables(c: &ContractFacts<'_>) -> Vec<Callable> {
    let mut out: Vec<Callable> = c
        .flat
        .functions
        .iter()
        .filter(|f| f.kind == FunctionKind::Function && f.visibility.is_externally_callable())
        .map(|f| Callable {
            name: f.name.clone(),
            params: f.parameter_types(),
            returns: f.returns.iter().map(|r| r.type_name.canonical()).collect(),
            span: f.span,
        })
        .collect();
    out.extend(
        c.flat
            .state_variables
            .iter()
            .filter(|v| v.visibility == Visibility::Public)
            .map(|v| getter(v)),
    );
    out
}

pub fn detect_unmatched_erc20(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let mut out = bytecode::unmatched_erc20(ctx);
    let Some(src) = ctx.source else { return out };
    for c in &src.contracts {
        if c.flat.def.kind != ContractKind::Contract || c.flat.is_abstract() || c.is_base {
            continue;
        }
        let fns = callables(c);
        let find = |name: &str, params: &[&str]| {
            fns.iter()
                .find(|f| f.name == name && f.params.iter().map(String::as_str).eq(params.iter().copied()))
        };
        let all = ERC20_MANDATORY.iter().chain(ERC20_OPTIONAL.iter());
        if !all.clone().any(|(n, p, _)| find(n, p).is_some()) {
            continue;
        }
        let mut problems = Vec::new();
        let missing: Vec<String> = ERC20_MANDATORY
            .iter()
            .filter(|(n, p, _)| find(n, p).is_none())
            .map(|(n, p, _)| erc20_signature(n, p))
            .collect();
        if !missing.is_empty() {
            problems.push(format!("missing {}", missing.join(", ")));
        }
        for (name, params) in ERC20_EVENTS {
            match c.flat.event(name) {
                None => problems.push(format!("missing event {}", erc20_signature(name, params))),
                Some(e) => {
                    let types: Vec<String> = e.parameters.iter().map(|p| p.type_name.canonical()).collect();
                    if !types.iter().map(String::as_str).eq(params.iter().copied()) {
                        problems.push(format!("event {name}({}) does not match the standard", types.join(",")));
                    }
                }
            }
        }
        if !problems.is_empty() {
            out.push(src.finding(
                "unmatched-erc20",
                c.flat.def.span,
                format!("token `{}` does not follow ERC-20: {}", c.flat.name(), problems.join("; ")),
            ));
        }
        for (n, p, ret) in all {
            let Some(f) = find(n, p) else { continue };
            if f.returns.len() != 1 || f.returns[0] != *ret {
                out.push(src.finding(
                    "unmatched-erc20",
                    f.span,
                    format!(
                        "`{}` returns ({}) instead of ({ret})",
                        erc20_signature(n, p),
                        f.returns.join(",")
                    ),
                ));
            }
        }
    }
    out
}

fn has_conditional_revert(body: &Body<'_>) -> bool {
    let mut found = false;
    body.block.walk(&mut |s| {
        if let StatementKind::If {
            then_branch,
            else_branch,
            ..
        } = &s.kind
        {
            let mut check = |b: &Statement| {
                b.walk(&mut |x| {
                    if matches!(x.kind, StatementKind::Throw) || x.own_expressions().iter().any(|e| is_revert_call(e)) {
                        found = true;
                    }
                })
            };
            check(then_branch);
            if let Some(e) = else_branch {
                check(e);
            }
        }
    });
    body.block.walk_expressions(&mut |e| {
        if body.builtin_call(e, &["require", "assert"]).is_some() {
            found = true;
        }
    });
    found
}

pub fn detect_missing_reminder(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for body in bodies(src) {
        let Some(f) = body.function else { continue };
        if !f.is_payable || f.kind == FunctionKind::Constructor {
            continue;
        }
        let writes = !block_state_writes(&body.scope, body.block).is_empty();
        if !(writes || has_conditional_revert(&body)) || emits_event(&body.scope, body.block) {
            continue;
        }
        out.push(src.finding(
            "missing-reminder",
            f.span,
            format!("payable function `{}` changes state without emitting an event", f.display_name()),
        ));
    }
    out
}

fn always_exits(s: &Statement) -> bool {
    match &s.kind {
        StatementKind::Return(_) | StatementKind::Throw => true,
        StatementKind::Expression(e) => is_revert_call(e),
        StatementKind::Block(b) => b.statements.iter().any(always_exits),
        StatementKind::If {
            then_branch,
            else_branch: Some(e),
            ..
        } => always_exits(then_branch) && always_exits(e),
        _ => false,
    }
}

pub fn detect_missing_return_statement(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for c in &src.contracts {
        for f in &c.flat.def.functions {
            let Some(body) = &f.body else { continue };
            if f.returns.is_empty() || f.returns.iter().any(|r| !r.name.is_empty()) {
                continue;
            }
            if !body.statements.iter().any(always_exits) {
                out.push(src.finding(
                    "missing-return-statement",
                    f.span,
                    format!("function `{}` declares a return value but can finish without returning", f.display_name()),
                ));
            }
        }
    }
    out
}

pub fn detect_greedy_contract(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
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
        if !ether_out && !destroy {
            out.push(src.finding(
                "greedy-contract",
                c.flat.def.span,
                format!("contract `{}` can receive Ether but has no way to send it out", c.flat.name()),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::detectors::testutil::run_on;

    fn lines(src: &str, id: &str) -> Vec<u32> {
        run_on(src, id).iter().map(|f| f.line.unwrap()).collect()
    }

    const TOKEN: &str = "contract T {
 mapping(address => uint256) public balanceOf;
 event Transfer(address indexed from, address indexed to, uint256 value);
 event Approval(address indexed owner, address indexed spender, uint256 value);
 function totalSupply() public view returns (uint256) { return 1; }
 function transfer(address to, uint256 v) public returns (bool) { return true; }
 function transferFrom(address a, address b, uint256 v) public returns (bool) { return true; }
 function approve(address s, uint256 v) public returns (bool) { return true; }
 function allowance(address a, address b) public view returns (uint256) { return 0; }
}";

    #[test]
    fn conformant_token_is_clean() {
        assert!(run_on(TOKEN, "unmatched-erc20").is_empty());
    }

    #[test]
    fn transfer_without_bool() {
        let src = TOKEN.replace(
            "function transfer(address to, uint256 v) public returns (bool) { return true; }",
            "function transfer(address to, uint256 v) public { }",
        );
        assert_eq!(lines(&src, "unmatched-erc20"), vec![6]);
        let partial = "contract P {\n function transfer(address to, uint256 v) public returns (bool) { return true; }\n}";
        let f = run_on(partial, "unmatched-erc20");
        assert_eq!(f.len(), 1);
        assert!(f[0].message.contains("approve(address,uint256)") && f[0].message.contains("event Transfer"));
        assert!(run_on("contract N { function go() {} }", "unmatched-erc20").is_empty());
    }

    #[test]
    fn reminder() {
        let src = "contract C { uint n; event R(address a);\n function a() payable { n++; }\n function b() payable { n++; emit R(msg.sender); }\n function() payable {}\n function c() payable { if (msg.value == 0) revert(); }\n function d() payable { n++; R(msg.sender); }\n}";
        assert_eq!(lines(src, "missing-reminder"), vec![2, 5]);
    }

    #[test]
    fn missing_return() {
        let src = "contract C {\n function a() returns (bool) { }\n function b() returns (bool) { return true; }\n function c() returns (bool ok) { ok = true; }\n function d(uint x) returns (uint) { if (x > 1) { return 1; } else { revert(); } }\n function e(uint x) returns (uint) { if (x > 1) { return 1; } }\n}";
        assert_eq!(lines(src, "missing-return-statement"), vec![2, 6]);
    }

    #[test]
    fn greedy() {
        assert_eq!(lines("contract G {\n function() payable {} }", "greedy-contract"), vec![1]);
        assert!(lines("contract G { function() payable {} function w() { msg.sender.transfer(1); } }", "greedy-contract").is_empty());
        assert!(lines("contract G { function w() { } }", "greedy-contract").is_empty());
        assert!(lines("contract B { function() payable {} } contract D is B { function w() { msg.sender.send(1); } }", "greedy-contract").is_empty());
    }
}
