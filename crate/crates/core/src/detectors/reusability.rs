use super::helpers::*;
use super::AnalysisContext;
use crate::report::Finding;
use crate::source::ast::*;
use crate::source::Span;

const REPLACEMENTS: &[(&str, &str)] = &[
    ("throw", "revert()"),
    ("suicide", "selfdestruct"),
    ("sha3", "keccak256"),
    ("callcode", "delegatecall"),
    ("msg.gas", "gasleft()"),
    ("constant", "view"),
    ("block.blockhash", "blockhash"),
];

fn replacement(name: &str) -> Option<&'static str> {
    REPLACEMENTS.iter().find(|(n, _)| *n == name).map(|(_, r)| *r)
}

fn message(name: &str) -> String {
    match replacement(name) {
        Some(r) => format!("`{name}` is deprecated; use `{r}`"),
        None => format!("`{name}` is deprecated"),
    }
}

pub fn detect_deprecated_apis(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let extra = &ctx.config.deprecated_extra;
    let mut hits: Vec<(Span, String)> = Vec::new();
    for body in bodies(src) {
        let shadowed = |n: &str| body.scope.lookup(n).is_some();
        body.block.walk(&mut |s| {
            if matches!(s.kind, StatementKind::Throw) {
                hits.push((s.span, "throw".into()));
            }
        });
        body.block.walk_expressions(&mut |e| match &e.kind {
            ExpressionKind::Call { callee, .. } => {
                if let Some(n @ ("suicide" | "sha3")) = callee.as_identifier() {
                    if !shadowed(n) {
                        hits.push((e.span, n.to_string()));
                    }
                }
            }
            ExpressionKind::MemberAccess { member, .. } => {
                if member == "callcode" {
                    hits.push((e.span, "callcode".into()));
                }
                let path = e.member_path();
                if path.as_deref() == Some("msg.gas") {
                    hits.push((e.span, "msg.gas".into()));
                }
                if let Some(p) = path {
                    if p.contains('.') && extra.contains(&p) {
                        hits.push((e.span, p));
                    }
                }
            }
            ExpressionKind::Identifier(n)
                if extra.iter().any(|x| x == n) && !matches!(body.scope.lookup(n).map(|s| s.kind), Some(k) if k.is_variable()) => {
                    hits.push((e.span, n.clone()));
                }
            _ => {}
        });
    }
    for c in &src.contracts {
        for f in &c.flat.def.functions {
            if f.mutability == Mutability::Constant {
                hits.push((f.span, "constant".into()));
            }
        }
        let has_fn = |n: &str| c.flat.functions_named(n).next().is_some();
        for v in &c.flat.def.state_variables {
            if let Some(init) = &v.initializer {
                init.walk(&mut |e| {
                    if let ExpressionKind::Call { callee, .. } = &e.kind {
                        if let Some(n @ ("sha3" | "suicide")) = callee.as_identifier() {
                            if !has_fn(n) {
                                hits.push((e.span, n.to_string()));
                            }
                        }
                    }
                });
            }
        }
    }
    hits.into_iter()
        .map(|(span, name)| src.finding("deprecated-apis", span, message(&name)))
        .collect()
}

pub fn detect_unspecified_compiler_version(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let pragmas: Vec<&PragmaDirective> = src.unit.pragmas.iter().filter(|p| p.is_solidity()).collect();
    if pragmas.is_empty() {
        let mut f = src.finding(
            "unspecified-compiler-version",
            src.unit.span,
            "no `pragma solidity` directive".to_string(),
        );
        f.line = Some(1);
        f.column = Some(1);
        return vec![f];
    }
    pragmas
        .into_iter()
        .filter(|p| p.constraint_kind != ConstraintKind::Exact)
        .map(|p| {
            src.finding(
                "unspecified-compiler-version",
                p.span,
                format!("compiler version `{}` is not pinned", p.version_text.trim()),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use crate::detectors::testutil::{run_on, run_with};
    use crate::detectors::DetectorConfig;

    fn lines(src: &str, id: &str) -> Vec<u32> {
        run_on(src, id).iter().map(|f| f.line.unwrap()).collect()
    }

    #[test]
    fn deprecated_set() {
        let src = "contract C {\n function a() { throw; }\n function b() { revert(); }\n function c(bytes x) returns (bytes32) { return sha3(x); }\n function d(bytes x) returns (bytes32) { return keccak256(x); }\n function e() constant returns (uint) { return msg.gas; }\n function f(address p) { suicide(p); }\n function g() returns (bytes32) { return block.blockhash(1); }\n}";
        assert_eq!(lines(src, "deprecated-apis"), vec![2, 4, 6, 7]);
        let cfg = DetectorConfig {
            deprecated_extra: vec!["block.blockhash".into()],
            ..DetectorConfig::default()
        };
        let with: Vec<u32> = run_with(src, "deprecated-apis", &cfg).iter().map(|f| f.line.unwrap()).collect();
        assert_eq!(with, vec![2, 4, 6, 7, 8]);
    }

    #[test]
    fn user_function_named_suicide() {
        let src = "contract C { function suicide(address a) { selfdestruct(a); } function k(address a) { suicide(a); } }";
        assert!(lines(src, "deprecated-apis").is_empty());
    }

    #[test]
    fn pragma_forms() {
        assert_eq!(lines("pragma solidity ^0.4.25;\ncontract C {}", "unspecified-compiler-version"), vec![1]);
        assert!(lines("pragma solidity 0.4.25;\ncontract C {}", "unspecified-compiler-version").is_empty());
        assert_eq!(lines("\n\ncontract C {}", "unspecified-compiler-version"), vec![1]);
        assert_eq!(lines("pragma solidity >=0.4.22 <0.6.0;\ncontract C {}", "unspecified-compiler-version"), vec![1]);
    }
}
