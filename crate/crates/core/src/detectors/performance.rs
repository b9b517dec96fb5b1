use super::AnalysisContext;
use crate::report::Finding;
use crate::semantic::{CallNode, VarRole};
use crate::source::ast::*;

pub fn detect_unused_statement(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for c in &src.contracts {
        for (f, facts) in c.flat.def.functions.iter().zip(&c.function_facts) {
            if f.body.is_none() {
                continue;
            }
            for v in &facts.vars {
                if v.live || v.name.is_empty() || v.role == VarRole::NamedReturn {
                    continue;
                }
                let what = if v.role == VarRole::Parameter { "parameter" } else { "local variable" };
                out.push(src.finding(
                    "unused-statement",
                    v.span,
                    format!("{what} `{}` in `{}` never affects the outcome", v.name, f.display_name()),
                ));
            }
        }
    }
    out
}

pub fn detect_high_gas_function_type(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let called = |target: &FunctionDefinition| {
        src.contracts.iter().any(|c| {
            c.flat
                .functions
                .iter()
                .position(|g| std::ptr::eq(*g, target))
                .is_some_and(|i| c.call_graph.has_callers(CallNode::Function(i)))
        })
    };
    let mut out = Vec::new();
    for c in &src.contracts {
        for f in &c.flat.def.functions {
            if f.kind != FunctionKind::Function || f.body.is_none() {
                continue;
            }
            if !matches!(f.visibility, Visibility::Public | Visibility::Default) {
                continue;
            }
            let Some(p) = f.parameters.iter().find(|p| p.type_name.is_dynamic_data()) else { continue };
            if called(f) {
                continue;
            }
            out.push(src.finding(
                "high-gas-function-type",
                f.span,
                format!(
                    "public function `{}` takes `{}` and is never called internally; declare it external",
                    f.name,
                    p.type_name.canonical()
                ),
            ));
        }
    }
    out
}

fn has_byte_array(t: &TypeName) -> bool {
    match &t.kind {
        TypeKind::Array { element, .. } => {
            matches!(element.elementary_name(), Some("byte" | "bytes1")) || has_byte_array(element)
        }
        TypeKind::Mapping { key, value } => has_byte_array(key) || has_byte_array(value),
        _ => false,
    }
}

pub fn detect_high_gas_data_type(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut decls: Vec<&VariableDeclaration> = Vec::new();
    for c in &src.unit.contracts {
        decls.extend(&c.state_variables);
        for s in &c.structs {
            decls.extend(&s.members);
        }
        for e in &c.events {
            decls.extend(&e.parameters);
        }
        for f in &c.functions {
            decls.extend(&f.parameters);
            decls.extend(&f.returns);
            if let Some(b) = &f.body {
                collect_locals(b, &mut decls);
            }
        }
        for m in &c.modifiers {
            decls.extend(&m.parameters);
            collect_locals(&m.body, &mut decls);
        }
    }
    decls
        .into_iter()
        .filter(|d| has_byte_array(&d.type_name))
        .map(|d| {
            src.finding(
                "high-gas-data-type",
                d.span,
                format!("`{}` is declared as {}; use bytes", if d.name.is_empty() { "<unnamed>" } else { &d.name }, d.type_name.canonical()),
            )
        })
        .collect()
}

fn collect_locals<'a>(b: &'a Block, out: &mut Vec<&'a VariableDeclaration>) {
    b.walk(&mut |s| {
        if let StatementKind::VariableDeclaration { declarations, .. } = &s.kind {
            out.extend(declarations.iter().flatten());
        }
    });
}

#[cfg(test)]
mod tests {
    use crate::detectors::testutil::run_on;

    fn lines(src: &str, id: &str) -> Vec<u32> {
        run_on(src, id).iter().map(|f| f.line.unwrap()).collect()
    }

    #[test]
    fn dead_chain() {
        let src = "contract C { uint s;\n function f(uint a,\n uint b) {\n uint x = a;\n uint y = x;\n s = b;\n} }";
        assert_eq!(lines(src, "unused-statement"), vec![2, 4, 5]);
        assert!(lines("contract C { uint s; function f(uint a) { s = a; } }", "unused-statement").is_empty());
    }

    #[test]
    fn public_array_param() {
        let src = "contract C {\n function a(uint[] x) public returns (uint) { return x[0]; }\n function b(uint[] x) external returns (uint) { return x[0]; }\n function c(uint[] x) returns (uint) { return x[0]; }\n function d() { uint[] memory y; c(y); }\n function e(string s) { }\n}";
        assert_eq!(lines(src, "high-gas-function-type"), vec![2, 6]);
    }

    #[test]
    fn byte_arrays() {
        let src = "contract C {\n byte[] data;\n bytes ok;\n uint8[] nums;\n function f(byte[] p) { bytes1[] memory q; }\n}";
        assert_eq!(lines(src, "high-gas-data-type"), vec![2, 5]);
        assert_eq!(run_on(src, "high-gas-data-type").len(), 2);
    }
}
