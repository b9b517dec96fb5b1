use super::bytecode;
use super::helpers::*;
use super::AnalysisContext;
use crate::report::{Finding, ImpactLevel};
use crate::semantic::{type_of, ExternalCallKind, FunctionScope, SinkKind, TypeEnv};
use crate::source::ast::*;
use crate::source::Span;
use primitive_types::U256;
use std::collections::{BTreeSet, HashMap};

pub fn detect_unchecked_external_calls(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for body in bodies(src) {
        let pred = contract_pred(&body.scope);
        body.block.walk(&mut |s| {
            let StatementKind::Expression(e) = &s.kind else { return };
            let Some(call) = crate::semantic::classify_external_call(e, &pred) else { return };
            if call.kind.returns_status() {
                out.push(src.finding(
                    "unchecked-external-calls",
                    s.span,
                    format!("return value of `{}` is not checked", src.snippet(e.span)),
                ));
            }
        });
    }
    out
}

fn reverting_items<'b>(body: &Body<'b>, s: &'b Statement) -> Vec<(Span, String)> {
    let mut out = Vec::new();
    if let StatementKind::Throw = s.kind {
        out.push((s.span, "throw".to_string()));
    }
    for root in s.own_expressions() {
        root.walk(&mut |e| {
            if let Some((name, _)) = body.builtin_call(e, &["require", "assert", "revert"]) {
                out.push((e.span, format!("{name}(...)")));
            }
        });
        for c in body.external_calls(root) {
            if c.kind == ExternalCallKind::Transfer {
                out.push((c.expression.span, "transfer".to_string()));
            }
        }
    }
    out
}

/// Loops whose condition does not compare against a constant.
fn unbounded_loops<'b>(body: &Body<'b>) -> Vec<(&'b Statement, &'b Statement)> {
    let mut out = Vec::new();
    body.block.walk(&mut |s| {
        if let Some((cond, inner)) = loop_parts(s) {
            if !condition_is_bounded(&body.scope, cond) {
                out.push((s, inner));
            }
        }
    });
    out
}

pub fn detect_dos_under_external_influence(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for body in bodies(src) {
        for (lp, inner) in unbounded_loops(&body) {
            inner.walk(&mut |s| {
                for (span, what) in reverting_items(&body, s) {
                    out.push(src.finding(
                        "dos-under-external-influence",
                        span,
                        format!("{what} inside the loop at line {} can revert the whole transaction", lp.span.line),
                    ));
                }
            });
        }
    }
    out
}

pub fn detect_nested_call(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let mut out = bytecode::nested_call(ctx);
    let Some(src) = ctx.source else { return out };
    for body in bodies(src) {
        for (lp, inner) in unbounded_loops(&body) {
            let mut kinds = BTreeSet::new();
            inner.walk(&mut |s| {
                for c in body.statement_calls(s) {
                    if matches!(
                        c.kind,
                        ExternalCallKind::Transfer | ExternalCallKind::Send | ExternalCallKind::Call | ExternalCallKind::CallValue
                    ) {
                        kinds.insert(c.kind.describe());
                    }
                }
            });
            if !kinds.is_empty() {
                let list: Vec<&str> = kinds.into_iter().collect();
                out.push(src.finding(
                    "nested-call",
                    lp.span,
                    format!("loop without a constant bound performs external calls ({})", list.join(", ")),
                ));
            }
        }
    }
    out
}

fn is_this_balance(e: &Expression) -> bool {
    let ExpressionKind::MemberAccess { base, member } = &e.kind else { return false };
    if member != "balance" {
        return false;
    }
    match &base.kind {
        ExpressionKind::Identifier(n) => n == "this",
        ExpressionKind::Call { callee, arguments } => {
            matches!(&callee.kind, ExpressionKind::ElementaryType(t) if t.elementary_name() == Some("address"))
                && arguments.len() == 1
                && arguments[0].as_identifier() == Some("this")
        }
        _ => false,
    }
}

pub fn detect_strict_balance_equality(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let mut out = bytecode::strict_balance_equality(ctx);
    let Some(src) = ctx.source else { return out };
    for body in bodies(src) {
        for cond in branch_conditions(body.block) {
            cond.walk(&mut |e| {
                let ExpressionKind::Binary { op, lhs, rhs } = &e.kind else { return };
                if !(is_this_balance(lhs) || is_this_balance(rhs)) {
                    return;
                }
                match op {
                    BinaryOp::Eq => out.push(src.finding(
                        "strict-balance-equality",
                        e.span,
                        format!("branch depends on strict equality `{}`", src.snippet(e.span)),
                    )),
                    BinaryOp::Ne if ctx.config.strict_balance_neq => {
                        let mut f = src.finding(
                            "strict-balance-equality",
                            e.span,
                            format!("branch depends on strict inequality `{}`", src.snippet(e.span)),
                        );
                        f.impact = ImpactLevel::IP5;
                        f.note = Some("informational: `!=` on the balance".to_string());
                        out.push(f);
                    }
                    _ => {}
                }
            });
        }
    }
    out
}

fn int_max(bits: u16) -> U256 {
    if bits >= 256 {
        U256::MAX
    } else {
        (U256::one() << bits) - 1
    }
}

fn counter_of(init: &Statement) -> Option<&str> {
    match &init.kind {
        StatementKind::VariableDeclaration { declarations, .. } if declarations.len() == 1 => {
            declarations[0].as_ref().map(|d| d.name.as_str())
        }
        StatementKind::Expression(Expression {
            kind: ExpressionKind::Assignment { lhs, .. },
            ..
        }) => lhs.as_identifier(),
        _ => None,
    }
}

pub fn detect_unmatched_type_assignment(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for body in bodies(src) {
        body.block.walk(&mut |s| {
            let StatementKind::For {
                init: Some(init),
                condition: Some(cond),
                ..
            } = &s.kind
            else {
                return;
            };
            let Some(counter) = counter_of(init) else { return };
            let ExpressionKind::Binary { op, lhs, rhs } = &cond.kind else { return };
            if !op.is_comparison() {
                return;
            }
            let (bound, inclusive) = if lhs.as_identifier() == Some(counter) {
                (&**rhs, matches!(op, BinaryOp::Le))
            } else if rhs.as_identifier() == Some(counter) {
                (&**lhs, matches!(op, BinaryOp::Ge))
            } else {
                return;
            };
            let Some(ct) = body.scope.declared_type(counter) else { return };
            let Some(cw) = ct.bit_width() else { return };
            let signed = ct.elementary_name().is_some_and(|n| n.starts_with("int"));
            let max = int_max(if signed { cw - 1 } else { cw });
            let mismatch = if let Some(v) = bound.number_value() {
                v > max || (inclusive && v == max)
            } else {
                match type_of(bound, &body.scope as &dyn TypeEnv).and_then(|t| t.bit_width()) {
                    Some(bw) => cw < bw,
                    None => false,
                }
            };
            if mismatch {
                out.push(src.finding(
                    "unmatched-type-assignment",
                    s.span,
                    format!(
                        "loop counter `{counter}` has type {} but the bound `{}` may exceed it",
                        ct.canonical(),
                        src.snippet(bound.span)
                    ),
                ));
            }
        });
    }
    out
}

fn is_tx_origin(e: &Expression) -> bool {
    e.member_path().as_deref() == Some("tx.origin")
}

pub fn detect_transaction_state_dependency(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    let mut report = |e: &Expression| {
        out.push(src.finding(
            "transaction-state-dependency",
            e.span,
            "authorization or control flow depends on `tx.origin`".to_string(),
        ));
    };
    for body in bodies(src) {
        if ctx.config.strict_tx_origin_all_uses {
            body.block.walk_expressions(&mut |e| {
                if is_tx_origin(e) {
                    report(e);
                }
            });
            continue;
        }
        let mut roots = branch_conditions(body.block);
        if body.function.is_none() {
            body.block.walk_expressions(&mut |e| {
                if let ExpressionKind::Binary { op, .. } = &e.kind {
                    if op.is_comparison() {
                        roots.push(e);
                    }
                }
            });
        }
        let mut seen = BTreeSet::new();
        for r in roots {
            r.walk(&mut |e| {
                if is_tx_origin(e) && seen.insert(e.span.byte_offset) {
                    report(e);
                }
            });
        }
    }
    out
}

pub fn detect_block_info_dependency(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    let relevant = [SinkKind::Condition, SinkKind::Index, SinkKind::EtherValue, SinkKind::EtherTarget];
    for body in bodies(src) {
        for flow in &body.facts.block_info {
            let hit: Vec<&str> = relevant
                .iter()
                .filter(|k| flow.sinks.contains(k))
                .map(|k| match k {
                    SinkKind::Condition => "a branch condition",
                    SinkKind::Index => "an array or mapping index",
                    SinkKind::EtherValue => "an Ether amount",
                    _ => "an Ether recipient",
                })
                .collect();
            if !hit.is_empty() {
                out.push(src.finding(
                    "block-info-dependency",
                    flow.span,
                    format!("`{}` flows into {}", flow.text, hit.join(" and ")),
                ));
            }
        }
    }
    out
}

/// State variables each local transitively depends on.
fn local_dependencies(scope: &FunctionScope<'_>, block: &Block) -> HashMap<String, BTreeSet<String>> {
    let mut edges: Vec<(String, &Expression)> = Vec::new();
    block.walk(&mut |s| {
        if let StatementKind::VariableDeclaration {
            declarations,
            initializer: Some(init),
        } = &s.kind
        {
            for d in declarations.iter().flatten() {
                edges.push((d.name.clone(), init));
            }
        }
        for e in s.own_expressions() {
            e.walk(&mut |x| {
                if let ExpressionKind::Assignment { lhs, rhs, .. } = &x.kind {
                    if let Some(n) = lhs.root_identifier() {
                        if scope.is_local_variable(n) {
                            edges.push((n.to_string(), rhs));
                        }
                    }
                }
            });
        }
    });
    let mut deps: HashMap<String, BTreeSet<String>> = HashMap::new();
    loop {
        let mut changed = false;
        for (target, rhs) in &edges {
            let reads = state_reads(scope, rhs, &deps);
            let entry = deps.entry(target.clone()).or_default();
            for r in reads {
                changed |= entry.insert(r);
            }
        }
        if !changed {
            return deps;
        }
    }
}

fn state_reads(scope: &FunctionScope<'_>, e: &Expression, deps: &HashMap<String, BTreeSet<String>>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.walk(&mut |x| {
        if let Some(n) = x.as_identifier() {
            if scope.is_state_variable(n) {
                out.insert(n.to_string());
            } else if let Some(d) = deps.get(n) {
                out.extend(d.iter().cloned());
            }
        }
    });
    out
}

#[derive(Clone)]
struct Pending {
    span: Span,
    guards: BTreeSet<String>,
}

struct ReentrancyWalk<'w, 'b> {
    body: &'w Body<'b>,
    deps: HashMap<String, BTreeSet<String>>,
    conds: Vec<&'b Expression>,
    requires: Vec<&'b Expression>,
    hits: Vec<(Span, String, u32)>,
}

impl<'w, 'b> ReentrancyWalk<'w, 'b> {
    fn seq(&mut self, stmts: &'b [Statement], pending: &mut Vec<Pending>) {
        for s in stmts {
            self.stmt(s, pending);
        }
    }

    fn stmt(&mut self, s: &'b Statement, pending: &mut Vec<Pending>) {
        match &s.kind {
            StatementKind::Block(b) => self.seq(&b.statements, pending),
            StatementKind::If {
                condition,
                then_branch,
                else_branch,
            } => {
                self.simple(s, pending);
                self.conds.push(condition);
                let mut a = pending.clone();
                self.stmt(then_branch, &mut a);
                let mut b = pending.clone();
                if let Some(e) = else_branch {
                    self.stmt(e, &mut b);
                }
                self.conds.pop();
                *pending = union(a, b);
            }
            StatementKind::For { init, body, .. } => {
                if let Some(i) = init {
                    self.stmt(i, pending);
                }
                self.looped(s, body, pending);
            }
            StatementKind::While { body, .. } | StatementKind::DoWhile { body, .. } => self.looped(s, body, pending),
            StatementKind::Return(_) | StatementKind::Throw => {
                self.simple(s, pending);
                pending.clear();
            }
            _ => {
                self.simple(s, pending);
                if s.own_expressions().iter().any(|e| is_revert_call(e)) {
                    pending.clear();
                }
            }
        }
    }

    fn looped(&mut self, s: &'b Statement, body: &'b Statement, pending: &mut Vec<Pending>) {
        let (cond, _) = loop_parts(s).expect("loop statement");
        if let Some(c) = cond {
            self.conds.push(c);
        }
        let before = pending.clone();
        let mut p = pending.clone();
        self.simple(s, &mut p);
        self.stmt(body, &mut p);
        self.simple(s, &mut p);
        self.stmt(body, &mut p);
        if cond.is_some() {
            self.conds.pop();
        }
        *pending = union(before, p);
    }

    /// Calls in the statement's own expressions, then its writes.
    fn simple(&mut self, s: &'b Statement, pending: &mut Vec<Pending>) {
        let body = self.body;
        let scope = &body.scope;
        for root in s.own_expressions() {
            for call in body.external_calls(root) {
                if call.kind != ExternalCallKind::CallValue || !call.invoked {
                    continue;
                }
                let mut guards = BTreeSet::new();
                let mut parts: Vec<&Expression> = self.conds.iter().chain(self.requires.iter()).copied().collect();
                parts.push(call.target);
                parts.extend(call.value);
                parts.extend(call.arguments.iter());
                for p in parts {
                    guards.extend(state_reads(scope, p, &self.deps));
                }
                if !guards.is_empty() {
                    pending.push(Pending {
                        span: call.expression.span,
                        guards,
                    });
                }
            }
        }
        for root in s.own_expressions() {
            for (name, span) in state_writes(scope, root) {
                for p in pending.iter() {
                    if p.guards.contains(name) {
                        self.hits.push((p.span, name.to_string(), span.line));
                    }
                }
            }
            root.walk(&mut |e| {
                if let Some(a) = is_require_like(e) {
                    self.requires.push(a);
                }
            });
        }
    }
}

fn union(mut a: Vec<Pending>, b: Vec<Pending>) -> Vec<Pending> {
    for p in b {
        if !a.iter().any(|q| q.span == p.span) {
            a.push(p);
        }
    }
    a
}

pub fn detect_reentrancy(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for body in bodies(src) {
        if body.function.is_none() {
            continue;
        }
        let deps = local_dependencies(&body.scope, body.block);
        let mut w = ReentrancyWalk {
            body: &body,
            deps,
            conds: Vec::new(),
            requires: Vec::new(),
            hits: Vec::new(),
        };
        let mut pending = Vec::new();
        w.seq(&body.block.statements, &mut pending);
        for (span, var, line) in w.hits {
            out.push(src.finding(
                "reentrancy",
                span,
                format!("`{}` can re-enter before `{var}` is updated at line {line}", src.snippet(span)),
            ));
        }
    }
    out
}

pub fn detect_misleading_data_location(ctx: &AnalysisContext<'_>) -> Vec<Finding> {
    let Some(src) = ctx.source else { return Vec::new() };
    let mut out = Vec::new();
    for body in bodies(src) {
        for d in &body.scope.locals {
            if d.data_location != DataLocation::Unspecified {
                continue;
            }
            let what = match &d.type_name.kind {
                TypeKind::Array { .. } => "array",
                TypeKind::Mapping { .. } => "mapping",
                TypeKind::UserDefined(n) if body.contract.flat.struct_def(n).is_some() => "struct",
                _ => continue,
            };
            out.push(src.finding(
                "misleading-data-location",
                d.span,
                format!("local {what} `{}` has no data location and defaults to storage", d.name),
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

    #[test]
    fn unchecked_calls() {
        let src = "contract C { function f(address a) {\n a.send(1);\n require(a.send(1));\n a.call.value(1);\n bool ok = a.call();\n a.transfer(1);\n a.delegatecall();\n} }";
        assert_eq!(lines(src, "unchecked-external-calls"), vec![2, 4, 7]);
    }

    #[test]
    fn dos_in_unbounded_loop_only() {
        let src = "contract C { address[] m; function f() {\n for (uint i = 0; i < m.length; i++) {\n m[i].transfer(1);\n if (m[i].send(1) == false) break;\n }\n for (uint j = 0; j < 5; j++) { m[j].transfer(1); }\n} }";
        assert_eq!(lines(src, "dos-under-external-influence"), vec![3]);
        assert_eq!(lines(src, "nested-call"), vec![2]);
    }

    #[test]
    fn constant_state_bound_is_bounded() {
        let src = "contract C { uint constant N = 3; address[] m; function f() {\n for (uint i = 0; i < N; i++) { m[i].transfer(1); }\n} }";
        assert!(lines(src, "nested-call").is_empty());
        assert!(lines(src, "dos-under-external-influence").is_empty());
    }

    #[test]
    fn balance_equality() {
        let src = "contract C { function f() {\n if (this.balance == 1 ether) {}\n if (this.balance >= 10 ether && this.balance < 11 ether) {}\n require(address(this).balance == 2);\n if (this.balance != 3) {}\n} }";
        assert_eq!(lines(src, "strict-balance-equality"), vec![2, 4]);
    }

    #[test]
    fn counter_width() {
        let src = "contract C { uint[] m; function f() {\n for (var i = 0; i < m.length; i++) {}\n for (uint256 j = 0; j < m.length; j++) {}\n for (uint8 k = 0; k < 10; k++) {}\n for (uint8 x = 0; x < 300; x++) {}\n for (uint8 y = 0; y <= 255; y++) {}\n} }";
        assert_eq!(lines(src, "unmatched-type-assignment"), vec![2, 5, 6]);
    }

    #[test]
    fn tx_origin_in_conditions() {
        let src = "contract C { address o; event L(address a);\n modifier m { require(tx.origin == o); _; }\n function f() { require(msg.sender == o); emit L(tx.origin); }\n function g() { if (tx.origin != o) revert(); }\n}";
        assert_eq!(lines(src, "transaction-state-dependency"), vec![2, 4]);
    }

    #[test]
    fn block_info_sinks() {
        let src = "contract C { uint[] a; event T(uint t);\n function f() {\n emit T(block.timestamp);\n uint r = now % 10;\n a[r] = 1;\n} }";
        assert_eq!(lines(src, "block-info-dependency"), vec![4]);
    }

    #[test]
    fn reentrancy_order_matters() {
        let bad = "contract V { mapping(address => uint) b;\n function w() { uint amount = b[msg.sender];\n if (amount > 0) {\n msg.sender.call.value(amount)();\n b[msg.sender] = 0; } } }";
        assert_eq!(lines(bad, "reentrancy"), vec![4]);
        let good = "contract V { mapping(address => uint) b;\n function w() { uint amount = b[msg.sender];\n if (amount > 0) {\n b[msg.sender] = 0;\n msg.sender.call.value(amount)(); } } }";
        assert!(lines(good, "reentrancy").is_empty());
        let xfer = "contract V { mapping(address => uint) b;\n function w() { uint amount = b[msg.sender];\n if (amount > 0) {\n msg.sender.transfer(amount);\n b[msg.sender] = 0; } } }";
        assert!(lines(xfer, "reentrancy").is_empty());
        let exclusive = "contract V { mapping(address => uint) b;\n function w() { if (b[msg.sender] > 0) {\n msg.sender.call.value(1)(); } else { b[msg.sender] = 0; } } }";
        assert!(lines(exclusive, "reentrancy").is_empty());
    }

    #[test]
    fn data_location() {
        let src = "contract C { struct S { uint a; }\n function f() {\n uint[] tmp;\n uint[] memory ok;\n S s;\n uint x;\n var v = 1;\n} }";
        assert_eq!(lines(src, "misleading-data-location"), vec![3, 5]);
    }
}
