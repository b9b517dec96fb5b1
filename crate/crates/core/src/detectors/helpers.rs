use super::{ContractFacts, SourceFacts};
use crate::semantic::calls::{external_calls_in, is_contract_typed};
use crate::semantic::{DefUseFacts, ExternalCall, ExternalCallKind, FunctionScope, SymbolKind};
use crate::source::ast::*;
use crate::source::Span;

/// A function or modifier body declared directly in a contract of the file,
/// with its scope resolved against the flattened contract.
pub(crate) struct Body<'b> {
    pub contract: &'b ContractFacts<'b>,
    pub scope: FunctionScope<'b>,
    pub block: &'b Block,
    pub function: Option<&'b FunctionDefinition>,
    pub facts: &'b DefUseFacts,
}

impl<'b> Body<'b> {
    pub fn external_calls(&self, e: &'b Expression) -> Vec<ExternalCall<'b>> {
        let scope = &self.scope;
        external_calls_in(e, &|x| is_contract_typed(scope, x))
    }

    /// External calls in the statement's own expressions.
    pub fn statement_calls(&self, s: &'b Statement) -> Vec<ExternalCall<'b>> {
        s.own_expressions().into_iter().flat_map(|e| self.external_calls(e)).collect()
    }

    /// Calls `name(...)` where `name` is not shadowed by a user definition.
    pub fn builtin_call<'e>(&self, e: &'e Expression, names: &[&str]) -> Option<(&'e str, &'e [Expression])> {
        let ExpressionKind::Call { callee, arguments } = &e.kind else {
            return None;
        };
        let name = callee.as_identifier()?;
        if !names.contains(&name) || self.scope.lookup(name).is_some() {
            return None;
        }
        Some((name, arguments))
    }
}

pub(crate) fn bodies<'b>(src: &'b SourceFacts<'b>) -> Vec<Body<'b>> {
    let mut out = Vec::new();
    for c in &src.contracts {
        for (i, f) in c.flat.def.functions.iter().enumerate() {
            if let Some(block) = &f.body {
                out.push(Body {
                    contract: c,
                    scope: FunctionScope::for_function(&c.flat, f),
                    block,
                    function: Some(f),
                    facts: &c.function_facts[i],
                });
            }
        }
        for (i, m) in c.flat.def.modifiers.iter().enumerate() {
            out.push(Body {
                contract: c,
                scope: FunctionScope::for_modifier(&c.flat, m),
                block: &m.body,
                function: None,
                facts: &c.modifier_facts[i],
            });
        }
    }
    out
}

/// Bodies of every function and modifier of a flattened contract,
/// inherited ones included.
pub(crate) fn flat_scopes<'b>(c: &'b ContractFacts<'b>) -> Vec<(FunctionScope<'b>, &'b Block, Option<&'b FunctionDefinition>)> {
    let mut out = Vec::new();
    for f in &c.flat.functions {
        if let Some(b) = &f.body {
            out.push((FunctionScope::for_function(&c.flat, f), b, Some(*f)));
        }
    }
    for m in &c.flat.modifiers {
        out.push((FunctionScope::for_modifier(&c.flat, m), &m.body, None));
    }
    out
}

pub(crate) fn is_require_like(e: &Expression) -> Option<&Expression> {
    match &e.kind {
        ExpressionKind::Call { callee, arguments } if matches!(callee.as_identifier(), Some("require" | "assert")) => {
            arguments.first()
        }
        _ => None,
    }
}

/// Branch conditions: if/loop conditions, require/assert arguments and
/// ternary conditions.
pub(crate) fn branch_conditions(block: &Block) -> Vec<&Expression> {
    let mut out = Vec::new();
    block.walk(&mut |s| {
        match &s.kind {
            StatementKind::If { condition, .. }
            | StatementKind::While { condition, .. }
            | StatementKind::DoWhile { condition, .. } => out.push(condition),
            StatementKind::For {
                condition: Some(c), ..
            } => out.push(c),
            _ => {}
        }
        for e in s.own_expressions() {
            e.walk(&mut |x| {
                if let Some(a) = is_require_like(x) {
                    out.push(a);
                }
                if let ExpressionKind::Conditional { condition, .. } = &x.kind {
                    out.push(condition);
                }
            });
        }
    });
    out
}

/// State variables written by `e`, with the span of the writing expression.
pub(crate) fn state_writes<'e>(scope: &FunctionScope<'_>, e: &'e Expression) -> Vec<(&'e str, Span)> {
    let mut out = Vec::new();
    e.walk(&mut |x| {
        let target = match &x.kind {
            ExpressionKind::Assignment { lhs, .. } => Some(&**lhs),
            ExpressionKind::Unary { op, operand } if op.mutates() => Some(&**operand),
            ExpressionKind::Call { callee, .. } => match &callee.kind {
                ExpressionKind::MemberAccess { base, member } if member == "push" || member == "pop" => Some(&**base),
                _ => None,
            },
            _ => None,
        };
        let Some(t) = target else { return };
        let roots: Vec<&Expression> = match &t.kind {
            ExpressionKind::Tuple(items) => items.iter().flatten().collect(),
            _ => vec![t],
        };
        for r in roots {
            if let Some(name) = r.root_identifier() {
                if scope.is_state_variable(name) {
                    out.push((name, x.span));
                }
            }
        }
    });
    out
}

pub(crate) fn block_state_writes<'e>(scope: &FunctionScope<'_>, block: &'e Block) -> Vec<(&'e str, Span)> {
    let mut out = Vec::new();
    block.walk_expressions(&mut |e| {
        if matches!(
            e.kind,
            ExpressionKind::Assignment { .. } | ExpressionKind::Unary { .. } | ExpressionKind::Call { .. }
        ) {
            // walk_expressions visits sub-expressions itself; only inspect this node
            out.extend(state_writes_shallow(scope, e));
        }
    });
    out
}

fn state_writes_shallow<'e>(scope: &FunctionScope<'_>, e: &'e Expression) -> Vec<(&'e str, Span)> {
    let target = match &e.kind {
        ExpressionKind::Assignment { lhs, .. } => Some(&**lhs),
        ExpressionKind::Unary { op, operand } if op.mutates() => Some(&**operand),
        ExpressionKind::Call { callee, .. } => match &callee.kind {
            ExpressionKind::MemberAccess { base, member } if member == "push" || member == "pop" => Some(&**base),
            _ => None,
        },
        _ => None,
    };
    let Some(t) = target else { return Vec::new() };
    let roots: Vec<&Expression> = match &t.kind {
        ExpressionKind::Tuple(items) => items.iter().flatten().collect(),
        _ => vec![t],
    };
    roots
        .into_iter()
        .filter_map(|r| r.root_identifier().filter(|n| scope.is_state_variable(n)).map(|n| (n, e.span)))
        .collect()
}

/// A literal, a constant state variable, or arithmetic over those.
pub(crate) fn is_constant_expr(scope: &FunctionScope<'_>, e: &Expression) -> bool {
    match &e.kind {
        ExpressionKind::Literal(Literal {
            kind: LiteralKind::Number { .. } | LiteralKind::Hex { .. },
            ..
        }) => true,
        ExpressionKind::Identifier(n) => {
            scope.is_state_variable(n) && scope.contract.state_variable(n).is_some_and(|v| v.is_constant)
        }
        ExpressionKind::Binary { op, lhs, rhs } if !op.is_comparison() && !matches!(op, BinaryOp::And | BinaryOp::Or) => {
            is_constant_expr(scope, lhs) && is_constant_expr(scope, rhs)
        }
        ExpressionKind::Unary { op: UnaryOp::Neg | UnaryOp::BitNot, operand } => is_constant_expr(scope, operand),
        ExpressionKind::Tuple(items) if items.len() == 1 => items[0].as_ref().is_some_and(|i| is_constant_expr(scope, i)),
        ExpressionKind::Call { callee, arguments } if arguments.len() == 1 => {
            matches!(callee.kind, ExpressionKind::ElementaryType(_)) && is_constant_expr(scope, &arguments[0])
        }
        _ => false,
    }
}

/// A loop condition is bounded when it compares against a constant.
pub(crate) fn condition_is_bounded(scope: &FunctionScope<'_>, cond: Option<&Expression>) -> bool {
    let Some(c) = cond else { return false };
    match &c.kind {
        ExpressionKind::Binary { op, lhs, rhs } if op.is_comparison() => {
            is_constant_expr(scope, lhs) || is_constant_expr(scope, rhs)
        }
        ExpressionKind::Binary {
            op: BinaryOp::And,
            lhs,
            rhs,
        } => condition_is_bounded(scope, Some(lhs)) || condition_is_bounded(scope, Some(rhs)),
        ExpressionKind::Tuple(items) if items.len() == 1 => condition_is_bounded(scope, items[0].as_ref()),
        _ => false,
    }
}

/// Condition and body of a loop statement.
pub(crate) fn loop_parts(s: &Statement) -> Option<(Option<&Expression>, &Statement)> {
    match &s.kind {
        StatementKind::For { condition, body, .. } => Some((condition.as_ref(), body)),
        StatementKind::While { condition, body } | StatementKind::DoWhile { body, condition } => Some((Some(condition), body)),
        _ => None,
    }
}

pub(crate) fn is_ether_out(kind: ExternalCallKind) -> bool {
    kind.moves_ether()
}

/// `selfdestruct(...)` or `suicide(...)` not shadowed by a user function.
pub(crate) fn is_destroy_call(scope: &FunctionScope<'_>, e: &Expression) -> bool {
    match &e.kind {
        ExpressionKind::Call { callee, .. } => match callee.as_identifier() {
            Some(n @ ("selfdestruct" | "suicide")) => !matches!(scope.lookup(n).map(|s| s.kind), Some(SymbolKind::Function)),
            _ => false,
        },
        _ => false,
    }
}

/// Whether any flattened function or modifier moves Ether out, and whether
/// any can destroy the contract.
pub(crate) fn ether_capabilities(c: &ContractFacts<'_>) -> (bool, bool) {
    let mut out = false;
    let mut destroy = false;
    for (scope, block, _) in flat_scopes(c) {
        block.walk_expressions(&mut |e| {
            if is_destroy_call(&scope, e) {
                destroy = true;
            }
        });
        block.walk(&mut |s| {
            for e in s.own_expressions() {
                if external_calls_in(e, &|x| is_contract_typed(&scope, x))
                    .iter()
                    .any(|c| is_ether_out(c.kind))
                {
                    out = true;
                }
            }
        });
    }
    (out, destroy)
}

/// Event invocation, either `emit E(...)` or the older bare `E(...)`.
pub(crate) fn emits_event(scope: &FunctionScope<'_>, block: &Block) -> bool {
    let mut found = false;
    block.walk(&mut |s| match &s.kind {
        StatementKind::Emit(_) => found = true,
        StatementKind::Expression(e) => {
            if let ExpressionKind::Call { callee, .. } = &e.kind {
                if let Some(n) = callee.as_identifier() {
                    if matches!(scope.lookup(n).map(|s| s.kind), Some(SymbolKind::Event)) {
                        found = true;
                    }
                }
            }
        }
        _ => {}
    });
    found
}

pub(crate) fn is_revert_call(e: &Expression) -> bool {
    matches!(&e.kind, ExpressionKind::Call { callee, .. } if callee.as_identifier() == Some("revert"))
}

/// Whether any sub-expression is `msg.sender` or `tx.origin`.
pub(crate) fn mentions_caller(e: &Expression) -> bool {
    e.any(&mut |x| matches!(x.member_path().as_deref(), Some("msg.sender" | "tx.origin")))
}

/// `msg.sender == x`-style comparison inside `e`.
pub(crate) fn compares_caller(e: &Expression) -> bool {
    e.any(&mut |x| match &x.kind {
        ExpressionKind::Binary {
            op: BinaryOp::Eq | BinaryOp::Ne,
            lhs,
            rhs,
        } => mentions_caller(lhs) || mentions_caller(rhs),
        _ => false,
    })
}

/// Contract-typed-or-not predicate bound to a scope.
pub(crate) fn contract_pred<'s>(scope: &'s FunctionScope<'s>) -> impl Fn(&Expression) -> bool + 's {
    move |x| is_contract_typed(scope, x)
}
