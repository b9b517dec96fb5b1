//! External call classification and the intra-contract call graph.

use super::inherit::FlatContract;
use super::symbols::{FunctionScope, SymbolKind};
use crate::source::ast::*;
use crate::source::Span;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExternalCallKind {
    Transfer,
    Send,
    Call,
    CallValue,
    DelegateCall,
    CallCode,
    /// A member function call on a contract-typed value.
    Contract,
}

impl ExternalCallKind {
    /// Returns a success flag instead of reverting.
    pub fn returns_status(self) -> bool {
        matches!(
            self,
            ExternalCallKind::Send
                | ExternalCallKind::Call
                | ExternalCallKind::CallValue
                | ExternalCallKind::DelegateCall
                | ExternalCallKind::CallCode
        )
    }

    pub fn moves_ether(self) -> bool {
        matches!(self, ExternalCallKind::Transfer | ExternalCallKind::Send | ExternalCallKind::CallValue)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ExternalCallKind::Transfer => "transfer",
            ExternalCallKind::Send => "send",
            ExternalCallKind::Call => "call",
            ExternalCallKind::CallValue => "call.value",
            ExternalCallKind::DelegateCall => "delegatecall",
            ExternalCallKind::CallCode => "callcode",
            ExternalCallKind::Contract => "external function call",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExternalCall<'a> {
    pub kind: ExternalCallKind,
    /// The outermost call expression.
    pub expression: &'a Expression,
    /// Address or contract the call goes to.
    pub target: &'a Expression,
    /// Ether amount for transfer/send/`.value(...)`.
    pub value: Option<&'a Expression>,
    pub arguments: &'a [Expression],
    /// False for `a.call.value(x)` without the trailing `()`.
    pub invoked: bool,
}

fn low_level(member: &str) -> Option<ExternalCallKind> {
    match member {
        "call" => Some(ExternalCallKind::Call),
        "delegatecall" => Some(ExternalCallKind::DelegateCall),
        "callcode" => Some(ExternalCallKind::CallCode),
        _ => None,
    }
}

/// Recognizes `a.transfer(v)`, `a.send(v)`, `a.call(...)`,
/// `a.call.value(v)(...)`, `a.delegatecall(...)`, `a.callcode(...)` and
/// member calls on contract-typed bases.
pub fn classify_external_call<'a>(
    e: &'a Expression,
    is_contract: &dyn Fn(&Expression) -> bool,
) -> Option<ExternalCall<'a>> {
    let ExpressionKind::Call { callee, arguments } = &e.kind else {
        return None;
    };
    let mut value = None;
    let mut c: &Expression = callee;
    let mut invoked = true;
    // `x.call.value(v)` (options applied, not invoked)
    if let ExpressionKind::MemberAccess { base, member } = &c.kind {
        if (member == "value" || member == "gas") && option_base(base) {
            if member == "value" {
                value = arguments.first();
            }
            c = base;
            invoked = false;
        }
    }
    // peel `.value(v)` / `.gas(g)` option calls
    loop {
        match &c.kind {
            ExpressionKind::Call {
                callee: inner,
                arguments: opts,
            } => match &inner.kind {
                ExpressionKind::MemberAccess { base, member } if member == "value" || member == "gas" => {
                    if member == "value" {
                        value = value.or(opts.first());
                    }
                    c = base;
                }
                _ => break,
            },
            ExpressionKind::MemberAccess { base, member } if (member == "value" || member == "gas") && option_base(base) => {
                c = base;
            }
            _ => break,
        }
    }
    let ExpressionKind::MemberAccess { base, member } = &c.kind else {
        return None;
    };
    let kind = if let Some(k) = low_level(member) {
        if k == ExternalCallKind::Call && value.is_some() {
            ExternalCallKind::CallValue
        } else {
            k
        }
    } else if invoked && (member == "transfer" || member == "send") && arguments.len() == 1 && !is_contract(base) {
        value = arguments.first();
        if member == "transfer" {
            ExternalCallKind::Transfer
        } else {
            ExternalCallKind::Send
        }
    } else if is_contract(base) {
        ExternalCallKind::Contract
    } else {
        return None;
    };
    Some(ExternalCall {
        kind,
        expression: e,
        target: base,
        value,
        arguments: if invoked { arguments } else { &[] },
        invoked,
    })
}

fn option_base(e: &Expression) -> bool {
    match &e.kind {
        ExpressionKind::MemberAccess { member, .. } => low_level(member).is_some(),
        ExpressionKind::Call { callee, .. } => match &callee.kind {
            ExpressionKind::MemberAccess { base, member } => (member == "value" || member == "gas") && option_base(base),
            _ => false,
        },
        _ => false,
    }
}

/// Every external call inside `e`, outermost first; option sub-calls of a
/// recognized call are not reported again.
pub fn external_calls_in<'a>(e: &'a Expression, is_contract: &dyn Fn(&Expression) -> bool) -> Vec<ExternalCall<'a>> {
    let mut out = Vec::new();
    collect(e, is_contract, &mut out);
    out
}

fn collect<'a>(e: &'a Expression, is_contract: &dyn Fn(&Expression) -> bool, out: &mut Vec<ExternalCall<'a>>) {
    if let Some(call) = classify_external_call(e, is_contract) {
        out.push(call);
        collect(call.target, is_contract, out);
        if let Some(v) = call.value {
            collect(v, is_contract, out);
        }
        for a in call.arguments {
            collect(a, is_contract, out);
        }
        return;
    }
    match &e.kind {
        ExpressionKind::MemberAccess { base, .. } => collect(base, is_contract, out),
        ExpressionKind::IndexAccess { base, index } => {
            collect(base, is_contract, out);
            if let Some(i) = index {
                collect(i, is_contract, out);
            }
        }
        ExpressionKind::Call { callee, arguments } => {
            collect(callee, is_contract, out);
            for a in arguments {
                collect(a, is_contract, out);
            }
        }
        ExpressionKind::Binary { lhs, rhs, .. } | ExpressionKind::Assignment { lhs, rhs, .. } => {
            collect(lhs, is_contract, out);
            collect(rhs, is_contract, out);
        }
        ExpressionKind::Unary { operand, .. } => collect(operand, is_contract, out),
        ExpressionKind::Conditional {
            condition,
            then_value,
            else_value,
        } => {
            collect(condition, is_contract, out);
            collect(then_value, is_contract, out);
            collect(else_value, is_contract, out);
        }
        ExpressionKind::Tuple(items) => {
            for i in items.iter().flatten() {
                collect(i, is_contract, out);
            }
        }
        _ => {}
    }
}

/// Whether `e` evaluates to a contract instance in `scope`.
pub fn is_contract_typed(scope: &FunctionScope<'_>, e: &Expression) -> bool {
    match &e.kind {
        ExpressionKind::Call { callee, arguments } if arguments.len() == 1 => {
            callee.as_identifier().is_some_and(|n| scope.contract.is_contract_name(n))
        }
        ExpressionKind::Identifier(name) => scope
            .lookup(name)
            .and_then(|s| s.declaration)
            .is_some_and(|d| matches!(&d.type_name.kind, TypeKind::UserDefined(t) if scope.contract.is_contract_name(t))),
        ExpressionKind::Tuple(items) if items.len() == 1 => items[0].as_ref().is_some_and(|i| is_contract_typed(scope, i)),
        _ => false,
    }
}

pub const BUILTIN_FUNCTIONS: &[&str] = &[
    "require",
    "assert",
    "revert",
    "keccak256",
    "sha3",
    "sha256",
    "ripemd160",
    "ecrecover",
    "addmod",
    "mulmod",
    "selfdestruct",
    "suicide",
    "blockhash",
    "gasleft",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CallNode {
    /// Index into `FlatContract::functions`.
    Function(usize),
    /// Index into `FlatContract::modifiers`.
    Modifier(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: Vec<CallNode>,
    pub edges: BTreeSet<(CallNode, CallNode)>,
    /// Calls by name that resolve to nothing known.
    pub unresolved: Vec<(CallNode, String, Span)>,
    pub external_calls: Vec<(CallNode, ExternalCallKind, Span)>,
}

impl CallGraph {
    pub fn callers(&self, node: CallNode) -> impl Iterator<Item = CallNode> + '_ {
        self.edges.iter().filter(move |(_, to)| *to == node).map(|(from, _)| *from)
    }

    pub fn callees(&self, node: CallNode) -> impl Iterator<Item = CallNode> + '_ {
        self.edges.iter().filter(move |(from, _)| *from == node).map(|(_, to)| *to)
    }

    pub fn has_callers(&self, node: CallNode) -> bool {
        self.callers(node).next().is_some()
    }
}

fn scan_body(
    node: CallNode,
    body: &Block,
    scope: &FunctionScope<'_>,
    flat: &FlatContract<'_>,
    graph: &mut CallGraph,
) {
    let is_contract = |e: &Expression| is_contract_typed(scope, e);
    body.walk(&mut |s| {
        for root in s.own_expressions() {
            for call in external_calls_in(root, &is_contract) {
                graph.external_calls.push((node, call.kind, call.expression.span));
            }
            root.walk(&mut |e| {
                let ExpressionKind::Call { callee, arguments } = &e.kind else {
                    return;
                };
                let Some(name) = callee.as_identifier() else {
                    return;
                };
                match scope.lookup(name).map(|s| s.kind) {
                    Some(SymbolKind::Function) => {
                        let same_arity: Vec<usize> = flat
                            .functions_named(name)
                            .filter(|(_, f)| f.parameters.len() == arguments.len())
                            .map(|(i, _)| i)
                            .collect();
                        let targets = if same_arity.is_empty() {
                            flat.functions_named(name).map(|(i, _)| i).collect()
                        } else {
                            same_arity
                        };
                        for t in targets {
                            graph.edges.insert((node, CallNode::Function(t)));
                        }
                    }
                    Some(_) => {}
                    None => {
                        if !BUILTIN_FUNCTIONS.contains(&name) && !flat.is_contract_name(name) {
                            graph.unresolved.push((node, name.to_string(), e.span));
                        }
                    }
                }
            });
        }
    });
}

/// Edges for direct calls by name and for modifier invocations.
pub fn build_call_graph(flat: &FlatContract<'_>) -> CallGraph {
    let mut graph = CallGraph::default();
    for (i, f) in flat.functions.iter().enumerate() {
        let node = CallNode::Function(i);
        graph.nodes.push(node);
        for m in &f.modifiers_invoked {
            if let Some((mi, _)) = flat.modifier(&m.name) {
                graph.edges.insert((node, CallNode::Modifier(mi)));
            }
        }
        if let Some(body) = &f.body {
            let scope = FunctionScope::for_function(flat, f);
            scan_body(node, body, &scope, flat, &mut graph);
        }
    }
    for (i, m) in flat.modifiers.iter().enumerate() {
        let node = CallNode::Modifier(i);
        graph.nodes.push(node);
        let scope = FunctionScope::for_modifier(flat, m);
        scan_body(node, &m.body, &scope, flat, &mut graph);
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::flatten;
    use crate::source::{parse, tokenize, FileId};

    fn unit(src: &str) -> SourceUnit {
        parse(&tokenize(src, FileId(0)).unwrap()).unit
    }

    fn first_expr(src: &str) -> Expression {
        let u = unit(&format!("contract C {{ function f() {{ {src}; }} }}"));
        match &u.contracts[0].functions[0].body.as_ref().unwrap().statements[0].kind {
            StatementKind::Expression(e) => e.clone(),
            other => panic!("{other:?}"),
        }
    }

    fn kinds(src: &str) -> Vec<(ExternalCallKind, bool)> {
        let e = first_expr(src);
        external_calls_in(&e, &|_| false).iter().map(|c| (c.kind, c.invoked)).collect()
    }

    #[test]
    fn call_shapes() {
        assert_eq!(kinds("a.send(1)"), vec![(ExternalCallKind::Send, true)]);
        assert_eq!(kinds("a.transfer(1)"), vec![(ExternalCallKind::Transfer, true)]);
        assert_eq!(kinds("a.call.value(1)()"), vec![(ExternalCallKind::CallValue, true)]);
        assert_eq!(kinds("a.call.value(1)"), vec![(ExternalCallKind::CallValue, false)]);
        assert_eq!(kinds("a.call.gas(5).value(1)()"), vec![(ExternalCallKind::CallValue, true)]);
        assert_eq!(kinds("a.call(data)"), vec![(ExternalCallKind::Call, true)]);
        assert_eq!(kinds("a.delegatecall(data)"), vec![(ExternalCallKind::DelegateCall, true)]);
        assert_eq!(kinds("arr.push(1)"), vec![]);
        assert_eq!(kinds("require(a.send(1))"), vec![(ExternalCallKind::Send, true)]);
        let e = first_expr("members[i].transfer(x)");
        let c = external_calls_in(&e, &|_| false)[0];
        assert_eq!(c.target.root_identifier(), Some("members"));
        assert_eq!(c.value.unwrap().as_identifier(), Some("x"));
    }

    #[test]
    fn graph_edges() {
        let u = unit(
            "contract G { address owner; modifier onlyOwner { require(msg.sender == owner); _; }
               function() payable { receive(); }
               function receive() payable { if (this.balance == 1) { pick(); } }
               function pick() { }
               function kill() onlyOwner { selfdestruct(owner); }
               function other() { missing(); } }
             contract V { function w() { } }
             contract A { function f(address v) { V(v).w(); } }",
        );
        let flat = flatten(&u.contracts[0], &u.contracts);
        let g = build_call_graph(&flat);
        assert!(g.edges.contains(&(CallNode::Function(0), CallNode::Function(1))));
        assert!(g.edges.contains(&(CallNode::Function(1), CallNode::Function(2))));
        assert!(g.edges.contains(&(CallNode::Function(3), CallNode::Modifier(0))));
        assert_eq!(g.edges.len(), 3);
        assert_eq!(g.unresolved.len(), 1);
        assert!(g.has_callers(CallNode::Function(2)));
        assert!(!g.has_callers(CallNode::Function(4)));

        let a = flatten(&u.contracts[2], &u.contracts);
        let ga = build_call_graph(&a);
        assert!(ga.edges.is_empty());
        assert_eq!(ga.external_calls.len(), 1);
        assert_eq!(ga.external_calls[0].1, ExternalCallKind::Contract);
    }

    #[test]
    fn single_function_no_edges() {
        let u = unit("contract C { function f() { uint x = 1; } }");
        let flat = flatten(&u.contracts[0], &u.contracts);
        assert!(build_call_graph(&flat).edges.is_empty());
    }
}
