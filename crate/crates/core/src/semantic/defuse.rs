//! Intra-procedural def-use facts and value flow to sinks.

use super::calls::{classify_external_call, is_contract_typed};
use super::inherit::FlatContract;
use super::symbols::{FunctionScope, SymbolKind};
use crate::source::ast::*;
use crate::source::Span;
use std::collections::{BTreeSet, HashMap};

/// Places where a value stops being merely local.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SinkKind {
    StateWrite,
    Return,
    Condition,
    CallArgument,
    EventArgument,
    Index,
    EtherValue,
    EtherTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRole {
    Parameter,
    Local,
    NamedReturn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarFacts {
    pub name: String,
    pub role: VarRole,
    pub span: Span,
    pub writes: Vec<Span>,
    pub reads: Vec<Span>,
    /// Sinks reached directly or through local assignment chains.
    pub sinks: BTreeSet<SinkKind>,
    pub live: bool,
}

/// A block-information read and the sinks its value reaches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFlow {
    pub span: Span,
    pub text: String,
    pub sinks: BTreeSet<SinkKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DefUseFacts {
    pub vars: Vec<VarFacts>,
    /// `flows[v]` holds the variables that `v` is assigned into.
    pub flows: Vec<BTreeSet<usize>>,
    pub block_info: Vec<SourceFlow>,
}

impl DefUseFacts {
    pub fn var(&self, name: &str) -> Option<&VarFacts> {
        self.vars.iter().find(|v| v.name == name)
    }
}

const BLOCK_INFO_MEMBERS: &[&str] = &[
    "block.timestamp",
    "block.number",
    "block.difficulty",
    "block.coinbase",
    "block.blockhash",
    "block.gaslimit",
];

/// `block.*` reads, `now` and `blockhash(...)`.
pub fn is_block_info(e: &Expression) -> bool {
    match &e.kind {
        ExpressionKind::Identifier(n) => n == "now",
        ExpressionKind::MemberAccess { .. } => e.member_path().is_some_and(|p| BLOCK_INFO_MEMBERS.contains(&p.as_str())),
        ExpressionKind::Call { callee, .. } => {
            callee.as_identifier() == Some("blockhash") || callee.member_path().as_deref() == Some("block.blockhash")
        }
        _ => false,
    }
}

const PURE_BUILTINS: &[&str] = &["keccak256", "sha3", "sha256", "ripemd160", "ecrecover", "addmod", "mulmod"];

#[derive(Debug, Clone, Default)]
struct Dest {
    sinks: BTreeSet<SinkKind>,
    into: Vec<usize>,
}

impl Dest {
    fn sink(kind: SinkKind) -> Dest {
        Dest {
            sinks: BTreeSet::from([kind]),
            into: Vec::new(),
        }
    }

    fn merge(&self, other: &Dest) -> Dest {
        let mut d = self.clone();
        d.sinks.extend(other.sinks.iter().copied());
        for v in &other.into {
            if !d.into.contains(v) {
                d.into.push(*v);
            }
        }
        d
    }
}

struct Builder<'s, 'a> {
    scope: &'s FunctionScope<'a>,
    ids: HashMap<String, usize>,
    vars: Vec<VarFacts>,
    direct: Vec<BTreeSet<SinkKind>>,
    into: Vec<BTreeSet<usize>>,
    sources: Vec<(Span, String, BTreeSet<SinkKind>, BTreeSet<usize>)>,
    storage_pointer: Vec<bool>,
    suppress_sources: usize,
}

impl<'s, 'a> Builder<'s, 'a> {
    fn new(scope: &'s FunctionScope<'a>) -> Self {
        let mut b = Builder {
            scope,
            ids: HashMap::new(),
            vars: Vec::new(),
            direct: Vec::new(),
            into: Vec::new(),
            sources: Vec::new(),
            storage_pointer: Vec::new(),
            suppress_sources: 0,
        };
        for (role, list) in [
            (VarRole::Parameter, &scope.parameters),
            (VarRole::NamedReturn, &scope.returns),
            (VarRole::Local, &scope.locals),
        ] {
            for d in list.iter().filter(|d| !d.name.is_empty()) {
                if b.ids.contains_key(&d.name) {
                    continue;
                }
                let pointer = role == VarRole::Local
                    && matches!(d.data_location, DataLocation::Storage | DataLocation::Unspecified)
                    && is_reference_type(scope, &d.type_name);
                b.ids.insert(d.name.clone(), b.vars.len());
                b.vars.push(VarFacts {
                    name: d.name.clone(),
                    role,
                    span: d.span,
                    writes: Vec::new(),
                    reads: Vec::new(),
                    sinks: BTreeSet::new(),
                    live: false,
                });
                b.direct.push(if role == VarRole::NamedReturn {
                    BTreeSet::from([SinkKind::Return])
                } else {
                    BTreeSet::new()
                });
                b.into.push(BTreeSet::new());
                b.storage_pointer.push(pointer);
            }
        }
        b
    }

    fn local(&self, name: &str) -> Option<usize> {
        self.scope
            .lookup(name)
            .filter(|s| s.kind.is_function_local())
            .and_then(|_| self.ids.get(name).copied())
    }

    fn read(&mut self, id: usize, span: Span, dest: &Dest) {
        self.vars[id].reads.push(span);
        self.direct[id].extend(dest.sinks.iter().copied());
        for t in &dest.into {
            if *t != id {
                self.into[id].insert(*t);
            }
        }
    }

    fn source(&mut self, e: &Expression, dest: &Dest) {
        if self.suppress_sources > 0 {
            return;
        }
        let text = e.member_path().unwrap_or_else(|| match &e.kind {
            ExpressionKind::Call { callee, .. } => format!("{}(...)", callee.member_path().unwrap_or_default()),
            _ => String::new(),
        });
        self.sources
            .push((e.span, text, dest.sinks.clone(), dest.into.iter().copied().collect()));
    }

    fn statement(&mut self, s: &Statement) {
        match &s.kind {
            StatementKind::Block(b) => self.block(b),
            StatementKind::If {
                condition,
                then_branch,
                else_branch,
            } => {
                self.expr(condition, &Dest::sink(SinkKind::Condition));
                self.statement(then_branch);
                if let Some(e) = else_branch {
                    self.statement(e);
                }
            }
            StatementKind::For {
                init,
                condition,
                update,
                body,
            } => {
                if let Some(i) = init {
                    self.statement(i);
                }
                if let Some(c) = condition {
                    self.expr(c, &Dest::sink(SinkKind::Condition));
                }
                if let Some(u) = update {
                    self.expr(u, &Dest::default());
                }
                self.statement(body);
            }
            StatementKind::While { condition, body } | StatementKind::DoWhile { body, condition } => {
                self.expr(condition, &Dest::sink(SinkKind::Condition));
                self.statement(body);
            }
            StatementKind::Expression(e) => self.expr(e, &Dest::default()),
            StatementKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e, &Dest::sink(SinkKind::Return));
                }
            }
            StatementKind::VariableDeclaration {
                declarations,
                initializer,
            } => {
                let ids: Vec<usize> = declarations.iter().flatten().filter_map(|d| self.ids.get(&d.name).copied()).collect();
                for d in declarations.iter().flatten() {
                    if let Some(len) = array_len(&d.type_name) {
                        self.expr(len, &Dest::sink(SinkKind::CallArgument));
                    }
                }
                if let Some(init) = initializer {
                    for (d, id) in declarations.iter().flatten().zip(&ids) {
                        self.vars[*id].writes.push(d.span);
                    }
                    self.expr(
                        init,
                        &Dest {
                            sinks: BTreeSet::new(),
                            into: ids,
                        },
                    );
                }
            }
            StatementKind::Emit(e) => match &e.kind {
                ExpressionKind::Call { arguments, .. } => {
                    for a in arguments {
                        self.expr(a, &Dest::sink(SinkKind::EventArgument));
                    }
                }
                _ => self.expr(e, &Dest::sink(SinkKind::EventArgument)),
            },
            _ => {}
        }
    }

    fn block(&mut self, b: &Block) {
        for s in &b.statements {
            self.statement(s);
        }
    }

    /// Visits an assignment target; returns where assigned values go.
    fn lvalue(&mut self, e: &Expression, direct: bool) -> Dest {
        match &e.kind {
            ExpressionKind::Identifier(name) => {
                if let Some(id) = self.local(name) {
                    self.vars[id].writes.push(e.span);
                    if !direct && self.storage_pointer[id] {
                        Dest::sink(SinkKind::StateWrite)
                    } else {
                        Dest {
                            sinks: BTreeSet::new(),
                            into: vec![id],
                        }
                    }
                } else {
                    Dest::sink(SinkKind::StateWrite)
                }
            }
            ExpressionKind::IndexAccess { base, index } => {
                if let Some(i) = index {
                    self.expr(i, &Dest::sink(SinkKind::Index));
                }
                self.lvalue(base, false)
            }
            ExpressionKind::MemberAccess { base, .. } => self.lvalue(base, false),
            ExpressionKind::Tuple(items) => {
                let mut d = Dest::default();
                for i in items.iter().flatten() {
                    d = d.merge(&self.lvalue(i, direct));
                }
                d
            }
            _ => {
                self.expr(e, &Dest::sink(SinkKind::CallArgument));
                Dest::sink(SinkKind::StateWrite)
            }
        }
    }

    fn expr(&mut self, e: &Expression, dest: &Dest) {
        if is_block_info(e) {
            self.source(e, dest);
            if let ExpressionKind::Call { arguments, .. } = &e.kind {
                self.suppress_sources += 1;
                for a in arguments {
                    self.expr(a, dest);
                }
                self.suppress_sources -= 1;
            }
            return;
        }
        match &e.kind {
            ExpressionKind::Identifier(name) => {
                if let Some(id) = self.local(name) {
                    self.read(id, e.span, dest);
                }
            }
            ExpressionKind::MemberAccess { base, .. } => self.expr(base, dest),
            ExpressionKind::IndexAccess { base, index } => {
                self.expr(base, dest);
                if let Some(i) = index {
                    self.expr(i, &Dest::sink(SinkKind::Index));
                }
            }
            ExpressionKind::Call { callee, arguments } => self.call(e, callee, arguments, dest),
            ExpressionKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs, dest);
                self.expr(rhs, dest);
            }
            ExpressionKind::Unary { op, operand } => {
                if op.mutates() {
                    let target = self.lvalue(operand, true);
                    if *op != UnaryOp::Delete {
                        self.expr(operand, &dest.merge(&target));
                    }
                } else {
                    self.expr(operand, dest);
                }
            }
            ExpressionKind::Assignment { op, lhs, rhs } => {
                let target = self.lvalue(lhs, true);
                let flow = target.merge(dest);
                if matches!(op, AssignOp::Compound(_)) {
                    self.expr(lhs, &flow);
                }
                self.expr(rhs, &flow);
            }
            ExpressionKind::Conditional {
                condition,
                then_value,
                else_value,
            } => {
                self.expr(condition, &Dest::sink(SinkKind::Condition));
                self.expr(then_value, dest);
                self.expr(else_value, dest);
            }
            ExpressionKind::Tuple(items) => {
                for i in items.iter().flatten() {
                    self.expr(i, dest);
                }
            }
            ExpressionKind::New(_) | ExpressionKind::ElementaryType(_) | ExpressionKind::Literal(_) => {}
        }
    }

    fn call(&mut self, e: &Expression, callee: &Expression, arguments: &[Expression], dest: &Dest) {
        let scope = self.scope;
        if let Some(call) = classify_external_call(e, &|x| is_contract_typed(scope, x)) {
            let target_sink = if call.kind.moves_ether() {
                SinkKind::EtherTarget
            } else {
                SinkKind::CallArgument
            };
            self.expr(call.target, &Dest::sink(target_sink));
            if let Some(v) = call.value {
                self.expr(v, &Dest::sink(SinkKind::EtherValue));
            }
            for a in call.arguments {
                self.expr(a, &Dest::sink(SinkKind::CallArgument));
            }
            return;
        }
        let args_dest = match &callee.kind {
            ExpressionKind::ElementaryType(_) => dest.clone(),
            ExpressionKind::Identifier(name) => match name.as_str() {
                "require" | "assert" => Dest::sink(SinkKind::Condition),
                "selfdestruct" | "suicide" => Dest::sink(SinkKind::EtherTarget),
                n if PURE_BUILTINS.contains(&n) => dest.clone(),
                n => match scope.lookup(n).map(|s| s.kind) {
                    Some(SymbolKind::Event) => Dest::sink(SinkKind::EventArgument),
                    Some(SymbolKind::Struct) => dest.clone(),
                    None if scope.contract.is_contract_name(n) => dest.clone(),
                    _ => Dest::sink(SinkKind::CallArgument),
                },
            },
            ExpressionKind::MemberAccess { base, .. } => {
                let root = base.root_identifier().map(str::to_string);
                match root.as_deref().and_then(|r| self.local(r).map(|id| (r.to_string(), id))) {
                    Some((_, id)) => {
                        let target = self.lvalue(base, true);
                        if self.storage_pointer[id] {
                            Dest::sink(SinkKind::StateWrite)
                        } else {
                            target
                        }
                    }
                    None => {
                        if root.as_deref().is_some_and(|r| scope.is_state_variable(r)) {
                            self.lvalue(base, true);
                            Dest::sink(SinkKind::StateWrite)
                        } else {
                            self.expr(base, &Dest::sink(SinkKind::CallArgument));
                            Dest::sink(SinkKind::CallArgument)
                        }
                    }
                }
            }
            _ => {
                self.expr(callee, &Dest::sink(SinkKind::CallArgument));
                Dest::sink(SinkKind::CallArgument)
            }
        };
        for a in arguments {
            self.expr(a, &args_dest);
        }
    }

    fn finish(mut self) -> DefUseFacts {
        // sinks(v) = direct(v) ∪ sinks(t) for every t that v flows into
        let mut sinks = self.direct.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for v in 0..self.vars.len() {
                let targets: Vec<usize> = self.into[v].iter().copied().collect();
                for t in targets {
                    let add: Vec<SinkKind> = sinks[t].difference(&sinks[v]).copied().collect();
                    if !add.is_empty() {
                        sinks[v].extend(add);
                        changed = true;
                    }
                }
            }
        }
        for (v, s) in sinks.iter().enumerate() {
            self.vars[v].live = !s.is_empty();
            self.vars[v].sinks = s.clone();
        }
        let block_info = self
            .sources
            .into_iter()
            .map(|(span, text, mut direct, into)| {
                for t in into {
                    direct.extend(sinks[t].iter().copied());
                }
                SourceFlow {
                    span,
                    text,
                    sinks: direct,
                }
            })
            .collect();
        DefUseFacts {
            vars: self.vars,
            flows: self.into,
            block_info,
        }
    }
}

fn array_len(t: &TypeName) -> Option<&Expression> {
    match &t.kind {
        TypeKind::Array { length, .. } => length.as_deref(),
        _ => None,
    }
}

fn is_reference_type(scope: &FunctionScope<'_>, t: &TypeName) -> bool {
    match &t.kind {
        TypeKind::Array { .. } | TypeKind::Mapping { .. } => true,
        TypeKind::UserDefined(n) => scope.contract.struct_def(n).is_some(),
        TypeKind::Elementary { name, .. } => name == "bytes" || name == "string",
        TypeKind::VarInferred => false,
    }
}

/// Def-use facts for one function body (modifier arguments included).
pub fn compute_def_use(flat: &FlatContract<'_>, f: &FunctionDefinition) -> DefUseFacts {
    let scope = FunctionScope::for_function(flat, f);
    let mut b = Builder::new(&scope);
    for m in &f.modifiers_invoked {
        for a in &m.arguments {
            b.expr(a, &Dest::sink(SinkKind::CallArgument));
        }
    }
    if let Some(body) = &f.body {
        b.block(body);
    }
    b.finish()
}

pub fn compute_def_use_modifier(flat: &FlatContract<'_>, m: &ModifierDefinition) -> DefUseFacts {
    let scope = FunctionScope::for_modifier(flat, m);
    let mut b = Builder::new(&scope);
    b.block(&m.body);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::flatten;
    use crate::source::{parse, tokenize, FileId};

    fn facts(contract_body: &str, fn_index: usize) -> DefUseFacts {
        let src = format!("contract C {{ {contract_body} }}");
        let u = parse(&tokenize(&src, FileId(0)).unwrap()).unit;
        let flat = flatten(&u.contracts[0], &u.contracts);
        compute_def_use(&flat, flat.functions[fn_index])
    }

    #[test]
    fn listing3_change_variable() {
        let f = facts(
            "uint variable; function changeVariable(uint value1, uint value2){ uint newValue = value1; variable = value2; }",
            0,
        );
        let nv = f.var("newValue").unwrap();
        assert_eq!((nv.writes.len(), nv.reads.len(), nv.live), (1, 0, false));
        assert!(!f.var("value1").unwrap().live);
        assert!(f.var("value2").unwrap().live);
    }

    #[test]
    fn unread_parameter() {
        assert!(!facts("function f(uint a) { return; }", 0).var("a").unwrap().live);
    }

    #[test]
    fn chain_to_state() {
        let f = facts("uint s; function f() { uint x; uint y; x = 1; y = x; s = y; }", 0);
        assert!(f.var("x").unwrap().live && f.var("y").unwrap().live);
    }

    #[test]
    fn dead_chain() {
        let f = facts("function f() { uint x = 1; uint y = x; }", 0);
        assert!(!f.var("x").unwrap().live && !f.var("y").unwrap().live);
    }

    #[test]
    fn storage_pointer_push_reaches_state() {
        let f = facts(
            "uint[] investList; function r(){ uint[] tmp; tmp.push(0); investList = tmp; }",
            0,
        );
        assert!(f.var("tmp").unwrap().live);
    }

    #[test]
    fn call_target_and_value_are_live() {
        let f = facts("function w(uint amount) { address receiver = 0x0; receiver.call.value(amount); }", 0);
        assert!(f.var("amount").unwrap().sinks.contains(&SinkKind::EtherValue));
        assert!(f.var("receiver").unwrap().sinks.contains(&SinkKind::EtherTarget));
    }

    #[test]
    fn block_info_to_index() {
        let f = facts(
            "address[] p; function g() { uint winnerID = uint(block.blockhash(block.number)); p[winnerID].send(1); }",
            0,
        );
        assert_eq!(f.block_info.len(), 1);
        assert!(f.block_info[0].sinks.contains(&SinkKind::Index));
        assert!(f.var("winnerID").unwrap().live);
    }

    #[test]
    fn block_info_event_only() {
        let f = facts("event T(uint t); function g() { emit T(block.timestamp); }", 0);
        assert_eq!(f.block_info[0].sinks, BTreeSet::from([SinkKind::EventArgument]));
    }

    #[test]
    fn named_return_is_live() {
        let f = facts("function g(uint a) returns (uint r) { r = a; }", 0);
        assert!(f.var("r").unwrap().live && f.var("a").unwrap().live);
    }

    proptest::proptest! {
        // adding a read into a sink never makes a live variable dead
        #[test]
        fn monotone(chain in 1usize..6, sink_at in 0usize..6) {
            let mut body = String::from("uint s; function f() { uint v0 = 1; ");
            for i in 1..chain { body.push_str(&format!("uint v{i} = v{}; ", i - 1)); }
            let before = facts(&(body.clone() + "}"), 0);
            let k = sink_at % chain;
            let after = facts(&(body + &format!("s = v{k}; }}")), 0);
            for (b, a) in before.vars.iter().zip(&after.vars) {
                proptest::prop_assert!(!b.live || a.live);
            }
            for i in 0..=k { proptest::prop_assert!(after.vars[i].live); }
        }
    }
}
