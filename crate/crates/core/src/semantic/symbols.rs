//! Name resolution for contract members and function-local declarations.

use super::inherit::FlatContract;
use super::types::{infer_var_type, TypeEnv};
use crate::source::ast::*;
use crate::source::Span;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    StateVariable,
    Parameter,
    ReturnVariable,
    Local,
    Function,
    Modifier,
    Event,
    Struct,
    Enum,
    Contract,
}

impl SymbolKind {
    pub fn is_variable(self) -> bool {
        matches!(
            self,
            SymbolKind::StateVariable | SymbolKind::Parameter | SymbolKind::ReturnVariable | SymbolKind::Local
        )
    }

    /// Declared inside the function: parameter, named return or local.
    pub fn is_function_local(self) -> bool {
        matches!(self, SymbolKind::Parameter | SymbolKind::ReturnVariable | SymbolKind::Local)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Symbol<'a> {
    pub kind: SymbolKind,
    pub name: &'a str,
    pub span: Span,
    pub declaration: Option<&'a VariableDeclaration>,
}

/// Declarations visible inside one function or modifier body. Solidity 0.4
/// scopes locals to the whole function, so a local declared anywhere in the
/// body shadows a state variable of the same name.
#[derive(Debug, Clone)]
pub struct FunctionScope<'a> {
    pub contract: &'a FlatContract<'a>,
    pub parameters: Vec<&'a VariableDeclaration>,
    pub returns: Vec<&'a VariableDeclaration>,
    pub locals: Vec<&'a VariableDeclaration>,
    /// Initializer of each `var` local, for type inference.
    var_initializers: HashMap<&'a str, &'a Expression>,
    by_name: HashMap<&'a str, (SymbolKind, &'a VariableDeclaration)>,
}

fn collect_locals(body: &Block) -> (Vec<&VariableDeclaration>, HashMap<&str, &Expression>) {
    let mut locals = Vec::new();
    let mut inits = HashMap::new();
    body.walk(&mut |s| {
        if let StatementKind::VariableDeclaration {
            declarations,
            initializer,
        } = &s.kind
        {
            let single = declarations.len() == 1;
            for d in declarations.iter().flatten() {
                locals.push(d);
                if single {
                    if let Some(init) = initializer {
                        inits.insert(d.name.as_str(), init);
                    }
                }
            }
        }
    });
    (locals, inits)
}

impl<'a> FunctionScope<'a> {
    pub fn for_function(contract: &'a FlatContract<'a>, f: &'a FunctionDefinition) -> Self {
        let (locals, inits) = f.body.as_ref().map(collect_locals).unwrap_or_default();
        Self::build(contract, f.parameters.iter().collect(), f.returns.iter().collect(), locals, inits)
    }

    pub fn for_modifier(contract: &'a FlatContract<'a>, m: &'a ModifierDefinition) -> Self {
        let (locals, inits) = collect_locals(&m.body);
        Self::build(contract, m.parameters.iter().collect(), Vec::new(), locals, inits)
    }

    fn build(
        contract: &'a FlatContract<'a>,
        parameters: Vec<&'a VariableDeclaration>,
        returns: Vec<&'a VariableDeclaration>,
        locals: Vec<&'a VariableDeclaration>,
        var_initializers: HashMap<&'a str, &'a Expression>,
    ) -> Self {
        let mut by_name = HashMap::new();
        for (kind, list) in [
            (SymbolKind::Parameter, &parameters),
            (SymbolKind::ReturnVariable, &returns),
            (SymbolKind::Local, &locals),
        ] {
            for d in list.iter().filter(|d| !d.name.is_empty()) {
                by_name.entry(d.name.as_str()).or_insert((kind, *d));
            }
        }
        FunctionScope {
            contract,
            parameters,
            returns,
            locals,
            var_initializers,
            by_name,
        }
    }

    /// Resolves `name`, function-level declarations first.
    pub fn lookup(&self, name: &str) -> Option<Symbol<'a>> {
        if let Some((kind, d)) = self.by_name.get(name) {
            return Some(Symbol {
                kind: *kind,
                name: &d.name,
                span: d.span,
                declaration: Some(d),
            });
        }
        let c = self.contract;
        if let Some(v) = c.state_variable(name) {
            return Some(Symbol {
                kind: SymbolKind::StateVariable,
                name: &v.name,
                span: v.span,
                declaration: Some(v),
            });
        }
        if let Some((_, f)) = c.functions_named(name).next() {
            return Some(Symbol {
                kind: SymbolKind::Function,
                name: &f.name,
                span: f.span,
                declaration: None,
            });
        }
        if let Some((_, m)) = c.modifier(name) {
            return Some(Symbol {
                kind: SymbolKind::Modifier,
                name: &m.name,
                span: m.span,
                declaration: None,
            });
        }
        if let Some(e) = c.event(name) {
            return Some(Symbol {
                kind: SymbolKind::Event,
                name: &e.name,
                span: e.span,
                declaration: None,
            });
        }
        if let Some(s) = c.struct_def(name) {
            return Some(Symbol {
                kind: SymbolKind::Struct,
                name: &s.name,
                span: s.span,
                declaration: None,
            });
        }
        if let Some(e) = c.enums.iter().find(|e| **e == name) {
            return Some(Symbol {
                kind: SymbolKind::Enum,
                name: e,
                span: c.def.span,
                declaration: None,
            });
        }
        None
    }

    pub fn is_local_variable(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn is_state_variable(&self, name: &str) -> bool {
        !self.by_name.contains_key(name) && self.contract.state_variable(name).is_some()
    }

    /// Declared type, with `var` resolved through its initializer.
    pub fn declared_type(&self, name: &str) -> Option<TypeName> {
        let sym = self.lookup(name)?;
        let decl = sym.declaration?;
        match decl.type_name.kind {
            TypeKind::VarInferred => {
                let init = self.var_initializers.get(name)?;
                infer_var_type(Some(init), self).ok()
            }
            _ => Some(decl.type_name.clone()),
        }
    }
}

impl TypeEnv for FunctionScope<'_> {
    fn variable_type(&self, name: &str) -> Option<TypeName> {
        self.declared_type(name)
    }

    fn member_type(&self, base: &TypeName, member: &str) -> Option<TypeName> {
        if let TypeKind::UserDefined(s) = &base.kind {
            let def = self.contract.struct_def(s)?;
            return def.members.iter().find(|m| m.name == member).map(|m| m.type_name.clone());
        }
        None
    }

    fn function_return_type(&self, name: &str) -> Option<TypeName> {
        let (_, f) = self.contract.functions_named(name).next()?;
        (f.returns.len() == 1).then(|| f.returns[0].type_name.clone())
    }
}

/// Symbol tables for every function and modifier of a flattened contract.
#[derive(Debug, Clone)]
pub struct SymbolTable<'a> {
    pub contract: &'a FlatContract<'a>,
    pub functions: Vec<FunctionScope<'a>>,
    pub modifiers: Vec<FunctionScope<'a>>,
}

impl<'a> SymbolTable<'a> {
    pub fn build(contract: &'a FlatContract<'a>) -> Self {
        SymbolTable {
            contract,
            functions: contract.functions.iter().map(|f| FunctionScope::for_function(contract, f)).collect(),
            modifiers: contract.modifiers.iter().map(|m| FunctionScope::for_modifier(contract, m)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::flatten;
    use crate::source::{parse, tokenize, FileId};

    #[test]
    fn locals_shadow_state() {
        let src = "contract C { uint x; address a; function f(uint y) { if (true) { uint x = 2; } a = msg.sender; } }";
        let u = parse(&tokenize(src, FileId(0)).unwrap()).unit;
        let flat = flatten(&u.contracts[0], &u.contracts);
        let t = SymbolTable::build(&flat);
        let s = &t.functions[0];
        assert_eq!(s.lookup("x").unwrap().kind, SymbolKind::Local);
        assert_eq!(s.lookup("y").unwrap().kind, SymbolKind::Parameter);
        assert_eq!(s.lookup("a").unwrap().kind, SymbolKind::StateVariable);
        assert_eq!(s.lookup("f").unwrap().kind, SymbolKind::Function);
        assert!(s.lookup("nope").is_none());
    }

    #[test]
    fn var_local_type() {
        let src = "contract C { function f() { var i = 300; var b = true; } }";
        let u = parse(&tokenize(src, FileId(0)).unwrap()).unit;
        let flat = flatten(&u.contracts[0], &u.contracts);
        let t = SymbolTable::build(&flat);
        assert_eq!(t.functions[0].declared_type("i").unwrap().canonical(), "uint16");
        assert_eq!(t.functions[0].declared_type("b").unwrap().canonical(), "bool");
    }
}
