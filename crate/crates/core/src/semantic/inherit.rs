//! Flat view of a contract together with the members it inherits.

use crate::source::ast::*;
use crate::source::Span;
use std::collections::HashSet;

#[derive(Debug, Clone)]
pub struct FlatContract<'a> {
    pub def: &'a ContractDefinition,
    /// The contract itself followed by its bases, most derived first.
    pub lineage: Vec<&'a ContractDefinition>,
    pub state_variables: Vec<&'a VariableDeclaration>,
    pub functions: Vec<&'a FunctionDefinition>,
    pub modifiers: Vec<&'a ModifierDefinition>,
    pub events: Vec<&'a EventDefinition>,
    pub structs: Vec<&'a StructDefinition>,
    pub enums: Vec<&'a str>,
    /// Names of every contract in the same source unit.
    pub peers: Vec<&'a str>,
    pub warnings: Vec<(String, Span)>,
}

impl<'a> FlatContract<'a> {
    pub fn name(&self) -> &'a str {
        &self.def.name
    }

    pub fn is_contract_name(&self, name: &str) -> bool {
        self.peers.contains(&name)
    }

    pub fn state_variable(&self, name: &str) -> Option<&'a VariableDeclaration> {
        self.state_variables.iter().copied().find(|v| v.name == name)
    }

    pub fn functions_named(&self, name: &str) -> impl Iterator<Item = (usize, &'a FunctionDefinition)> + '_ {
        let name = name.to_string();
        self.functions
            .iter()
            .copied()
            .enumerate()
            .filter(move |(_, f)| f.kind == FunctionKind::Function && f.name == name)
    }

    pub fn modifier(&self, name: &str) -> Option<(usize, &'a ModifierDefinition)> {
        self.modifiers.iter().copied().enumerate().find(|(_, m)| m.name == name)
    }

    pub fn event(&self, name: &str) -> Option<&'a EventDefinition> {
        self.events.iter().copied().find(|e| e.name == name)
    }

    pub fn struct_def(&self, name: &str) -> Option<&'a StructDefinition> {
        self.structs.iter().copied().find(|s| s.name == name)
    }

    /// Any function in the flattened contract is payable.
    pub fn has_payable_function(&self) -> bool {
        self.functions.iter().any(|f| f.is_payable)
    }

    /// A function without a body anywhere in the lineage, or an interface.
    pub fn is_abstract(&self) -> bool {
        self.def.kind == ContractKind::Interface || self.functions.iter().any(|f| f.body.is_none())
    }
}

fn lineage<'a>(
    contract: &'a ContractDefinition,
    all: &'a [ContractDefinition],
    out: &mut Vec<&'a ContractDefinition>,
    seen: &mut HashSet<&'a str>,
    warnings: &mut Vec<(String, Span)>,
) {
    // solidity lists bases most-base first; walk the most derived first
    for base in contract.bases.iter().rev() {
        let Some(def) = all.iter().find(|c| &c.name == base) else {
            warnings.push((format!("base contract `{base}` of `{}` is not defined in this file", contract.name), contract.span));
            continue;
        };
        if !seen.insert(&def.name) {
            warnings.push((
                format!("`{}` is inherited more than once; members are merged without linearization", def.name),
                contract.span,
            ));
            continue;
        }
        out.push(def);
        lineage(def, all, out, seen, warnings);
    }
}

/// Merges inherited members; on name clashes the most derived definition wins.
pub fn flatten<'a>(contract: &'a ContractDefinition, all: &'a [ContractDefinition]) -> FlatContract<'a> {
    let mut warnings = Vec::new();
    let mut chain = vec![contract];
    let mut seen = HashSet::from([contract.name.as_str()]);
    lineage(contract, all, &mut chain, &mut seen, &mut warnings);

    let mut flat = FlatContract {
        def: contract,
        lineage: chain.clone(),
        state_variables: Vec::new(),
        functions: Vec::new(),
        modifiers: Vec::new(),
        events: Vec::new(),
        structs: Vec::new(),
        enums: Vec::new(),
        peers: all.iter().map(|c| c.name.as_str()).collect(),
        warnings,
    };
    let mut fn_keys: HashSet<(FunctionKind, String, Vec<String>)> = HashSet::new();
    for (depth, c) in chain.iter().enumerate() {
        for v in &c.state_variables {
            if flat.state_variable(&v.name).is_none() {
                flat.state_variables.push(v);
            }
        }
        for f in &c.functions {
            if depth > 0 && f.kind == FunctionKind::Constructor {
                continue;
            }
            let key = match f.kind {
                FunctionKind::Function => (f.kind, f.name.clone(), f.parameter_types()),
                _ => (f.kind, String::new(), Vec::new()),
            };
            if fn_keys.insert(key) {
                flat.functions.push(f);
            }
        }
        for m in &c.modifiers {
            if flat.modifier(&m.name).is_none() {
                flat.modifiers.push(m);
            }
        }
        for e in &c.events {
            if flat.event(&e.name).is_none() {
                flat.events.push(e);
            }
        }
        for s in &c.structs {
            if flat.struct_def(&s.name).is_none() {
                flat.structs.push(s);
            }
        }
        for e in &c.enums {
            if !flat.enums.contains(&e.as_str()) {
                flat.enums.push(e);
            }
        }
    }
    flat
}

/// Names of contracts that appear as a base of another contract in `all`.
pub fn base_contract_names(all: &[ContractDefinition]) -> HashSet<&str> {
    all.iter().flat_map(|c| c.bases.iter().map(String::as_str)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{parse, tokenize, FileId};

    fn unit(src: &str) -> SourceUnit {
        parse(&tokenize(src, FileId(0)).unwrap()).unit
    }

    #[test]
    fn derived_override_wins() {
        let u = unit(
            "contract A { uint x; function f() { } function g() { } }
             contract B is A { function f() { x = 1; } }",
        );
        let flat = flatten(&u.contracts[1], &u.contracts);
        assert_eq!(flat.functions.len(), 2);
        assert_eq!(flat.functions[0].span.line, 2);
        assert!(flat.state_variable("x").is_some());
        assert!(flat.warnings.is_empty());
    }

    #[test]
    fn diamond_warns() {
        let u = unit(
            "contract A { } contract B is A { } contract C is A { } contract D is B, C { }",
        );
        let flat = flatten(&u.contracts[3], &u.contracts);
        assert_eq!(flat.lineage.len(), 4);
        assert_eq!(flat.warnings.len(), 1);
    }

    #[test]
    fn unknown_base_warns() {
        let u = unit("contract D is Missing { }");
        assert_eq!(flatten(&u.contracts[0], &u.contracts).warnings.len(), 1);
    }
}
