//! The 20 defect detectors, their registry and the facts they read.

mod availability;
mod bytecode;
mod helpers;
mod maintainability;
mod performance;
mod registry;
mod reusability;
mod security;

pub use availability::{detect_greedy_contract, detect_missing_reminder, detect_missing_return_statement, detect_unmatched_erc20};
pub use maintainability::{detect_hard_code_address, detect_missing_interrupter};
pub use performance::{detect_high_gas_data_type, detect_high_gas_function_type, detect_unused_statement};
pub use registry::{descriptor, registry, DetectorDescriptor, Frontend};
pub use reusability::{detect_deprecated_apis, detect_unspecified_compiler_version};
pub use security::{
    detect_block_info_dependency, detect_dos_under_external_influence, detect_misleading_data_location,
    detect_nested_call, detect_reentrancy, detect_strict_balance_equality, detect_transaction_state_dependency,
    detect_unchecked_external_calls, detect_unmatched_type_assignment,
};

use crate::evm::{build_cfg, disassemble, extract_selectors, ControlFlowGraph, Instruction, SelectorTable};
use crate::report::Finding;
use crate::semantic::{
    base_contract_names, build_call_graph, compute_def_use, compute_def_use_modifier, flatten, CallGraph,
    DefUseFacts, FlatContract,
};
use crate::source::ast::SourceUnit;
use crate::source::Span;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown detector `{0}`")]
pub struct UnknownDetector(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorConfig {
    pub enabled: BTreeSet<&'static str>,
    /// Report every `tx.origin` read, not only those in conditions.
    pub strict_tx_origin_all_uses: bool,
    /// Also report `!=` against the contract balance, at IP5.
    pub strict_balance_neq: bool,
    /// Identifiers or member paths reported as deprecated in addition to the built-in set.
    pub deprecated_extra: Vec<String>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            enabled: registry().iter().map(|d| d.id).collect(),
            strict_tx_origin_all_uses: false,
            strict_balance_neq: false,
            deprecated_extra: Vec::new(),
        }
    }
}

impl DetectorConfig {
    pub fn is_enabled(&self, id: &str) -> bool {
        self.enabled.contains(id)
    }

    /// A non-empty `enable` list replaces the enabled set; `disable` is applied after it.
    pub fn apply_selection<S: AsRef<str>>(&mut self, enable: &[S], disable: &[S]) -> Result<(), UnknownDetector> {
        let resolve = |k: &S| descriptor(k.as_ref()).map(|d| d.id).ok_or_else(|| UnknownDetector(k.as_ref().to_string()));
        if !enable.is_empty() {
            self.enabled = enable.iter().map(resolve).collect::<Result<_, _>>()?;
        }
        for k in disable {
            let id = resolve(k)?;
            self.enabled.remove(id);
        }
        Ok(())
    }
}

/// Facts for one contract of a source unit.
#[derive(Debug, Clone)]
pub struct ContractFacts<'a> {
    pub flat: FlatContract<'a>,
    pub call_graph: CallGraph,
    /// Parallel to `flat.def.functions`.
    pub function_facts: Vec<DefUseFacts>,
    /// Parallel to `flat.def.modifiers`.
    pub modifier_facts: Vec<DefUseFacts>,
    /// Some other contract in the same file inherits from this one.
    pub is_base: bool,
}

#[derive(Debug, Clone)]
pub struct SourceFacts<'a> {
    pub path: String,
    pub text: &'a str,
    pub unit: &'a SourceUnit,
    pub contracts: Vec<ContractFacts<'a>>,
}

impl<'a> SourceFacts<'a> {
    pub fn build(path: &str, text: &'a str, unit: &'a SourceUnit) -> Self {
        let bases = base_contract_names(&unit.contracts);
        let contracts = unit
            .contracts
            .iter()
            .map(|c| {
                let flat = flatten(c, &unit.contracts);
                let call_graph = build_call_graph(&flat);
                let function_facts = c.functions.iter().map(|f| compute_def_use(&flat, f)).collect();
                let modifier_facts = c.modifiers.iter().map(|m| compute_def_use_modifier(&flat, m)).collect();
                ContractFacts {
                    is_base: bases.contains(c.name.as_str()),
                    flat,
                    call_graph,
                    function_facts,
                    modifier_facts,
                }
            })
            .collect();
        SourceFacts {
            path: path.to_string(),
            text,
            unit,
            contracts,
        }
    }

    /// Source text covered by `span`, with whitespace runs collapsed.
    pub fn snippet(&self, span: Span) -> String {
        let raw = self.text.get(span.byte_offset..span.end()).unwrap_or("");
        let mut out = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if out.len() > 80 {
            let mut cut = 77;
            while !out.is_char_boundary(cut) {
                cut -= 1;
            }
            out.truncate(cut);
            out.push_str("...");
        }
        out
    }

    pub(crate) fn finding(&self, id: &str, span: Span, message: String) -> Finding {
        let d = descriptor(id).expect("registered detector");
        Finding {
            detector: d.id.to_string(),
            category: d.category,
            impact: d.impact,
            file: self.path.clone(),
            line: Some(span.line),
            column: Some(span.column),
            pc: None,
            message,
            advice: d.advice.to_string(),
            note: None,
            block: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BytecodeFacts {
    pub path: String,
    pub code: Vec<u8>,
    pub instructions: Vec<Instruction>,
    pub cfg: ControlFlowGraph,
    pub selectors: SelectorTable,
}

impl BytecodeFacts {
    pub fn build(path: &str, code: Vec<u8>) -> Self {
        let instructions = disassemble(&code);
        let cfg = build_cfg(&instructions);
        let selectors = extract_selectors(&cfg);
        BytecodeFacts {
            path: path.to_string(),
            code,
            instructions,
            cfg,
            selectors,
        }
    }

    pub(crate) fn finding(&self, id: &str, pc: usize, message: String) -> Finding {
        let d = descriptor(id).expect("registered detector");
        Finding {
            detector: d.id.to_string(),
            category: d.category,
            impact: d.impact,
            file: self.path.clone(),
            line: None,
            column: None,
            pc: Some(pc),
            message,
            advice: d.advice.to_string(),
            note: None,
            block: self.cfg.block_containing(pc),
        }
    }
}

/// Everything a detector may read. Detectors never mutate it.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisContext<'c> {
    pub source: Option<&'c SourceFacts<'c>>,
    pub bytecode: Option<&'c BytecodeFacts>,
    pub config: &'c DetectorConfig,
}

impl<'c> AnalysisContext<'c> {
    pub fn for_source(facts: &'c SourceFacts<'c>, config: &'c DetectorConfig) -> Self {
        AnalysisContext {
            source: Some(facts),
            bytecode: None,
            config,
        }
    }

    pub fn for_bytecode(facts: &'c BytecodeFacts, config: &'c DetectorConfig) -> Self {
        AnalysisContext {
            source: None,
            bytecode: Some(facts),
            config,
        }
    }

    fn has(&self, f: Frontend) -> bool {
        match f {
            Frontend::Source => self.source.is_some(),
            Frontend::Bytecode => self.bytecode.is_some(),
        }
    }
}

pub type DetectFn = fn(&AnalysisContext<'_>) -> Vec<Finding>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectorOutcome {
    Findings(Vec<Finding>),
    /// The facts this detector needs are not in the context.
    Skipped,
}

pub fn detector_fn(id: &str) -> Option<DetectFn> {
    let f: DetectFn = match id {
        "unchecked-external-calls" => detect_unchecked_external_calls,
        "dos-under-external-influence" => detect_dos_under_external_influence,
        "strict-balance-equality" => detect_strict_balance_equality,
        "unmatched-type-assignment" => detect_unmatched_type_assignment,
        "transaction-state-dependency" => detect_transaction_state_dependency,
        "block-info-dependency" => detect_block_info_dependency,
        "reentrancy" => detect_reentrancy,
        "nested-call" => detect_nested_call,
        "misleading-data-location" => detect_misleading_data_location,
        "unmatched-erc20" => detect_unmatched_erc20,
        "missing-reminder" => detect_missing_reminder,
        "missing-return-statement" => detect_missing_return_statement,
        "greedy-contract" => detect_greedy_contract,
        "unused-statement" => detect_unused_statement,
        "high-gas-function-type" => detect_high_gas_function_type,
        "high-gas-data-type" => detect_high_gas_data_type,
        "hard-code-address" => detect_hard_code_address,
        "missing-interrupter" => detect_missing_interrupter,
        "deprecated-apis" => detect_deprecated_apis,
        "unspecified-compiler-version" => detect_unspecified_compiler_version,
        _ => return None,
    };
    Some(f)
}

pub fn run_detector(d: &DetectorDescriptor, ctx: &AnalysisContext<'_>) -> DetectorOutcome {
    if !d.frontends.iter().any(|f| ctx.has(*f)) {
        return DetectorOutcome::Skipped;
    }
    let f = detector_fn(d.id).expect("every registered detector has an implementation");
    DetectorOutcome::Findings(f(ctx))
}

/// Runs every enabled detector. Returns the findings and the ids skipped
/// for lack of facts.
pub fn run_detectors(ctx: &AnalysisContext<'_>) -> (Vec<Finding>, Vec<&'static str>) {
    let mut findings = Vec::new();
    let mut skipped = Vec::new();
    for d in registry().iter().filter(|d| ctx.config.is_enabled(d.id)) {
        match run_detector(d, ctx) {
            DetectorOutcome::Findings(f) => findings.extend(f),
            DetectorOutcome::Skipped => skipped.push(d.id),
        }
    }
    crate::report::normalize(&mut findings);
    (findings, skipped)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::source::{parse, tokenize, FileId};

    /// Findings of one detector on a source snippet, default configuration.
    pub fn run_on(src: &str, id: &str) -> Vec<Finding> {
        run_with(src, id, &DetectorConfig::default())
    }

    pub fn run_with(src: &str, id: &str, config: &DetectorConfig) -> Vec<Finding> {
        let out = parse(&tokenize(src, FileId(0)).expect("lexes"));
        assert!(!out.has_errors(), "{:?}", out.diagnostics);
        let facts = SourceFacts::build("t.sol", src, &out.unit);
        let ctx = AnalysisContext::for_source(&facts, config);
        let mut f = detector_fn(id).expect("known id")(&ctx);
        crate::report::normalize(&mut f);
        f
    }
}
