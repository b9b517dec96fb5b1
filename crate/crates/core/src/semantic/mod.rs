//! Names, types, call graph and def-use facts over the syntax tree.

pub mod calls;
pub mod defuse;
pub mod inherit;
pub mod symbols;
pub mod types;

pub use calls::{build_call_graph, classify_external_call, CallGraph, CallNode, ExternalCall, ExternalCallKind};
pub use defuse::{compute_def_use, compute_def_use_modifier, is_block_info, DefUseFacts, SinkKind, SourceFlow, VarFacts, VarRole};
pub use inherit::{base_contract_names, flatten, FlatContract};
pub use symbols::{FunctionScope, Symbol, SymbolKind, SymbolTable};
pub use types::{infer_var_type, type_of, EmptyEnv, InferError, TypeEnv};
