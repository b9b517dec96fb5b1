//! Bytecode analysis: opcode table, disassembly, control flow and hashing.

pub mod cfg;
pub mod disasm;
pub mod dominators;
pub mod eip55;
pub mod emulate;
pub mod keccak;
pub mod loops;
pub mod opcode;
pub mod selectors;
pub mod symbolic;

pub use cfg::{build_cfg, build_cfg_with, BasicBlock, BlockId, ControlFlowGraph, EmulationLimits, Terminator};
pub use disasm::{assemble, decode_hex, disassemble, load_bytecode, serialize, AsmError, BytecodeError, Instruction};
pub use eip55::{eip55_checksum, eip55_is_valid, AddressLiteralError};
pub use emulate::{AbsValue, StackState, Taint};
pub use keccak::{keccak256, selector, selector_u32};
pub use loops::{detect_loops, Loop, LoopBound};
pub use selectors::{extract_selectors, SelectorTable};
