//! Solidity-subset front end: lexer, syntax tree and parser.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod span;

pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, Diagnostic, DiagnosticLevel, ParseOutput};
pub use span::{FileId, Span};
