//! Lossless tokenizer for the supported Solidity subset.
//!
//! Whitespace is the only input that does not become a token, so the token
//! texts plus the gaps between their spans reproduce the input exactly.

use super::span::{FileId, Span};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    NumberLiteral,
    HexLiteral,
    StringLiteral,
    Punctuation,
    Operator,
    Comment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'src> {
    pub kind: TokenKind,
    pub text: &'src str,
    pub span: Span,
}

impl<'src> Token<'src> {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punctuation, text)
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.is(TokenKind::Operator, text)
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{span}: unterminated string literal")]
    UnterminatedString { span: Span },
    #[error("{span}: unterminated block comment")]
    UnterminatedComment { span: Span },
    #[error("{span}: unexpected character {ch:?}")]
    UnexpectedChar { ch: char, span: Span },
}

impl LexError {
    pub fn span(&self) -> Span {
        match self {
            LexError::UnterminatedString { span }
            | LexError::UnterminatedComment { span }
            | LexError::UnexpectedChar { span, .. } => *span,
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "anonymous",
    "as",
    "assembly",
    "break",
    "calldata",
    "constant",
    "constructor",
    "continue",
    "contract",
    "days",
    "delete",
    "do",
    "else",
    "emit",
    "enum",
    "ether",
    "event",
    "external",
    "false",
    "finney",
    "for",
    "function",
    "hours",
    "if",
    "import",
    "indexed",
    "interface",
    "internal",
    "is",
    "library",
    "mapping",
    "memory",
    "minutes",
    "modifier",
    "new",
    "payable",
    "pragma",
    "private",
    "public",
    "pure",
    "return",
    "returns",
    "seconds",
    "storage",
    "struct",
    "szabo",
    "throw",
    "true",
    "using",
    "var",
    "view",
    "weeks",
    "wei",
    "while",
    "years",
];

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "**", "=>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=",
    "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=",
    "!", "~", "^", "&", "|", "?", ":",
];

const PUNCTUATION: &[u8] = b"(){}[];,.";

struct Cursor<'src> {
    src: &'src str,
    bytes: &'src [u8],
    pos: usize,
    line: u32,
    col: u32,
    file_id: FileId,
}

impl<'src> Cursor<'src> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) {
        if let Some(&b) = self.bytes.get(self.pos) {
            self.pos += 1;
            if b == b'\n' {
                self.line += 1;
                self.col = 1;
            } else if (b & 0xC0) != 0x80 {
                // count columns per UTF-8 scalar start byte
                self.col += 1;
            }
        }
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn span_from(&self, start: usize, line: u32, col: u32) -> Span {
        Span::new(self.file_id, line, col, start, self.pos - start)
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// Splits `source` into tokens. Comments are kept as tokens.
pub fn tokenize(source: &str, file_id: FileId) -> Result<Vec<Token<'_>>, LexError> {
    let mut cur = Cursor {
        src: source,
        bytes: source.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
        file_id,
    };
    let mut tokens = Vec::new();

    while let Some(b) = cur.peek(0) {
        if b.is_ascii_whitespace() {
            cur.bump();
            continue;
        }
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind = if b == b'/' && cur.peek(1) == Some(b'/') {
            while let Some(c) = cur.peek(0) {
                if c == b'\n' {
                    break;
                }
                cur.bump();
            }
            TokenKind::Comment
        } else if b == b'/' && cur.peek(1) == Some(b'*') {
            cur.bump_n(2);
            loop {
                match cur.peek(0) {
                    None => {
                        return Err(LexError::UnterminatedComment {
                            span: cur.span_from(start, line, col),
                        })
                    }
                    Some(b'*') if cur.peek(1) == Some(b'/') => {
                        cur.bump_n(2);
                        break;
                    }
                    Some(_) => cur.bump(),
                }
            }
            TokenKind::Comment
        } else if b == b'"' || b == b'\'' {
            lex_string(&mut cur, b, start, line, col)?;
            TokenKind::StringLiteral
        } else if b == b'0' && matches!(cur.peek(1), Some(b'x') | Some(b'X')) {
            cur.bump_n(2);
            while cur.peek(0).is_some_and(|c| c.is_ascii_hexdigit() || c == b'_') {
                cur.bump();
            }
            TokenKind::HexLiteral
        } else if b.is_ascii_digit() || (b == b'.' && cur.peek(1).is_some_and(|c| c.is_ascii_digit())) {
            lex_number(&mut cur);
            TokenKind::NumberLiteral
        } else if is_ident_start(b) {
            while cur.peek(0).is_some_and(is_ident_continue) {
                cur.bump();
            }
            let text = &cur.src[start..cur.pos];
            if text == "hex" && matches!(cur.peek(0), Some(b'"') | Some(b'\'')) {
                let quote = cur.peek(0).unwrap_or(b'"');
                lex_string(&mut cur, quote, start, line, col)?;
                TokenKind::HexLiteral
            } else if KEYWORDS.contains(&text) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if PUNCTUATION.contains(&b) {
            cur.bump();
            TokenKind::Punctuation
        } else if let Some(op) = OPERATORS
            .iter()
            .find(|op| cur.src[cur.pos..].starts_with(**op))
        {
            cur.bump_n(op.len());
            TokenKind::Operator
        } else {
            let ch = cur.src[cur.pos..].chars().next().unwrap_or('\u{fffd}');
            cur.bump_n(ch.len_utf8());
            return Err(LexError::UnexpectedChar {
                ch,
                span: cur.span_from(start, line, col),
            });
        };
        tokens.push(Token {
            kind,
            text: &cur.src[start..cur.pos],
            span: cur.span_from(start, line, col),
        });
    }
    Ok(tokens)
}

fn lex_string(cur: &mut Cursor<'_>, quote: u8, start: usize, line: u32, col: u32) -> Result<(), LexError> {
    // skip to the opening quote (a `hex` prefix may precede it)
    while cur.peek(0) != Some(quote) {
        cur.bump();
    }
    cur.bump();
    loop {
        match cur.peek(0) {
            None | Some(b'\n') => {
                return Err(LexError::UnterminatedString {
                    span: cur.span_from(start, line, col),
                })
            }
            Some(b'\\') => cur.bump_n(2),
            Some(c) if c == quote => {
                cur.bump();
                return Ok(());
            }
            Some(_) => cur.bump(),
        }
    }
}

/// Digits, dots and an optional exponent. Dotted versions such as `0.4.25`
/// lex as a single number token.
fn lex_number(cur: &mut Cursor<'_>) {
    loop {
        match cur.peek(0) {
            Some(c) if c.is_ascii_digit() || c == b'_' => cur.bump(),
            Some(b'.') if cur.peek(1).is_some_and(|c| c.is_ascii_digit()) => cur.bump(),
            Some(b'e') | Some(b'E')
                if cur.peek(1).is_some_and(|c| c.is_ascii_digit())
                    || (cur.peek(1) == Some(b'-') && cur.peek(2).is_some_and(|c| c.is_ascii_digit())) =>
            {
                cur.bump_n(2)
            }
            _ => break,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, &str)> {
        tokenize(src, FileId(0))
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn version_pragma() {
        use TokenKind::*;
        assert_eq!(
            kinds("pragma solidity ^0.4.25;"),
            vec![
                (Keyword, "pragma"),
                (Identifier, "solidity"),
                (Operator, "^"),
                (NumberLiteral, "0.4.25"),
                (Punctuation, ";"),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("", FileId(0)).unwrap().is_empty());
    }

    #[test]
    fn single_comment() {
        let toks = tokenize("/*Hard Code Address*/", FileId(0)).unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::Comment);
        assert_eq!(toks[0].text, "/*Hard Code Address*/");
    }

    #[test]
    fn unterminated_string_reports_span() {
        let err = tokenize("x = \"abc", FileId(3)).unwrap_err();
        assert!(matches!(err, LexError::UnterminatedString { .. }));
        assert_eq!(err.span().column, 5);
        assert_eq!(err.span().file_id, FileId(3));
    }

    #[test]
    fn unterminated_comment() {
        let err = tokenize("a /* b", FileId(0)).unwrap_err();
        assert!(matches!(err, LexError::UnterminatedComment { .. }));
    }

    #[test]
    fn call_value_chain_and_address() {
        use TokenKind::*;
        let toks = kinds("receiver.call.value(1 ether)(); 0xdCad3a6d3569DF655070DEd06cb7A1b2Ccd1D3AF");
        assert_eq!(toks[0], (Identifier, "receiver"));
        assert_eq!(toks[4], (Identifier, "value"));
        assert_eq!(toks[7], (Keyword, "ether"));
        assert_eq!(toks.last().unwrap().0, HexLiteral);
    }

    #[test]
    fn line_and_column_tracking() {
        let toks = tokenize("a\n  bb\n", FileId(0)).unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.column), (2, 3));
        assert_eq!(toks[1].span.byte_offset, 4);
    }
}
