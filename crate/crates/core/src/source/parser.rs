//! Recursive-descent parser with statement-level error recovery.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::span::{FileId, Span};
use primitive_types::U256;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticLevel {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub level: DiagnosticLevel,
    pub message: String,
    pub span: Span,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            DiagnosticLevel::Warning => "warning",
            DiagnosticLevel::Error => "error",
        };
        write!(f, "{}: {}: {}", self.span, level, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ParseOutput {
    pub unit: SourceUnit,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutput {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.level == DiagnosticLevel::Error)
    }
}

#[derive(Debug)]
struct ParseError {
    message: String,
    span: Span,
}

type PResult<T> = Result<T, ParseError>;

/// Parses a token stream produced by [`super::lexer::tokenize`].
pub fn parse(tokens: &[Token<'_>]) -> ParseOutput {
    let toks: Vec<Token<'_>> = tokens.iter().filter(|t| t.kind != TokenKind::Comment).copied().collect();
    let file_id = tokens.first().map(|t| t.span.file_id).unwrap_or_default();
    let mut p = Parser {
        toks,
        pos: 0,
        file_id,
        diagnostics: Vec::new(),
        contract_name: String::new(),
    };
    let unit = p.source_unit();
    ParseOutput {
        unit,
        diagnostics: p.diagnostics,
    }
}

struct Parser<'src> {
    toks: Vec<Token<'src>>,
    pos: usize,
    file_id: FileId,
    diagnostics: Vec<Diagnostic>,
    contract_name: String,
}

const TIME_AND_ETHER_UNITS: &[&str] = &[
    "wei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years",
];

impl<'src> Parser<'src> {
    // ---- token helpers ----

    fn peek(&self) -> Option<&Token<'src>> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token<'src>> {
        self.toks.get(self.pos + n)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn current_span(&self) -> Span {
        match self.peek() {
            Some(t) => t.span,
            None => match self.toks.last() {
                Some(t) => Span::new(t.span.file_id, t.span.line, t.span.column, t.span.end(), 0),
                None => Span::new(self.file_id, 1, 1, 0, 0),
            },
        }
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            self.current_span()
        } else {
            self.toks[self.pos - 1].span
        }
    }

    fn span_from(&self, start: Span) -> Span {
        if self.pos == 0 {
            return start;
        }
        start.to(self.prev_span())
    }

    fn advance(&mut self) -> Option<Token<'src>> {
        let t = self.toks.get(self.pos).copied();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn check_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn check_op(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(p))
    }

    fn check_keyword(&self, k: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(k))
    }

    fn check_ident(&self, name: &str) -> bool {
        self.peek().is_some_and(|t| t.is(TokenKind::Identifier, name))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.check_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, p: &str) -> bool {
        if self.check_op(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: &str) -> bool {
        if self.check_keyword(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let found = self.peek().map(|t| format!(" (found `{}`)", t.text)).unwrap_or_else(|| " (found end of file)".into());
        Err(ParseError {
            message: format!("{}{}", message.into(), found),
            span: self.current_span(),
        })
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.check_punct(p) {
            Ok(self.advance().map(|t| t.span).unwrap_or_else(|| self.current_span()))
        } else {
            self.error(format!("expected `{p}`"))
        }
    }

    fn expect_identifier(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let t = *t;
                self.pos += 1;
                Ok((t.text.to_string(), t.span))
            }
            // a few keywords double as names in 0.4.x code
            Some(t) if t.kind == TokenKind::Keyword && matches!(t.text, "constructor") => {
                let t = *t;
                self.pos += 1;
                Ok((t.text.to_string(), t.span))
            }
            _ => self.error("expected identifier"),
        }
    }

    fn report(&mut self, e: ParseError) {
        self.diagnostics.push(Diagnostic {
            level: DiagnosticLevel::Error,
            message: e.message,
            span: e.span,
        });
    }

    fn warn(&mut self, message: impl Into<String>, span: Span) {
        self.diagnostics.push(Diagnostic {
            level: DiagnosticLevel::Warning,
            message: message.into(),
            span,
        });
    }

    /// Skips a balanced `{ ... }` group starting at the current `{`.
    fn skip_braced(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.advance() {
            if t.is_punct("{") {
                depth += 1;
            } else if t.is_punct("}") {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return;
                }
            }
        }
    }

    /// Error recovery: skip to just past the next `;` or to (not past) the
    /// `}` closing the current block, respecting nesting.
    fn recover_statement(&mut self) {
        let mut depth: i32 = 0;
        while let Some(t) = self.peek() {
            if t.is_punct("{") || t.is_punct("(") || t.is_punct("[") {
                depth += 1;
            } else if t.is_punct(")") || t.is_punct("]") {
                depth -= 1;
            } else if t.is_punct("}") {
                if depth <= 0 {
                    return;
                }
                depth -= 1;
                if depth == 0 {
                    self.pos += 1;
                    return;
                }
            } else if t.is_punct(";") && depth <= 0 {
                self.pos += 1;
                return;
            }
            self.pos += 1;
        }
    }

    // ---- top level ----

    fn source_unit(&mut self) -> SourceUnit {
        let start = self.current_span();
        let mut pragmas = Vec::new();
        let mut contracts = Vec::new();
        while !self.at_end() {
            let before = self.pos;
            let result = if self.check_keyword("pragma") {
                self.pragma().map(|p| pragmas.push(p))
            } else if self.check_keyword("import") {
                let span = self.current_span();
                self.warn("imports are not resolved; partial analysis", span);
                self.recover_statement();
                Ok(())
            } else if self.check_keyword("contract") || self.check_keyword("interface") || self.check_keyword("library") {
                self.contract().map(|c| contracts.push(c))
            } else {
                self.error("expected pragma, import or contract definition")
            };
            if let Err(e) = result {
                self.report(e);
                self.recover_statement();
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        let span = if self.toks.is_empty() {
            Span::new(self.file_id, 1, 1, 0, 0)
        } else {
            self.span_from(start)
        };
        SourceUnit {
            pragmas,
            contracts,
            span,
        }
    }

    fn pragma(&mut self) -> PResult<PragmaDirective> {
        let start = self.current_span();
        self.advance();
        let (name, _) = self.expect_identifier()?;
        let mut text = String::new();
        let mut last_end: Option<usize> = None;
        while let Some(t) = self.peek() {
            if t.is_punct(";") {
                break;
            }
            if let Some(end) = last_end {
                if t.span.byte_offset > end {
                    text.push(' ');
                }
            }
            text.push_str(t.text);
            last_end = Some(t.span.end());
            self.pos += 1;
        }
        self.expect_punct(";")?;
        let constraint_kind = classify_version(&text);
        Ok(PragmaDirective {
            name,
            constraint_kind,
            version_text: text,
            span: self.span_from(start),
        })
    }

    fn contract(&mut self) -> PResult<ContractDefinition> {
        let start = self.current_span();
        let kind = match self.advance().map(|t| t.text) {
            Some("interface") => ContractKind::Interface,
            Some("library") => {
                self.warn("libraries are analyzed as plain contracts; partial analysis", start);
                ContractKind::Library
            }
            _ => ContractKind::Contract,
        };
        let (name, _) = self.expect_identifier()?;
        self.contract_name = name.clone();
        let mut bases = Vec::new();
        if self.eat_keyword("is") {
            loop {
                let (base, _) = self.expect_identifier()?;
                bases.push(base);
                if self.check_punct("(") {
                    self.call_arguments()?;
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("{")?;
        let mut contract = ContractDefinition {
            name,
            kind,
            bases,
            state_variables: Vec::new(),
            functions: Vec::new(),
            modifiers: Vec::new(),
            events: Vec::new(),
            structs: Vec::new(),
            enums: Vec::new(),
            span: start,
        };
        while !self.at_end() && !self.check_punct("}") {
            let before = self.pos;
            if let Err(e) = self.contract_member(&mut contract) {
                self.report(e);
                self.recover_statement();
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        self.expect_punct("}")?;
        contract.span = self.span_from(start);
        Ok(contract)
    }

    fn contract_member(&mut self, contract: &mut ContractDefinition) -> PResult<()> {
        if self.check_keyword("function") || self.check_keyword("constructor") {
            let f = self.function()?;
            contract.functions.push(f);
        } else if self.check_keyword("modifier") {
            let m = self.modifier()?;
            contract.modifiers.push(m);
        } else if self.check_keyword("event") {
            let e = self.event()?;
            contract.events.push(e);
        } else if self.check_keyword("struct") {
            let s = self.struct_def()?;
            contract.structs.push(s);
        } else if self.check_keyword("enum") {
            self.advance();
            let (name, _) = self.expect_identifier()?;
            contract.enums.push(name);
            if !self.check_punct("{") {
                return self.error("expected `{`");
            }
            self.skip_braced();
        } else if self.check_keyword("using") {
            let span = self.current_span();
            self.warn("`using ... for` is not supported; partial analysis", span);
            self.recover_statement();
        } else {
            let v = self.state_variable()?;
            contract.state_variables.push(v);
        }
        Ok(())
    }

    fn state_variable(&mut self) -> PResult<VariableDeclaration> {
        let start = self.current_span();
        let type_name = self.type_name()?;
        let mut visibility = Visibility::Default;
        let mut is_constant = false;
        loop {
            if self.eat_keyword("public") {
                visibility = Visibility::Public;
            } else if self.eat_keyword("private") {
                visibility = Visibility::Private;
            } else if self.eat_keyword("internal") {
                visibility = Visibility::Internal;
            } else if self.eat_keyword("constant") {
                is_constant = true;
            } else if self.check_ident("immutable") {
                self.advance();
            } else {
                break;
            }
        }
        let (name, _) = self.expect_identifier()?;
        let initializer = if self.eat_op("=") { Some(self.expression()?) } else { None };
        self.expect_punct(";")?;
        Ok(VariableDeclaration {
            name,
            type_name,
            data_location: DataLocation::Unspecified,
            initializer,
            visibility,
            is_constant,
            indexed: false,
            span: self.span_from(start),
        })
    }

    fn struct_def(&mut self) -> PResult<StructDefinition> {
        let start = self.current_span();
        self.advance();
        let (name, _) = self.expect_identifier()?;
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.at_end() && !self.check_punct("}") {
            let mstart = self.current_span();
            let type_name = self.type_name()?;
            let (mname, _) = self.expect_identifier()?;
            self.expect_punct(";")?;
            members.push(VariableDeclaration {
                name: mname,
                type_name,
                data_location: DataLocation::Unspecified,
                initializer: None,
                visibility: Visibility::Default,
                is_constant: false,
                indexed: false,
                span: self.span_from(mstart),
            });
        }
        self.expect_punct("}")?;
        Ok(StructDefinition {
            name,
            members,
            span: self.span_from(start),
        })
    }

    fn event(&mut self) -> PResult<EventDefinition> {
        let start = self.current_span();
        self.advance();
        let (name, _) = self.expect_identifier()?;
        let parameters = self.parameter_list()?;
        self.eat_keyword("anonymous");
        self.expect_punct(";")?;
        Ok(EventDefinition {
            name,
            parameters,
            span: self.span_from(start),
        })
    }

    fn modifier(&mut self) -> PResult<ModifierDefinition> {
        let start = self.current_span();
        self.advance();
        let (name, _) = self.expect_identifier()?;
        let parameters = if self.check_punct("(") { self.parameter_list()? } else { Vec::new() };
        while self.check_ident("virtual") || self.check_ident("override") {
            self.advance();
        }
        let body = self.block()?;
        Ok(ModifierDefinition {
            name,
            parameters,
            body,
            span: self.span_from(start),
        })
    }

    fn function(&mut self) -> PResult<FunctionDefinition> {
        let start = self.current_span();
        let mut kind = FunctionKind::Function;
        let mut name = String::new();
        if self.eat_keyword("constructor") {
            kind = FunctionKind::Constructor;
        } else {
            self.advance(); // `function`
            if self.check_punct("(") {
                kind = FunctionKind::Fallback;
            } else {
                let (n, _) = self.expect_identifier()?;
                if n == "constructor" || n == self.contract_name {
                    kind = FunctionKind::Constructor;
                }
                name = n;
            }
        }
        let parameters = self.parameter_list()?;
        let mut visibility = Visibility::Default;
        let mut mutability = Mutability::NonPayable;
        let mut returns = Vec::new();
        let mut modifiers_invoked = Vec::new();
        loop {
            let Some(t) = self.peek().copied() else { break };
            match (t.kind, t.text) {
                (TokenKind::Keyword, "public") => visibility = Visibility::Public,
                (TokenKind::Keyword, "external") => visibility = Visibility::External,
                (TokenKind::Keyword, "internal") => visibility = Visibility::Internal,
                (TokenKind::Keyword, "private") => visibility = Visibility::Private,
                (TokenKind::Keyword, "payable") => mutability = Mutability::Payable,
                (TokenKind::Keyword, "view") => mutability = Mutability::View,
                (TokenKind::Keyword, "pure") => mutability = Mutability::Pure,
                (TokenKind::Keyword, "constant") => mutability = Mutability::Constant,
                (TokenKind::Keyword, "returns") => {
                    self.advance();
                    returns = self.parameter_list()?;
                    continue;
                }
                (TokenKind::Identifier, "virtual") | (TokenKind::Identifier, "override") => {}
                (TokenKind::Identifier, _) => {
                    self.advance();
                    let arguments = if self.check_punct("(") { self.call_arguments()? } else { Vec::new() };
                    modifiers_invoked.push(ModifierInvocation {
                        name: t.text.to_string(),
                        arguments,
                        span: self.span_from(t.span),
                    });
                    continue;
                }
                _ => break,
            }
            self.advance();
        }
        let body = if self.eat_punct(";") { None } else { Some(self.block()?) };
        Ok(FunctionDefinition {
            name,
            kind,
            parameters,
            returns,
            visibility,
            is_payable: mutability == Mutability::Payable,
            mutability,
            modifiers_invoked,
            body,
            span: self.span_from(start),
        })
    }

    fn parameter_list(&mut self) -> PResult<Vec<VariableDeclaration>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let start = self.current_span();
            let type_name = self.type_name()?;
            let data_location = self.data_location();
            let indexed = self.eat_keyword("indexed");
            let name = if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
                self.expect_identifier()?.0
            } else {
                String::new()
            };
            params.push(VariableDeclaration {
                name,
                type_name,
                data_location,
                initializer: None,
                visibility: Visibility::Default,
                is_constant: false,
                indexed,
                span: self.span_from(start),
            });
            if self.eat_punct(")") {
                break;
            }
            self.expect_punct(",")?;
        }
        Ok(params)
    }

    fn data_location(&mut self) -> DataLocation {
        if self.eat_keyword("storage") {
            DataLocation::Storage
        } else if self.eat_keyword("memory") {
            DataLocation::Memory
        } else if self.eat_keyword("calldata") {
            DataLocation::Calldata
        } else {
            DataLocation::Unspecified
        }
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let start = self.current_span();
        let mut ty = if self.eat_keyword("mapping") {
            self.expect_punct("(")?;
            let key = self.type_name()?;
            if !self.eat_op("=>") {
                return self.error("expected `=>`");
            }
            let value = self.type_name()?;
            self.expect_punct(")")?;
            TypeName {
                kind: TypeKind::Mapping {
                    key: Box::new(key),
                    value: Box::new(value),
                },
                span: self.span_from(start),
            }
        } else if self.eat_keyword("var") {
            TypeName {
                kind: TypeKind::VarInferred,
                span: start,
            }
        } else if self.check_keyword("function") {
            return self.error("function types are not supported");
        } else {
            let (name, _) = self.expect_identifier()?;
            if is_elementary_type_name(&name) {
                if name == "address" && self.check_keyword("payable") {
                    self.advance();
                }
                TypeName::elementary(&name, start)
            } else {
                let mut full = name;
                while self.check_punct(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
                    self.advance();
                    let (part, _) = self.expect_identifier()?;
                    full.push('.');
                    full.push_str(&part);
                }
                TypeName {
                    kind: TypeKind::UserDefined(full),
                    span: self.span_from(start),
                }
            }
        };
        while self.check_punct("[") {
            self.advance();
            let length = if self.check_punct("]") {
                None
            } else {
                Some(Box::new(self.expression()?))
            };
            self.expect_punct("]")?;
            ty = TypeName {
                kind: TypeKind::Array {
                    element: Box::new(ty),
                    length,
                },
                span: self.span_from(start),
            };
        }
        Ok(ty)
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect_punct("{")?;
        let mut statements = Vec::new();
        while !self.at_end() && !self.check_punct("}") {
            statements.push(self.statement_recovering());
        }
        self.expect_punct("}")?;
        Ok(Block {
            statements,
            span: self.span_from(start),
        })
    }

    fn statement_recovering(&mut self) -> Statement {
        let start_pos = self.pos;
        let start = self.current_span();
        match self.statement() {
            Ok(s) => s,
            Err(e) => {
                self.report(e);
                self.recover_statement();
                if self.pos == start_pos {
                    self.pos += 1;
                }
                Statement {
                    kind: StatementKind::Error,
                    span: self.span_from(start),
                }
            }
        }
    }

    fn statement(&mut self) -> PResult<Statement> {
        let start = self.current_span();
        let kind = if self.check_punct("{") {
            StatementKind::Block(self.block()?)
        } else if self.eat_keyword("if") {
            self.expect_punct("(")?;
            let condition = self.expression()?;
            self.expect_punct(")")?;
            let then_branch = Box::new(self.statement_recovering());
            let else_branch = if self.eat_keyword("else") {
                Some(Box::new(self.statement_recovering()))
            } else {
                None
            };
            StatementKind::If {
                condition,
                then_branch,
                else_branch,
            }
        } else if self.eat_keyword("for") {
            self.expect_punct("(")?;
            let init = if self.eat_punct(";") {
                None
            } else {
                Some(Box::new(self.simple_statement()?))
            };
            let condition = if self.check_punct(";") { None } else { Some(self.expression()?) };
            self.expect_punct(";")?;
            let update = if self.check_punct(")") { None } else { Some(self.expression()?) };
            self.expect_punct(")")?;
            let body = Box::new(self.statement_recovering());
            StatementKind::For {
                init,
                condition,
                update,
                body,
            }
        } else if self.eat_keyword("while") {
            self.expect_punct("(")?;
            let condition = self.expression()?;
            self.expect_punct(")")?;
            let body = Box::new(self.statement_recovering());
            StatementKind::While { condition, body }
        } else if self.eat_keyword("do") {
            let body = Box::new(self.statement_recovering());
            if !self.eat_keyword("while") {
                return self.error("expected `while`");
            }
            self.expect_punct("(")?;
            let condition = self.expression()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            StatementKind::DoWhile { body, condition }
        } else if self.eat_keyword("return") {
            let value = if self.check_punct(";") { None } else { Some(self.expression()?) };
            self.expect_punct(";")?;
            StatementKind::Return(value)
        } else if self.eat_keyword("throw") {
            self.expect_punct(";")?;
            StatementKind::Throw
        } else if self.eat_keyword("break") {
            self.expect_punct(";")?;
            StatementKind::Break
        } else if self.eat_keyword("continue") {
            self.expect_punct(";")?;
            StatementKind::Continue
        } else if self.eat_keyword("emit") {
            let e = self.expression()?;
            self.expect_punct(";")?;
            StatementKind::Emit(e)
        } else if self.check_ident("_") && self.peek_at(1).is_some_and(|t| t.is_punct(";")) {
            self.pos += 2;
            StatementKind::Placeholder
        } else if self.check_keyword("assembly") {
            self.warn("inline assembly is not analyzed; partial analysis", start);
            self.advance();
            if self.peek().is_some_and(|t| t.kind == TokenKind::StringLiteral) {
                self.advance();
            }
            if !self.check_punct("{") {
                return self.error("expected `{`");
            }
            self.skip_braced();
            StatementKind::Assembly
        } else {
            let s = self.simple_statement()?;
            return Ok(s);
        };
        Ok(Statement {
            kind,
            span: self.span_from(start),
        })
    }

    /// Variable declaration or expression statement, including the `;`.
    fn simple_statement(&mut self) -> PResult<Statement> {
        let start = self.current_span();
        if let Some(kind) = self.try_variable_declaration()? {
            self.expect_punct(";")?;
            return Ok(Statement {
                kind,
                span: self.span_from(start),
            });
        }
        let e = self.expression()?;
        self.expect_punct(";")?;
        Ok(Statement {
            kind: StatementKind::Expression(e),
            span: self.span_from(start),
        })
    }

    fn try_variable_declaration(&mut self) -> PResult<Option<StatementKind>> {
        // `var (a, , b) = ...`
        if self.check_keyword("var") && self.peek_at(1).is_some_and(|t| t.is_punct("(")) {
            let var_span = self.current_span();
            self.pos += 2;
            let mut declarations = Vec::new();
            loop {
                if self.check_punct(",") || self.check_punct(")") {
                    declarations.push(None);
                } else {
                    let (name, span) = self.expect_identifier()?;
                    declarations.push(Some(VariableDeclaration {
                        name,
                        type_name: TypeName {
                            kind: TypeKind::VarInferred,
                            span: var_span,
                        },
                        data_location: DataLocation::Unspecified,
                        initializer: None,
                        visibility: Visibility::Default,
                        is_constant: false,
                        indexed: false,
                        span,
                    }));
                }
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
            let initializer = if self.eat_op("=") { Some(self.expression()?) } else { None };
            return Ok(Some(StatementKind::VariableDeclaration {
                declarations,
                initializer,
            }));
        }
        // typed tuple declarations `(uint a, uint b) = ...`
        if self.check_punct("(") {
            let saved = self.pos;
            let saved_diags = self.diagnostics.len();
            if let Ok(decls) = self.parameter_list() {
                if decls.iter().all(|d| !d.name.is_empty()) && self.eat_op("=") {
                    let initializer = Some(self.expression()?);
                    return Ok(Some(StatementKind::VariableDeclaration {
                        declarations: decls.into_iter().map(Some).collect(),
                        initializer,
                    }));
                }
            }
            self.pos = saved;
            self.diagnostics.truncate(saved_diags);
            return Ok(None);
        }
        let starts_like_type = self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Identifier || t.is_keyword("mapping") || t.is_keyword("var"));
        if !starts_like_type {
            return Ok(None);
        }
        let saved = self.pos;
        let start = self.current_span();
        let type_name = match self.type_name() {
            Ok(t) => t,
            Err(_) => {
                self.pos = saved;
                return Ok(None);
            }
        };
        let data_location = self.data_location();
        let is_name = self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(1).is_some_and(|t| t.is_op("=") || t.is_punct(";"));
        if !is_name {
            self.pos = saved;
            return Ok(None);
        }
        let (name, _) = self.expect_identifier()?;
        let initializer = if self.eat_op("=") { Some(self.expression()?) } else { None };
        let decl = VariableDeclaration {
            name,
            type_name,
            data_location,
            initializer: initializer.clone(),
            visibility: Visibility::Default,
            is_constant: false,
            indexed: false,
            span: self.span_from(start),
        };
        Ok(Some(StatementKind::VariableDeclaration {
            declarations: vec![Some(decl)],
            initializer,
        }))
    }

    // ---- expressions ----

    fn expression(&mut self) -> PResult<Expression> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expression> {
        let lhs = self.conditional()?;
        let op = match self.peek().filter(|t| t.kind == TokenKind::Operator).map(|t| t.text) {
            Some("=") => AssignOp::Assign,
            Some("+=") => AssignOp::Compound(BinaryOp::Add),
            Some("-=") => AssignOp::Compound(BinaryOp::Sub),
            Some("*=") => AssignOp::Compound(BinaryOp::Mul),
            Some("/=") => AssignOp::Compound(BinaryOp::Div),
            Some("%=") => AssignOp::Compound(BinaryOp::Mod),
            Some("|=") => AssignOp::Compound(BinaryOp::BitOr),
            Some("&=") => AssignOp::Compound(BinaryOp::BitAnd),
            Some("^=") => AssignOp::Compound(BinaryOp::BitXor),
            Some("<<=") => AssignOp::Compound(BinaryOp::Shl),
            Some(">>=") => AssignOp::Compound(BinaryOp::Shr),
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.assignment()?;
        let span = lhs.span.to(rhs.span);
        Ok(Expression {
            kind: ExpressionKind::Assignment {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        })
    }

    fn conditional(&mut self) -> PResult<Expression> {
        let condition = self.binary(0)?;
        if !self.eat_op("?") {
            return Ok(condition);
        }
        let then_value = self.assignment()?;
        if !self.eat_op(":") {
            return self.error("expected `:`");
        }
        let else_value = self.assignment()?;
        let span = condition.span.to(else_value.span);
        Ok(Expression {
            kind: ExpressionKind::Conditional {
                condition: Box::new(condition),
                then_value: Box::new(then_value),
                else_value: Box::new(else_value),
            },
            span,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expression> {
        let mut lhs = self.unary()?;
        loop {
            let Some((op, prec)) = self.peek().filter(|t| t.kind == TokenKind::Operator).and_then(|t| binary_op(t.text))
            else {
                break;
            };
            if prec < min_prec {
                break;
            }
            self.advance();
            // `**` is right-associative
            let next_min = if op == BinaryOp::Exp { prec } else { prec + 1 };
            let rhs = self.binary(next_min)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expression {
                kind: ExpressionKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let op = if self.check_keyword("delete") {
            Some(UnaryOp::Delete)
        } else {
            match self.peek().filter(|t| t.kind == TokenKind::Operator).map(|t| t.text) {
                Some("!") => Some(UnaryOp::Not),
                Some("~") => Some(UnaryOp::BitNot),
                Some("-") => Some(UnaryOp::Neg),
                Some("+") => None,
                Some("++") => Some(UnaryOp::PreIncrement),
                Some("--") => Some(UnaryOp::PreDecrement),
                _ => None,
            }
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.unary()?;
            return Ok(Expression {
                span: start.to(operand.span),
                kind: ExpressionKind::Unary {
                    op,
                    operand: Box::new(operand),
                },
            });
        }
        if self.check_op("+") {
            self.advance();
            return self.unary();
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expression> {
        let mut e = self.primary()?;
        loop {
            if self.check_punct(".") {
                self.advance();
                let member = match self.peek() {
                    Some(t) if t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword => {
                        let text = t.text.to_string();
                        self.advance();
                        text
                    }
                    _ => return self.error("expected member name"),
                };
                let span = self.span_from(e.span);
                e = Expression {
                    kind: ExpressionKind::MemberAccess {
                        base: Box::new(e),
                        member,
                    },
                    span,
                };
            } else if self.check_punct("[") {
                self.advance();
                let index = if self.check_punct("]") {
                    None
                } else {
                    Some(Box::new(self.expression()?))
                };
                self.expect_punct("]")?;
                let span = self.span_from(e.span);
                e = Expression {
                    kind: ExpressionKind::IndexAccess { base: Box::new(e), index },
                    span,
                };
            } else if self.check_punct("(") {
                let arguments = self.call_arguments()?;
                let span = self.span_from(e.span);
                e = Expression {
                    kind: ExpressionKind::Call {
                        callee: Box::new(e),
                        arguments,
                    },
                    span,
                };
            } else if self.check_op("++") || self.check_op("--") {
                let op = if self.check_op("++") {
                    UnaryOp::PostIncrement
                } else {
                    UnaryOp::PostDecrement
                };
                self.advance();
                let span = self.span_from(e.span);
                e = Expression {
                    kind: ExpressionKind::Unary {
                        op,
                        operand: Box::new(e),
                    },
                    span,
                };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_arguments(&mut self) -> PResult<Vec<Expression>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        // named arguments `f({a: 1, b: 2})` keep only the values
        let named = self.check_punct("{");
        if named {
            self.advance();
        }
        loop {
            if named {
                if self.check_punct("}") {
                    self.advance();
                    self.expect_punct(")")?;
                    break;
                }
                self.expect_identifier()?;
                if !self.eat_op(":") {
                    return self.error("expected `:`");
                }
            }
            args.push(self.expression()?);
            if !named && self.eat_punct(")") {
                break;
            }
            if named && self.check_punct("}") {
                continue;
            }
            self.expect_punct(",")?;
        }
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expression> {
        let Some(tok) = self.peek().copied() else {
            return self.error("expected expression");
        };
        let start = tok.span;
        match tok.kind {
            TokenKind::Identifier => {
                self.advance();
                if is_elementary_type_name(tok.text) {
                    if tok.text == "address" && self.check_keyword("payable") {
                        self.advance();
                    }
                    let mut ty = TypeName::elementary(tok.text, start);
                    // `uint[](n)`-style array types used in `new` or conversions
                    while self.check_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
                        self.pos += 2;
                        ty = TypeName {
                            kind: TypeKind::Array {
                                element: Box::new(ty),
                                length: None,
                            },
                            span: self.span_from(start),
                        };
                    }
                    return Ok(Expression {
                        kind: ExpressionKind::ElementaryType(ty),
                        span: self.span_from(start),
                    });
                }
                Ok(Expression {
                    kind: ExpressionKind::Identifier(tok.text.to_string()),
                    span: start,
                })
            }
            TokenKind::NumberLiteral => {
                self.advance();
                let unit = self.number_unit();
                let value = number_magnitude(tok.text, unit.as_deref());
                let text = match &unit {
                    Some(u) => format!("{} {}", tok.text, u),
                    None => tok.text.to_string(),
                };
                Ok(Expression {
                    kind: ExpressionKind::Literal(Literal {
                        kind: LiteralKind::Number { value, unit },
                        text,
                    }),
                    span: self.span_from(start),
                })
            }
            TokenKind::HexLiteral => {
                self.advance();
                let kind = if tok.text.starts_with("hex") {
                    LiteralKind::Hex { value: None }
                } else {
                    let digits = &tok.text[2..];
                    if digits.len() == 40 && digits.bytes().all(|b| b.is_ascii_hexdigit()) {
                        LiteralKind::Address
                    } else {
                        let clean: String = digits.chars().filter(|c| *c != '_').collect();
                        let value = if clean.len() <= 64 && !clean.is_empty() {
                            U256::from_str_radix(&clean, 16).ok()
                        } else {
                            None
                        };
                        // hex numbers may carry units too (`0x10 wei`)
                        let unit = self.number_unit();
                        match (unit, value) {
                            (Some(u), Some(v)) => LiteralKind::Number {
                                value: apply_unit(v, 0, &u),
                                unit: Some(u),
                            },
                            (Some(u), None) => LiteralKind::Number { value: None, unit: Some(u) },
                            (None, v) => LiteralKind::Hex { value: v },
                        }
                    }
                };
                Ok(Expression {
                    kind: ExpressionKind::Literal(Literal {
                        kind,
                        text: tok.text.to_string(),
                    }),
                    span: self.span_from(start),
                })
            }
            TokenKind::StringLiteral => {
                self.advance();
                let mut text = tok.text.to_string();
                while let Some(t) = self.peek().filter(|t| t.kind == TokenKind::StringLiteral).copied() {
                    text.push_str(t.text);
                    self.advance();
                }
                Ok(Expression {
                    kind: ExpressionKind::Literal(Literal {
                        kind: LiteralKind::String,
                        text,
                    }),
                    span: self.span_from(start),
                })
            }
            TokenKind::Keyword if tok.text == "true" || tok.text == "false" => {
                self.advance();
                Ok(Expression {
                    kind: ExpressionKind::Literal(Literal {
                        kind: LiteralKind::Bool(tok.text == "true"),
                        text: tok.text.to_string(),
                    }),
                    span: start,
                })
            }
            TokenKind::Keyword if tok.text == "new" => {
                self.advance();
                let ty = self.type_name()?;
                Ok(Expression {
                    kind: ExpressionKind::New(ty),
                    span: self.span_from(start),
                })
            }
            TokenKind::Keyword if tok.text == "payable" => {
                // `payable(x)` conversion
                self.advance();
                Ok(Expression {
                    kind: ExpressionKind::ElementaryType(TypeName::elementary("address", start)),
                    span: start,
                })
            }
            TokenKind::Punctuation if tok.text == "(" || tok.text == "[" => {
                let close = if tok.text == "(" { ")" } else { "]" };
                self.advance();
                let mut items = Vec::new();
                if !self.check_punct(close) {
                    loop {
                        if self.check_punct(",") || self.check_punct(close) {
                            items.push(None);
                        } else {
                            items.push(Some(self.expression()?));
                        }
                        if self.check_punct(close) {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                self.expect_punct(close)?;
                let span = self.span_from(start);
                if tok.text == "(" && items.len() == 1 {
                    if let Some(Some(mut inner)) = items.pop() {
                        inner.span = span;
                        return Ok(inner);
                    }
                }
                Ok(Expression {
                    kind: ExpressionKind::Tuple(items),
                    span,
                })
            }
            _ => self.error("expected expression"),
        }
    }

    fn number_unit(&mut self) -> Option<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && TIME_AND_ETHER_UNITS.contains(&t.text) => {
                let u = t.text.to_string();
                self.advance();
                Some(u)
            }
            _ => None,
        }
    }
}

fn binary_op(text: &str) -> Option<(BinaryOp, u8)> {
    use BinaryOp::*;
    Some(match text {
        "||" => (Or, 1),
        "&&" => (And, 2),
        "==" => (Eq, 3),
        "!=" => (Ne, 3),
        "<" => (Lt, 4),
        ">" => (Gt, 4),
        "<=" => (Le, 4),
        ">=" => (Ge, 4),
        "|" => (BitOr, 5),
        "^" => (BitXor, 6),
        "&" => (BitAnd, 7),
        "<<" => (Shl, 8),
        ">>" => (Shr, 8),
        "+" => (Add, 9),
        "-" => (Sub, 9),
        "*" => (Mul, 10),
        "/" => (Div, 10),
        "%" => (Mod, 10),
        "**" => (Exp, 11),
        _ => return None,
    })
}

/// Classifies a version pragma's constraint text.
pub fn classify_version(text: &str) -> ConstraintKind {
    let t = text.trim();
    let is_semver = |s: &str| {
        let parts: Vec<&str> = s.split('.').collect();
        (1..=3).contains(&parts.len()) && parts.iter().all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
    };
    if is_semver(t) {
        ConstraintKind::Exact
    } else if let Some(rest) = t.strip_prefix('^') {
        if is_semver(rest.trim()) {
            ConstraintKind::Caret
        } else {
            ConstraintKind::Other
        }
    } else if t.contains("||") || t.contains('~') || t.contains('*') {
        ConstraintKind::Other
    } else if t.starts_with('>') || t.starts_with('<') || t.contains(" - ") {
        ConstraintKind::Range
    } else {
        ConstraintKind::Other
    }
}

/// Exact magnitude of a decimal literal with an optional unit suffix.
pub fn number_magnitude(text: &str, unit: Option<&str>) -> Option<U256> {
    let clean: String = text.chars().filter(|c| *c != '_').collect();
    let (mantissa, exponent) = match clean.find(['e', 'E']) {
        Some(i) => (&clean[..i], clean[i + 1..].parse::<i32>().ok()?),
        None => (clean.as_str(), 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if frac_part.contains('.') {
        // dotted versions are not numbers
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let value = U256::from_dec_str(&digits).ok()?;
    let dexp = exponent - frac_part.len() as i32;
    match unit {
        Some(u) => apply_unit(value, dexp, u),
        None => scale(value, dexp),
    }
}

fn scale(value: U256, dexp: i32) -> Option<U256> {
    if dexp >= 0 {
        let mut v = value;
        for _ in 0..dexp {
            v = v.checked_mul(U256::from(10u8))?;
        }
        Some(v)
    } else {
        let mut v = value;
        for _ in 0..(-dexp) {
            let (q, r) = v.div_mod(U256::from(10u8));
            if !r.is_zero() {
                return None;
            }
            v = q;
        }
        Some(v)
    }
}

fn apply_unit(value: U256, dexp: i32, unit: &str) -> Option<U256> {
    let (ten_pow, factor): (i32, u64) = match unit {
        "wei" | "seconds" => (0, 1),
        "szabo" => (12, 1),
        "finney" => (15, 1),
        "ether" => (18, 1),
        "minutes" => (0, 60),
        "hours" => (0, 3_600),
        "days" => (0, 86_400),
        "weeks" => (0, 604_800),
        "years" => (0, 31_536_000),
        _ => (0, 1),
    };
    // multiply before dividing so that `0.5 minutes` stays exact
    let v = value.checked_mul(U256::from(factor))?;
    scale(v, dexp + ten_pow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::lexer::tokenize;

    fn parse_str(src: &str) -> ParseOutput {
        parse(&tokenize(src, FileId(0)).unwrap())
    }

    #[test]
    fn minimal_contract() {
        let out = parse_str("contract A{}");
        assert!(out.diagnostics.is_empty());
        assert_eq!(out.unit.contracts.len(), 1);
        let c = &out.unit.contracts[0];
        assert_eq!(c.name, "A");
        assert!(c.functions.is_empty() && c.state_variables.is_empty() && c.modifiers.is_empty());
    }

    #[test]
    fn pragma_kinds() {
        assert_eq!(classify_version("0.4.25"), ConstraintKind::Exact);
        assert_eq!(classify_version("^0.4.25"), ConstraintKind::Caret);
        assert_eq!(classify_version(">=0.4.22 <0.6.0"), ConstraintKind::Range);
        assert_eq!(classify_version("~0.4.0"), ConstraintKind::Other);
        let out = parse_str("pragma solidity ^0.4.25;");
        assert_eq!(out.unit.pragmas[0].version_text, "^0.4.25");
        assert_eq!(out.unit.pragmas[0].constraint_kind, ConstraintKind::Caret);
    }

    #[test]
    fn ether_units() {
        assert_eq!(number_magnitude("10", Some("ether")), Some(U256::exp10(19)));
        assert_eq!(number_magnitude("0.1", Some("ether")), Some(U256::exp10(17)));
        assert_eq!(number_magnitude("1.5", None), None);
        assert_eq!(number_magnitude("2", Some("days")), Some(U256::from(172_800u64)));
        assert_eq!(number_magnitude("1e3", None), Some(U256::from(1000u64)));
    }

    #[test]
    fn call_value_chain_is_nested_calls() {
        let out = parse_str("contract C { function f(address a) { a.call.value(1)(); } }");
        assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        let body = out.unit.contracts[0].functions[0].body.as_ref().unwrap();
        let StatementKind::Expression(e) = &body.statements[0].kind else { panic!() };
        let ExpressionKind::Call { callee, arguments } = &e.kind else { panic!() };
        assert!(arguments.is_empty());
        let ExpressionKind::Call { callee: inner, .. } = &callee.kind else { panic!() };
        assert_eq!(inner.member_path().as_deref(), Some("a.call.value"));
    }

    #[test]
    fn declaration_vs_index_assignment() {
        let out = parse_str(
            "contract C { uint[] s; function f() { uint[] tmp; s[0] = 1; var i = 0; Foo.Bar x; } }",
        );
        assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        let body = out.unit.contracts[0].functions[0].body.as_ref().unwrap();
        assert!(matches!(body.statements[0].kind, StatementKind::VariableDeclaration { .. }));
        assert!(matches!(body.statements[1].kind, StatementKind::Expression(_)));
        assert!(matches!(body.statements[2].kind, StatementKind::VariableDeclaration { .. }));
        assert!(matches!(body.statements[3].kind, StatementKind::VariableDeclaration { .. }));
    }

    #[test]
    fn recovery_keeps_sibling_functions() {
        let out = parse_str("contract C { function a() { x = = 1; y = 2; } function b() { z = 3; } }");
        assert!(out.has_errors());
        let c = &out.unit.contracts[0];
        assert_eq!(c.functions.len(), 2);
        let a = c.functions[0].body.as_ref().unwrap();
        assert!(matches!(a.statements[0].kind, StatementKind::Error));
        assert!(matches!(a.statements[1].kind, StatementKind::Expression(_)));
    }

    #[test]
    fn fallback_and_constructor_spellings() {
        let out = parse_str(
            "contract C { function constructor() {} function() payable {} constructor(uint a) public {} function C() {} }",
        );
        assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        let kinds: Vec<FunctionKind> = out.unit.contracts[0].functions.iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            vec![
                FunctionKind::Constructor,
                FunctionKind::Fallback,
                FunctionKind::Constructor,
                FunctionKind::Constructor
            ]
        );
        let fb = &out.unit.contracts[0].functions[1];
        assert!(fb.name.is_empty() && fb.parameters.is_empty() && fb.is_payable);
    }

    #[test]
    fn assembly_is_skipped_with_warning() {
        let out = parse_str("contract C { function f() { assembly { let x := 1 } uint y = 2; } }");
        assert!(!out.has_errors());
        assert_eq!(out.diagnostics.len(), 1);
        let body = out.unit.contracts[0].functions[0].body.as_ref().unwrap();
        assert_eq!(body.statements.len(), 2);
    }
}
