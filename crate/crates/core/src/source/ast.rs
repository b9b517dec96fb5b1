//! Span-annotated syntax tree for the supported Solidity subset.

use super::span::Span;
use primitive_types::U256;

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub pragmas: Vec<PragmaDirective>,
    pub contracts: Vec<ContractDefinition>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Exact,
    Caret,
    Range,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PragmaDirective {
    /// `solidity`, `experimental`, ...
    pub name: String,
    pub constraint_kind: ConstraintKind,
    pub version_text: String,
    pub span: Span,
}

impl PragmaDirective {
    pub fn is_solidity(&self) -> bool {
        self.name == "solidity"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractKind {
    Contract,
    Interface,
    Library,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractDefinition {
    pub name: String,
    pub kind: ContractKind,
    pub bases: Vec<String>,
    pub state_variables: Vec<VariableDeclaration>,
    pub functions: Vec<FunctionDefinition>,
    pub modifiers: Vec<ModifierDefinition>,
    pub events: Vec<EventDefinition>,
    pub structs: Vec<StructDefinition>,
    pub enums: Vec<String>,
    pub span: Span,
}

impl ContractDefinition {
    /// True when some function is declared without a body.
    pub fn is_abstract(&self) -> bool {
        self.kind == ContractKind::Interface || self.functions.iter().any(|f| f.body.is_none())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDefinition {
    pub name: String,
    pub members: Vec<VariableDeclaration>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDefinition {
    pub name: String,
    pub parameters: Vec<VariableDeclaration>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Function,
    Constructor,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
    Default,
}

impl Visibility {
    /// Callable from outside the contract (default visibility is public in 0.4.x).
    pub fn is_externally_callable(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External | Visibility::Default)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutability {
    NonPayable,
    Payable,
    View,
    Pure,
    /// The pre-0.5 `constant` function modifier.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierInvocation {
    pub name: String,
    pub arguments: Vec<Expression>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDefinition {
    /// Empty for the fallback function and for `constructor(...)`.
    pub name: String,
    pub kind: FunctionKind,
    pub parameters: Vec<VariableDeclaration>,
    pub returns: Vec<VariableDeclaration>,
    pub visibility: Visibility,
    pub mutability: Mutability,
    pub is_payable: bool,
    pub modifiers_invoked: Vec<ModifierInvocation>,
    pub body: Option<Block>,
    pub span: Span,
}

impl FunctionDefinition {
    pub fn display_name(&self) -> &str {
        match self.kind {
            FunctionKind::Fallback => "<fallback>",
            FunctionKind::Constructor if self.name.is_empty() => "constructor",
            _ => &self.name,
        }
    }

    /// Canonical parameter type list, e.g. `["address", "uint256"]`.
    pub fn parameter_types(&self) -> Vec<String> {
        self.parameters.iter().map(|p| p.type_name.canonical()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifierDefinition {
    pub name: String,
    pub parameters: Vec<VariableDeclaration>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataLocation {
    Storage,
    Memory,
    Calldata,
    Unspecified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDeclaration {
    pub name: String,
    pub type_name: TypeName,
    pub data_location: DataLocation,
    pub initializer: Option<Expression>,
    pub visibility: Visibility,
    pub is_constant: bool,
    pub indexed: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeName {
    pub kind: TypeKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeKind {
    /// `uint` is stored as `uint256`; `byte` is kept as written.
    Elementary { name: String, bit_width: Option<u16> },
    Array { element: Box<TypeName>, length: Option<Box<Expression>> },
    Mapping { key: Box<TypeName>, value: Box<TypeName> },
    UserDefined(String),
    VarInferred,
}

impl TypeName {
    pub fn elementary(name: &str, span: Span) -> TypeName {
        TypeName {
            kind: elementary_kind(name),
            span,
        }
    }

    pub fn elementary_name(&self) -> Option<&str> {
        match &self.kind {
            TypeKind::Elementary { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn bit_width(&self) -> Option<u16> {
        match &self.kind {
            TypeKind::Elementary { bit_width, .. } => *bit_width,
            _ => None,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self.kind, TypeKind::Array { .. })
    }

    pub fn is_mapping(&self) -> bool {
        matches!(self.kind, TypeKind::Mapping { .. })
    }

    /// Arrays, `bytes` and `string`: the parameter types copied to memory
    /// by public functions.
    pub fn is_dynamic_data(&self) -> bool {
        self.is_array() || matches!(self.elementary_name(), Some("bytes") | Some("string"))
    }

    /// ABI-style canonical spelling used for signature matching.
    pub fn canonical(&self) -> String {
        match &self.kind {
            TypeKind::Elementary { name, .. } => match name.as_str() {
                "byte" => "bytes1".to_string(),
                _ => name.clone(),
            },
            TypeKind::Array { element, length } => {
                let len = length
                    .as_ref()
                    .and_then(|e| e.number_value())
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                format!("{}[{}]", element.canonical(), len)
            }
            TypeKind::Mapping { key, value } => format!("mapping({}=>{})", key.canonical(), value.canonical()),
            TypeKind::UserDefined(n) => n.clone(),
            TypeKind::VarInferred => "var".to_string(),
        }
    }
}

/// Builds the normalized elementary kind for a type keyword.
pub fn elementary_kind(name: &str) -> TypeKind {
    let (name, bit_width) = match name {
        "uint" => ("uint256".to_string(), Some(256)),
        "int" => ("int256".to_string(), Some(256)),
        other => {
            let width = other
                .strip_prefix("uint")
                .or_else(|| other.strip_prefix("int"))
                .and_then(|w| w.parse::<u16>().ok());
            (other.to_string(), width)
        }
    };
    TypeKind::Elementary { name, bit_width }
}

/// True for names the parser treats as elementary type keywords.
pub fn is_elementary_type_name(name: &str) -> bool {
    match name {
        "address" | "bool" | "string" | "bytes" | "byte" | "uint" | "int" | "fixed" | "ufixed" => true,
        _ => {
            if let Some(w) = name.strip_prefix("uint").or_else(|| name.strip_prefix("int")) {
                w.parse::<u16>().is_ok_and(|w| w % 8 == 0 && (8..=256).contains(&w))
            } else if let Some(w) = name.strip_prefix("bytes") {
                w.parse::<u16>().is_ok_and(|w| (1..=32).contains(&w))
            } else {
                false
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub statements: Vec<Statement>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    Block(Block),
    If {
        condition: Expression,
        then_branch: Box<Statement>,
        else_branch: Option<Box<Statement>>,
    },
    For {
        init: Option<Box<Statement>>,
        condition: Option<Expression>,
        update: Option<Expression>,
        body: Box<Statement>,
    },
    While {
        condition: Expression,
        body: Box<Statement>,
    },
    DoWhile {
        body: Box<Statement>,
        condition: Expression,
    },
    Expression(Expression),
    Return(Option<Expression>),
    /// `var (a, b) = ...` declares several variables; missing tuple slots are `None`.
    VariableDeclaration {
        declarations: Vec<Option<VariableDeclaration>>,
        initializer: Option<Expression>,
    },
    Emit(Expression),
    Throw,
    Break,
    Continue,
    /// The `_;` placeholder inside a modifier body.
    Placeholder,
    /// Inline assembly, skipped unparsed.
    Assembly,
    /// Tokens skipped during error recovery.
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub kind: ExpressionKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpressionKind {
    Identifier(String),
    MemberAccess {
        base: Box<Expression>,
        member: String,
    },
    IndexAccess {
        base: Box<Expression>,
        index: Option<Box<Expression>>,
    },
    Call {
        callee: Box<Expression>,
        arguments: Vec<Expression>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expression>,
    },
    Assignment {
        op: AssignOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Conditional {
        condition: Box<Expression>,
        then_value: Box<Expression>,
        else_value: Box<Expression>,
    },
    Tuple(Vec<Option<Expression>>),
    New(TypeName),
    /// An elementary type used as an expression, e.g. the callee in `uint(x)`.
    ElementaryType(TypeName),
    Literal(Literal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Exp,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    BitNot,
    Neg,
    PreIncrement,
    PreDecrement,
    PostIncrement,
    PostDecrement,
    Delete,
}

impl UnaryOp {
    pub fn mutates(self) -> bool {
        matches!(
            self,
            UnaryOp::PreIncrement
                | UnaryOp::PreDecrement
                | UnaryOp::PostIncrement
                | UnaryOp::PostDecrement
                | UnaryOp::Delete
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Assign,
    Compound(BinaryOp),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub kind: LiteralKind,
    /// Exact source text, including any unit suffix.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiteralKind {
    /// `value` is `None` when the literal is fractional after applying the
    /// unit or does not fit in 256 bits.
    Number { value: Option<U256>, unit: Option<String> },
    /// A 40-digit `0x` literal.
    Address,
    /// Any other `0x` number or `hex"..."` string.
    Hex { value: Option<U256> },
    String,
    Bool(bool),
}

impl Expression {
    pub fn number_value(&self) -> Option<U256> {
        match &self.kind {
            ExpressionKind::Literal(Literal {
                kind: LiteralKind::Number { value, .. } | LiteralKind::Hex { value },
                ..
            }) => *value,
            _ => None,
        }
    }

    pub fn as_identifier(&self) -> Option<&str> {
        match &self.kind {
            ExpressionKind::Identifier(n) => Some(n),
            _ => None,
        }
    }

    /// Dotted path for identifier/member chains, e.g. `block.timestamp`.
    pub fn member_path(&self) -> Option<String> {
        match &self.kind {
            ExpressionKind::Identifier(n) => Some(n.clone()),
            ExpressionKind::MemberAccess { base, member } => {
                base.member_path().map(|b| format!("{b}.{member}"))
            }
            _ => None,
        }
    }

    /// Identifier at the root of a member/index chain (`a` in `a.b[c].d`).
    pub fn root_identifier(&self) -> Option<&str> {
        match &self.kind {
            ExpressionKind::Identifier(n) => Some(n),
            ExpressionKind::MemberAccess { base, .. } | ExpressionKind::IndexAccess { base, .. } => {
                base.root_identifier()
            }
            _ => None,
        }
    }

    /// Visits this expression and every sub-expression in source order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expression)) {
        f(self);
        match &self.kind {
            ExpressionKind::MemberAccess { base, .. } => base.walk(f),
            ExpressionKind::IndexAccess { base, index } => {
                base.walk(f);
                if let Some(i) = index {
                    i.walk(f);
                }
            }
            ExpressionKind::Call { callee, arguments } => {
                callee.walk(f);
                for a in arguments {
                    a.walk(f);
                }
            }
            ExpressionKind::Binary { lhs, rhs, .. } | ExpressionKind::Assignment { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExpressionKind::Unary { operand, .. } => operand.walk(f),
            ExpressionKind::Conditional {
                condition,
                then_value,
                else_value,
            } => {
                condition.walk(f);
                then_value.walk(f);
                else_value.walk(f);
            }
            ExpressionKind::Tuple(items) => {
                for e in items.iter().flatten() {
                    e.walk(f);
                }
            }
            ExpressionKind::Identifier(_)
            | ExpressionKind::New(_)
            | ExpressionKind::ElementaryType(_)
            | ExpressionKind::Literal(_) => {}
        }
    }

    pub fn any(&self, pred: &mut dyn FnMut(&Expression) -> bool) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if !found && pred(e) {
                found = true;
            }
        });
        found
    }
}

impl Statement {
    /// Visits this statement and all nested statements (pre-order).
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Statement)) {
        f(self);
        match &self.kind {
            StatementKind::Block(b) => b.walk(f),
            StatementKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            StatementKind::For { init, body, .. } => {
                if let Some(i) = init {
                    i.walk(f);
                }
                body.walk(f);
            }
            StatementKind::While { body, .. } | StatementKind::DoWhile { body, .. } => body.walk(f),
            _ => {}
        }
    }

    /// Expressions that belong directly to this statement (not to nested statements).
    pub fn own_expressions(&self) -> Vec<&Expression> {
        match &self.kind {
            StatementKind::If { condition, .. }
            | StatementKind::While { condition, .. }
            | StatementKind::DoWhile { condition, .. } => vec![condition],
            StatementKind::For { condition, update, .. } => condition.iter().chain(update.iter()).collect(),
            StatementKind::Expression(e) | StatementKind::Emit(e) => vec![e],
            StatementKind::Return(e) => e.iter().collect(),
            StatementKind::VariableDeclaration {
                declarations,
                initializer,
            } => {
                let mut v: Vec<&Expression> = declarations
                    .iter()
                    .flatten()
                    .filter_map(|d| array_length_expr(&d.type_name))
                    .collect();
                v.extend(initializer.iter());
                v
            }
            _ => Vec::new(),
        }
    }
}

fn array_length_expr(t: &TypeName) -> Option<&Expression> {
    match &t.kind {
        TypeKind::Array { length, .. } => length.as_deref(),
        _ => None,
    }
}

impl Block {
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Statement)) {
        for s in &self.statements {
            s.walk(f);
        }
    }

    /// Every expression in the block, including nested statements, each
    /// visited with all of its sub-expressions.
    pub fn walk_expressions<'a>(&'a self, f: &mut dyn FnMut(&'a Expression)) {
        self.walk(&mut |s| {
            for e in s.own_expressions() {
                e.walk(f);
            }
        });
    }
}
