//! `var` inference and a light static typing of expressions.

use crate::source::ast::*;
use crate::source::Span;
use primitive_types::U256;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("`var` declaration has no initializer")]
    MissingInitializer,
    #[error("literal does not fit in 256 bits")]
    LiteralTooLarge,
    #[error("cannot determine the type of the initializer")]
    Unknown,
}

/// Lookups the typer needs from its surroundings.
pub trait TypeEnv {
    fn variable_type(&self, name: &str) -> Option<TypeName>;

    fn member_type(&self, _base: &TypeName, _member: &str) -> Option<TypeName> {
        None
    }

    fn function_return_type(&self, _name: &str) -> Option<TypeName> {
        None
    }
}

/// An environment with no declarations.
pub struct EmptyEnv;

impl TypeEnv for EmptyEnv {
    fn variable_type(&self, _name: &str) -> Option<TypeName> {
        None
    }
}

fn bits(v: U256) -> u32 {
    256 - v.leading_zeros()
}

fn round_up8(n: u32) -> u16 {
    (n.div_ceil(8) * 8).max(8) as u16
}

/// Smallest `uintN` that holds `v`.
pub fn smallest_uint(v: U256) -> u16 {
    round_up8(bits(v))
}

/// Smallest `intN` that holds `-v`.
pub fn smallest_int_for_negative(v: U256) -> Option<u16> {
    if v.is_zero() {
        return Some(8);
    }
    let n = round_up8(bits(v - 1) + 1);
    (n <= 256).then_some(n)
}

fn elementary(name: &str, span: Span) -> TypeName {
    TypeName::elementary(name, span)
}

fn literal_type(lit: &Literal, span: Span, negative: bool) -> Result<TypeName, InferError> {
    match &lit.kind {
        LiteralKind::Number { value, .. } | LiteralKind::Hex { value } => {
            let v = value.ok_or(InferError::LiteralTooLarge)?;
            if negative {
                let n = smallest_int_for_negative(v).ok_or(InferError::LiteralTooLarge)?;
                Ok(elementary(&format!("int{n}"), span))
            } else {
                Ok(elementary(&format!("uint{}", smallest_uint(v)), span))
            }
        }
        LiteralKind::Address => Ok(elementary("address", span)),
        LiteralKind::String => Ok(elementary("string", span)),
        LiteralKind::Bool(_) => Ok(elementary("bool", span)),
    }
}

/// Type given to `var x = initializer;`.
pub fn infer_var_type(initializer: Option<&Expression>, env: &dyn TypeEnv) -> Result<TypeName, InferError> {
    let init = initializer.ok_or(InferError::MissingInitializer)?;
    match &init.kind {
        ExpressionKind::Literal(lit) => literal_type(lit, init.span, false),
        ExpressionKind::Unary {
            op: UnaryOp::Neg,
            operand,
        } => match &operand.kind {
            ExpressionKind::Literal(lit) => literal_type(lit, init.span, true),
            _ => type_of(init, env).ok_or(InferError::Unknown),
        },
        _ => type_of(init, env).ok_or(InferError::Unknown),
    }
}

fn builtin_member_type(path: &str) -> Option<&'static str> {
    Some(match path {
        "msg.sender" | "tx.origin" | "block.coinbase" => "address",
        "msg.value" | "msg.gas" | "block.number" | "block.timestamp" | "block.difficulty" | "block.gaslimit"
        | "tx.gasprice" | "now" => "uint256",
        "msg.data" => "bytes",
        "msg.sig" => "bytes4",
        _ => return None,
    })
}

/// Static type of an expression where it can be determined cheaply.
pub fn type_of(e: &Expression, env: &dyn TypeEnv) -> Option<TypeName> {
    let span = e.span;
    match &e.kind {
        ExpressionKind::Identifier(name) => {
            if name == "now" {
                return Some(elementary("uint256", span));
            }
            env.variable_type(name)
        }
        ExpressionKind::Literal(lit) => literal_type(lit, span, false).ok(),
        ExpressionKind::MemberAccess { base, member } => {
            if let Some(t) = e.member_path().as_deref().and_then(builtin_member_type) {
                return Some(elementary(t, span));
            }
            match member.as_str() {
                "length" | "balance" => return Some(elementary("uint256", span)),
                _ => {}
            }
            let bt = type_of(base, env)?;
            env.member_type(&bt, member)
        }
        ExpressionKind::IndexAccess { base, .. } => match type_of(base, env)?.kind {
            TypeKind::Array { element, .. } => Some(*element),
            TypeKind::Mapping { value, .. } => Some(*value),
            TypeKind::Elementary { name, .. } if name == "bytes" || name.starts_with("bytes") => {
                Some(elementary("bytes1", span))
            }
            _ => None,
        },
        ExpressionKind::Call { callee, .. } => match &callee.kind {
            ExpressionKind::ElementaryType(t) => Some(t.clone()),
            ExpressionKind::Identifier(name) => match name.as_str() {
                "keccak256" | "sha3" | "sha256" | "blockhash" => Some(elementary("bytes32", span)),
                "ripemd160" => Some(elementary("bytes20", span)),
                "ecrecover" => Some(elementary("address", span)),
                "addmod" | "mulmod" | "gasleft" => Some(elementary("uint256", span)),
                _ => env.function_return_type(name),
            },
            ExpressionKind::MemberAccess { .. } if callee.member_path().as_deref() == Some("block.blockhash") => {
                Some(elementary("bytes32", span))
            }
            _ => None,
        },
        ExpressionKind::Binary { op, lhs, rhs } => {
            if op.is_comparison() || matches!(op, BinaryOp::And | BinaryOp::Or) {
                return Some(elementary("bool", span));
            }
            let l = type_of(lhs, env);
            let r = type_of(rhs, env);
            let lit = |x: &Expression| matches!(x.kind, ExpressionKind::Literal(_));
            match (l, r) {
                (Some(a), Some(b)) => {
                    if lit(lhs) {
                        Some(b)
                    } else if lit(rhs) {
                        Some(a)
                    } else if b.bit_width() > a.bit_width() {
                        Some(b)
                    } else {
                        Some(a)
                    }
                }
                (a, b) => a.or(b),
            }
        }
        ExpressionKind::Unary { op, operand } => match op {
            UnaryOp::Not => Some(elementary("bool", span)),
            _ => type_of(operand, env),
        },
        ExpressionKind::Conditional { then_value, .. } => type_of(then_value, env),
        ExpressionKind::Assignment { lhs, .. } => type_of(lhs, env),
        ExpressionKind::Tuple(items) if items.len() == 1 => items[0].as_ref().and_then(|x| type_of(x, env)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{parse, tokenize, FileId};
    use num_bigint::BigUint;

    fn init_of(src: &str) -> Expression {
        let code = format!("contract C {{ function f() {{ var x = {src}; }} }}");
        let u = parse(&tokenize(&code, FileId(0)).unwrap()).unit;
        let body = u.contracts[0].functions[0].body.as_ref().unwrap();
        match &body.statements[0].kind {
            StatementKind::VariableDeclaration { initializer, .. } => initializer.clone().unwrap(),
            other => panic!("{other:?}"),
        }
    }

    fn infer(src: &str) -> String {
        infer_var_type(Some(&init_of(src)), &EmptyEnv).unwrap().canonical()
    }

    #[test]
    fn literal_widths() {
        assert_eq!(infer("0"), "uint8");
        assert_eq!(infer("255"), "uint8");
        assert_eq!(infer("256"), "uint16");
        assert_eq!(infer("-1"), "int8");
        assert_eq!(infer("-128"), "int8");
        assert_eq!(infer("-129"), "int16");
        assert_eq!(infer("true"), "bool");
        assert_eq!(infer("1 ether"), "uint64");
        assert_eq!(infer("msg.sender"), "address");
        assert_eq!(infer("uint32(5)"), "uint32");
    }

    #[test]
    fn missing_initializer() {
        assert_eq!(infer_var_type(None, &EmptyEnv), Err(InferError::MissingInitializer));
    }

    /// Width of the narrowest unsigned type, computed with arbitrary precision.
    fn oracle_width(v: &BigUint) -> u64 {
        let mut n = 8u64;
        while v >= &(BigUint::from(1u8) << n) {
            n += 8;
        }
        n
    }

    proptest::proptest! {
        #[test]
        fn literal_band_maps_to_next_width(n8 in 1u32..32, frac in proptest::num::u64::ANY) {
            // literal in [2^N, 2^(N+8)) with N = 8 * n8
            let n = n8 * 8;
            let lo = BigUint::from(1u8) << n;
            let span = (BigUint::from(1u8) << (n + 8)) - &lo;
            let v = &lo + (BigUint::from(frac) * &span) / (BigUint::from(u64::MAX) + 1u8);
            let text = v.to_str_radix(10);
            proptest::prop_assert_eq!(infer(&text), format!("uint{}", n + 8));
            proptest::prop_assert_eq!(oracle_width(&v), u64::from(n + 8));
        }
    }
}
