//! EIP-55 mixed-case address checksums.

use super::keccak::keccak256;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddressLiteralError {
    #[error("address literal must have 40 hex digits, found {0}")]
    WrongLength(usize),
    #[error("address literal contains non-hex character {0:?}")]
    NotHex(char),
}

fn hex_digits(literal: &str) -> Result<&str, AddressLiteralError> {
    let digits = literal
        .strip_prefix("0x")
        .or_else(|| literal.strip_prefix("0X"))
        .unwrap_or(literal);
    if let Some(c) = digits.chars().find(|c| !c.is_ascii_hexdigit()) {
        return Err(AddressLiteralError::NotHex(c));
    }
    if digits.len() != 40 {
        return Err(AddressLiteralError::WrongLength(digits.len()));
    }
    Ok(digits)
}

/// Canonical checksummed form, `0x`-prefixed.
pub fn eip55_checksum(address_hex: &str) -> Result<String, AddressLiteralError> {
    let lower = hex_digits(address_hex)?.to_ascii_lowercase();
    let hash = keccak256(lower.as_bytes());
    let mut out = String::with_capacity(42);
    out.push_str("0x");
    for (i, c) in lower.chars().enumerate() {
        let nibble = if i % 2 == 0 { hash[i / 2] >> 4 } else { hash[i / 2] & 0x0f };
        if c.is_ascii_alphabetic() && nibble >= 8 {
            out.push(c.to_ascii_uppercase());
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

/// A literal is valid when it equals its checksummed form or carries no
/// case information (all lowercase or all uppercase).
pub fn eip55_is_valid(literal: &str) -> Result<bool, AddressLiteralError> {
    let digits = hex_digits(literal)?;
    let has_lower = digits.bytes().any(|b| b.is_ascii_lowercase());
    let has_upper = digits.bytes().any(|b| b.is_ascii_uppercase());
    if !(has_lower && has_upper) {
        return Ok(true);
    }
    Ok(eip55_checksum(digits)?[2..] == *digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference vectors from the EIP-55 text
    const VECTORS: &[&str] = &[
        "0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed",
        "0xfB6916095ca1df60bB79Ce92cE3Ea74c37c5d359",
        "0xdbF03B407c01E7cD3CBea99509d93f8DDDC8C6FB",
        "0xD1220A0cf47c7B9Be7A2E6BA89F429762e7b9aDb",
    ];

    #[test]
    fn reference_vectors() {
        for v in VECTORS {
            assert_eq!(eip55_checksum(&v.to_lowercase()).unwrap(), *v);
            assert!(eip55_is_valid(v).unwrap());
        }
    }

    #[test]
    fn case_agnostic_literals_are_valid() {
        assert!(eip55_is_valid(&VECTORS[0].to_lowercase()).unwrap());
        assert!(eip55_is_valid(&format!("0x{}", VECTORS[0][2..].to_uppercase())).unwrap());
    }

    #[test]
    fn malformed_literals() {
        assert_eq!(eip55_is_valid("0x1234"), Err(AddressLiteralError::WrongLength(4)));
        assert!(matches!(eip55_checksum("0xzz"), Err(AddressLiteralError::NotHex('z'))));
        assert!(eip55_checksum(&"a".repeat(39)).is_err());
    }

    #[test]
    fn idempotent() {
        let c = eip55_checksum(VECTORS[1]).unwrap();
        assert_eq!(eip55_checksum(&c).unwrap(), c);
    }
}
