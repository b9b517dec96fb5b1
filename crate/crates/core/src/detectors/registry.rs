use crate::report::{Category, ImpactLevel};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frontend {
    Source,
    Bytecode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DetectorDescriptor {
    pub code: &'static str,
    pub id: &'static str,
    pub name: &'static str,
    pub category: Category,
    pub impact: ImpactLevel,
    pub frontends: &'static [Frontend],
    pub advice: &'static str,
}

impl Frontend {
    pub fn as_str(self) -> &'static str {
        match self {
            Frontend::Source => "source",
            Frontend::Bytecode => "bytecode",
        }
    }
}

impl DetectorDescriptor {
    pub fn supports(&self, f: Frontend) -> bool {
        self.frontends.contains(&f)
    }
}

const SRC: &[Frontend] = &[Frontend::Source];
const BOTH: &[Frontend] = &[Frontend::Source, Frontend::Bytecode];

use Category::*;
use ImpactLevel::*;

static REGISTRY: [DetectorDescriptor; 20] = [
    DetectorDescriptor {
        code: "D01",
        id: "unchecked-external-calls",
        name: "Unchecked External Calls",
        category: Security,
        impact: IP3,
        frontends: SRC,
        advice: "Prefer address.transfer() over send() and call.value(), or check the returned status of send and call.",
    },
    DetectorDescriptor {
        code: "D02",
        id: "dos-under-external-influence",
        name: "DoS Under External Influence",
        category: Security,
        impact: IP2,
        frontends: SRC,
        advice: "Do not throw inside a loop body; return a status instead, e.g. `if (a.send(v) == false) break;` rather than `a.transfer(v)`.",
    },
    DetectorDescriptor {
        code: "D03",
        id: "strict-balance-equality",
        name: "Strict Balance Equality",
        category: Security,
        impact: IP2,
        frontends: BOTH,
        advice: "Compare the balance against a range instead of using `==`, since anyone can force Ether into the contract.",
    },
    DetectorDescriptor {
        code: "D04",
        id: "unmatched-type-assignment",
        name: "Unmatched Type Assignment",
        category: Security,
        impact: IP2,
        frontends: SRC,
        advice: "Declare loop counters as uint or uint256 when the iteration count is not known to be small.",
    },
    DetectorDescriptor {
        code: "D05",
        id: "transaction-state-dependency",
        name: "Transaction State Dependency",
        category: Security,
        impact: IP1,
        frontends: SRC,
        advice: "Check permissions with msg.sender instead of tx.origin.",
    },
    DetectorDescriptor {
        code: "D06",
        id: "block-info-dependency",
        name: "Block Info Dependency",
        category: Security,
        impact: IP3,
        frontends: SRC,
        advice: "Do not derive randomness or control flow from block data that miners can influence; use inputs no single party controls, e.g. commit-reveal over user-supplied values.",
    },
    DetectorDescriptor {
        code: "D07",
        id: "reentrancy",
        name: "Reentrancy",
        category: Security,
        impact: IP1,
        frontends: SRC,
        advice: "Send Ether with send() or transfer(), whose 2300 gas stipend prevents re-entry, or update state before the external call.",
    },
    DetectorDescriptor {
        code: "D08",
        id: "nested-call",
        name: "Nested Call",
        category: Security,
        impact: IP2,
        frontends: BOTH,
        advice: "Estimate the maximum number of iterations the contract can afford and bound the loop accordingly.",
    },
    DetectorDescriptor {
        code: "D09",
        id: "misleading-data-location",
        name: "Misleading Data Location",
        category: Security,
        impact: IP2,
        frontends: SRC,
        advice: "State the data location (memory or storage) of struct, mapping and array locals explicitly.",
    },
    DetectorDescriptor {
        code: "D10",
        id: "unmatched-erc20",
        name: "Unmatched ERC-20 Standard",
        category: Availability,
        impact: IP4,
        frontends: BOTH,
        advice: "Follow the ERC-20 standard exactly: all mandatory functions with their return types and the Transfer and Approval events.",
    },
    DetectorDescriptor {
        code: "D11",
        id: "missing-reminder",
        name: "Missing Reminder",
        category: Availability,
        impact: IP4,
        frontends: SRC,
        advice: "Emit an event from functions that interact with the outside, such as receiving Ether.",
    },
    DetectorDescriptor {
        code: "D12",
        id: "missing-return-statement",
        name: "Missing Return Statement",
        category: Availability,
        impact: IP4,
        frontends: SRC,
        advice: "Add a return statement on every path of a function that declares return values.",
    },
    DetectorDescriptor {
        code: "D13",
        id: "greedy-contract",
        name: "Greedy Contract",
        category: Availability,
        impact: IP3,
        frontends: SRC,
        advice: "Add a withdraw function when the contract can receive Ether.",
    },
    DetectorDescriptor {
        code: "D14",
        id: "unused-statement",
        name: "Unused Statement",
        category: Performance,
        impact: IP5,
        frontends: SRC,
        advice: "Remove unused parameters, variables and assignments.",
    },
    DetectorDescriptor {
        code: "D15",
        id: "high-gas-function-type",
        name: "High Gas Consumption Function Type",
        category: Performance,
        impact: IP5,
        frontends: SRC,
        advice: "Declare the function external instead of public if it is only called from outside.",
    },
    DetectorDescriptor {
        code: "D16",
        id: "high-gas-data-type",
        name: "High Gas Consumption Data Type",
        category: Performance,
        impact: IP5,
        frontends: SRC,
        advice: "Use bytes instead of byte[].",
    },
    DetectorDescriptor {
        code: "D17",
        id: "hard-code-address",
        name: "Hard Code Address",
        category: Maintainability,
        impact: IP3,
        frontends: BOTH,
        advice: "Pass addresses in as parameters or settable state instead of hard coding them.",
    },
    DetectorDescriptor {
        code: "D18",
        id: "missing-interrupter",
        name: "Missing Interrupter",
        category: Maintainability,
        impact: IP4,
        frontends: SRC,
        advice: "Add an owner-only interrupter, e.g. a selfdestruct function or a circuit breaker, so funds can be rescued when an attack happens.",
    },
    DetectorDescriptor {
        code: "D19",
        id: "deprecated-apis",
        name: "Deprecated APIs",
        category: Reusability,
        impact: IP5,
        frontends: SRC,
        advice: "Use the current APIs: revert() for throw, selfdestruct for suicide, keccak256 for sha3, delegatecall for callcode, gasleft() for msg.gas, view for constant.",
    },
    DetectorDescriptor {
        code: "D20",
        id: "unspecified-compiler-version",
        name: "Unspecified Compiler Version",
        category: Reusability,
        impact: IP5,
        frontends: SRC,
        advice: "Pin the compiler version, e.g. `pragma solidity 0.4.25;`.",
    },
];

pub fn registry() -> &'static [DetectorDescriptor] {
    &REGISTRY
}

/// Looks a detector up by kebab-case id or by its `Dnn` code.
pub fn descriptor(key: &str) -> Option<&'static DetectorDescriptor> {
    let k = key.trim();
    REGISTRY
        .iter()
        .find(|d| d.id.eq_ignore_ascii_case(k) || d.code.eq_ignore_ascii_case(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ids_and_codes_are_unique() {
        let ids: HashSet<_> = registry().iter().map(|d| d.id).collect();
        let codes: HashSet<_> = registry().iter().map(|d| d.code).collect();
        assert_eq!(ids.len(), 20);
        assert_eq!(codes.len(), 20);
        assert_eq!(descriptor("d07").unwrap().id, "reentrancy");
        assert_eq!(descriptor("nested-call").unwrap().code, "D08");
        assert!(descriptor("nope").is_none());
        assert_eq!(registry().iter().filter(|d| d.supports(Frontend::Bytecode)).count(), 4);
    }
}
