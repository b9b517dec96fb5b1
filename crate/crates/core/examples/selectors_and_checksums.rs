//! Function selectors of the ERC-20 interface and EIP-55 address checks.

use defectscan::evm::{eip55_checksum, eip55_is_valid, selector};

fn main() {
    for sig in [
        "totalSupply()",
        "balanceOf(address)",
        "transfer(address,uint256)",
        "transferFrom(address,address,uint256)",
        "approve(address,uint256)",
        "allowance(address,address)",
    ] {
        println!("{} {sig}", hex::encode(selector(sig)));
    }
    let canonical = eip55_checksum("0xdcad8441b84bf5bc84b890668966c91f80d1d3af").unwrap();
    println!("{canonical} valid={:?}", eip55_is_valid(&canonical));
    let typo = format!("{}D", &canonical[..41]);
    println!("{typo} valid={:?}", eip55_is_valid(&typo));
}
