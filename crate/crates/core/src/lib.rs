pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod detectors;
pub mod evm;
pub mod report;
pub mod semantic;
pub mod source;
