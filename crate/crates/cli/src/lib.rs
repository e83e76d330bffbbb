//! Command-line front end for `singvec`: instance generation, MatrixMarket
//! I/O, single solves, benchmark campaigns and the invariant suite.

pub mod bench;
pub mod error;
pub mod generate;
pub mod matrix_market;
pub mod run_config;
pub mod solve_cmd;
pub mod verify;

pub use error::{CliError, CliResult};
