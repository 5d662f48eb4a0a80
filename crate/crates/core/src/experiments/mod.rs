//! Config-driven batch runs and their CSV output.

pub mod config;
pub mod files;
pub mod suite;

pub use config::{Construction, ExperimentConfig, OracleKind, PartitionSpec};
pub use files::{
    format_region, format_string, lattice_header, parse_region, parse_string, read_region_file, read_string_file,
};
pub use suite::{
    parse_ratio, ratio_symbol, run_oracle_suite, run_theorem_suite, OracleRow, OracleSuite, ResultRow, TheoremSuite,
    WORKERS_ENV,
};
