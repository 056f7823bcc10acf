//! Experiment orchestration: config files, sweep execution, result emission.
//!
//! A sweep runs a grid of cells (heterogeneity level x attack x defense),
//! each cell `num_runs` times with per-run seeds derived from the master
//! seed, and aggregates final-round metrics into one result row per cell.

pub mod config;
pub mod emit;
pub mod sweep;

pub use config::{
    parse_config, parse_config_str, ArchKind, AttackConfig, DatasetKind, DefenseConfig,
    ExperimentConfig,
};
pub use emit::{
    read_details_csv, read_summary_csv, render_details_csv, render_markdown, render_summary_csv,
    write_details_csv, write_summary_csv,
};
pub use sweep::{
    build_run_datasets, config_cells, load_data, run_seed, run_sweep, table_cells, CellFailure,
    CellSpec, DetailRow, ResultRow, SweepData, SweepOutput, TableKind,
};

pub use crate::seeds::derive_seed;
