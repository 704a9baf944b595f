//! Experiment harness: configuration, seeded Monte-Carlo runs, result
//! tables and persistence.

mod config;
mod results;
mod runner;
mod seeds;

pub use config::{DetectorKind, SimConfig};
pub use results::{write_results, ResultTable, RunMeta, TrialRecord, CSV_HEADER};
pub use runner::{run_ber_sweep, run_iteration_profile, run_pruning_profile};
pub use seeds::{frame_rng, StreamRole};
