//! Configuration, seeding, parallel Monte Carlo and CSV output for the
//! command-line experiments.

pub mod config;
pub mod experiments;
pub mod table;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run, RunOutcome};
pub use table::{Cell, Table};
