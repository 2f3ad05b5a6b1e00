//! Scenario loading, simulation assembly, metrics and experiment runs.

pub mod bench;
pub mod build;
pub mod experiment;
pub mod metrics;
pub mod scenario;
pub mod suite;

pub use build::{build, BuildError};
pub use experiment::{run_experiment, simulate, Run, Summary};
pub use scenario::{load_scenario, load_value, Scenario};
