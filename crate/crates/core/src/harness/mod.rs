//! Convergence experiments: configuration, rate fitting, independent oracles,
//! report rendering and the acceptance suite.

pub mod config;
pub mod fit;
pub mod oracles;
pub mod run;
pub mod suite;
pub mod tolerances;

pub use config::{Expectation, ExperimentConfig, Quantity, QuantitySpec};
pub use fit::{fit_rate, FitOutcome};
pub use run::{
    render_csv, rerender, run_experiment, summarize, write_run, ConvergenceReport, RunOptions,
    Summary,
};
pub use suite::{criteria, run_all, CriterionOutcome};
