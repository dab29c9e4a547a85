//! Configuration, suite runner and plot-data emission.

pub mod config;
pub mod ledger;
pub mod plot;
pub mod suite;

pub use config::{parse_config, serialize, ExperimentConfig};
pub use ledger::{Ledger, LedgerRow, Status};
pub use plot::{emit_plot_data, PlotInput, PlotKind};
pub use suite::{evaluate, run_suite, SuiteOutcome};
