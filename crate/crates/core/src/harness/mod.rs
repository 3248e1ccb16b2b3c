//! Configuration, regime classification, hypothesis checks and experiment
//! orchestration with CSV/SVG reports.

pub mod config;
pub mod hypothesis;
pub mod regime;
pub mod report;
mod run;

pub use config::{ExperimentConfig, ExperimentKind, Thresholds};
pub use hypothesis::hypothesis_check;
pub use regime::{classify_regime, regime_study, Regime, RegimeStudy};
pub use report::{Check, Status};
pub use run::{anchor, run_experiment, RunSummary};
