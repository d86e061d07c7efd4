//! Declarative experiments over the `qbhardy` toolkit.
//!
//! A scenario is a JSON object naming a `kind` and its parameters. `run_scenario` validates it,
//! runs the computation and returns a machine-readable report.

pub mod config;
pub mod engine;
pub mod error;
pub mod report;

pub use config::{Expectation, ScenarioConfig, ScenarioKind, SuiteFile};
pub use engine::{run_scenario, run_suite};
pub use error::HarnessError;
pub use report::{ScenarioReport, Status, SuiteReport};
