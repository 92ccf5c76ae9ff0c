//! Scenario configuration, the built-in figure reproductions, the sweep
//! runner and CSV output.

pub mod config;
pub mod csv;
pub mod run;
pub mod scenario;

pub use config::{Kind, OutputConfig, Pipeline, Scenario, SolverConfig, SweepConfig, SystemConfig};
pub use csv::{emit_csv, format_sig, render_csv};
pub use run::{fit_rabi_frequency, run, Row, SweepResult};
pub use scenario::{builtin, Builtin, BUILTINS};
