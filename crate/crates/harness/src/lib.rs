//! Evaluation harness: runs prompt modes against models over the bundled
//! tasks and renders the result tables.

pub mod config;
pub mod demo;
pub mod eval;
pub mod report;
pub mod run;

pub use config::{ConfigError, EvalConfig, EvalPlan, ExampleSource, ModelConfig, Mode, SyntaxMode};
pub use eval::{run_eval, CellResult, EvalError, Report};
pub use report::{percent, render_report, write_report, ReportFormat};
