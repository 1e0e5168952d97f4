//! Simulation plans, the Monte-Carlo runner, report rendering and the CLI.

pub mod cli;
pub mod plan;
pub mod report;
pub mod simulate;

pub use plan::{SimulationPlan, SourceFamily, PLAN_SCHEMA};
pub use report::{emit_report, OutputFormat, Report};
pub use simulate::{run_simulation, CellResult, GridResult};
