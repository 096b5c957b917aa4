//! Library surface of the scenario runner, shared by the `coopcache`
//! binary and the test suites.

pub mod report;
pub mod scenario;
pub mod trace_out;

pub use report::{compare_report, row_from_metrics, Report, ReportRow, CSV_HEADER};
pub use scenario::{
    expand_sweep, parse_scenario, run_scenario, RunOptions, ScenarioError, ScenarioFile,
};
pub use trace_out::{render_event, render_events};
