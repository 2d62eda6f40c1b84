//! Configuration, scenario driver, reports and plot data.

pub mod config;
pub mod invariants;
pub mod plot;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::{load_config, ConfigIssue, IssueKind, ScenarioConfig};
pub use invariants::{InvariantLimits, InvariantMonitor, Violation};
pub use plot::{extract_plot_series, write_figure_series, Series};
pub use report::{audit, compare, reduction_percent, run_many, Comparison, Reduction, RunReport};
pub use runner::{run_scenario, workbench_height, EventRows, Phase, RunOptions, RunOutput};
pub use presets::{preset, preset_text, PRESETS};
