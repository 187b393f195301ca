//! Figure reproductions and long-run energy studies on the harmonic
//! oscillator.

mod run;
mod scenario;

pub use run::{
    long_run_report, run_scenario, run_scenarios, Abort, Behavior, ExperimentError, LongRunReport, RunOptions,
    RunSummary, Thresholds, MIN_LONG_RUN_STEPS,
};
pub use scenario::{
    builtin_scenario, builtin_scenarios, figure_scenarios, Outputs, Scenario, ScenarioError, SchemeChoice,
    SystemChoice,
};
