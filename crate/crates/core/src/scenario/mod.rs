//! Configuration-driven scenarios: parsing, execution, artifacts and studies.

mod bundled;
mod config;
mod converge;
mod fieldio;
mod plot;
mod run;

pub use bundled::{
    audit_signs, audit_suite, bundled, bundled_names, bundled_source, AUDIT_CSV_HEADER,
    AUDIT_SCENARIOS, AUDIT_STEPS,
};
pub use config::{
    CheckSpec, CoreName, DtSetting, FieldOutput, GridSection, InitialSection, KernelName,
    LighthillSection, LinearModeName, LinearSection, NormName, OutputSection, PerAxis,
    PhysicsSection, PotentialFormName, PotentialName, PotentialSection, RunSection, ScenarioConfig,
};
pub use converge::{
    convergence_report, fit_order, roundoff_floor, ConvergenceReport, ConvergenceRow, FitLabel,
    OrderFit, CONVERGENCE_CSV_HEADER, FIT_CSV_HEADER, FLOOR_FACTOR, REL_FLOOR,
};
pub use fieldio::{FieldFile, FieldFileHeader, FieldKind, MAGIC};
pub use plot::{emit_plot_data, gnuplot_script, plot_files_for, PlotFile, PlotKind};
pub use run::{
    evaluate_scenario, exit_code_for, initial_state, resolve_dt, run_scenario, scenario_trajectory,
    CheckOutcome, RunSummary, ScenarioResult,
};
