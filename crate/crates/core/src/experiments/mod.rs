//! Convergence studies: configuration, the benchmark problems, reference
//! solutions, EOC tables and CSV persistence.

mod config;
mod ode;
mod report;
mod study;

pub use config::{
    exact_advection, matched_recon, matched_stepper, FluxConfig, InitialCondition, ReferenceConfig,
    RunConfig, DEFAULT_CFL_CAP,
};
pub use ode::{run_ode_study, OdeLevel, OdeProblem, OdeStudyConfig, OdeStudyReport};
pub use report::{
    eoc, parse_csv, read_csv, recompute_eoc, write_csv, write_plot_data, CsvRow, EocRow, CSV_HEADER,
};
pub use study::{
    run_level, run_study, thread_pool, CheckpointRecord, LevelReport, Reference, RunReport,
};
