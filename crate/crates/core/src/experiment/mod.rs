//! Experiment drivers behind the command-line tool: shuffle-proportion
//! sweeps, heterogeneity reports, client simulation, the two-client XOR
//! demonstration and dataset conversion.

mod config;
mod sweep;
mod tools;
mod xor;

pub use config::{DatasetSource, ExperimentConfig, HeteroSpace, ModelConfig, TrainTest};
pub use sweep::{
    prepare_output_dir, run_sweep, write_results_csv, write_sweep, CellSummary, RunResult,
    SweepOutcome,
};
pub use tools::{
    convert, hetero_for_assignment, hetero_report, read_dataset, simulate_assignment,
    write_dataset, AssignmentSummary, HeteroEntry, HeteroReport, SimulatedAssignment,
};
pub use xor::{
    run_xor, write_grid_csv, Ablation, AblationDelta, GridRow, XorConfig, XorModelReport,
    XorOutcome, XorReport,
};
