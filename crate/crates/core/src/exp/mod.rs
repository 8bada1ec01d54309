//! Experiment driver: configuration files, presets, sweeps and reports.

mod boundary;
mod config;
mod presets;
mod report;
mod sweep;

pub use boundary::{incentive_boundary, Boundary, BoundaryReport, LevelVerdict, Winner};
pub use config::{
    load_config, DatasetSource, ExperimentConfig, ModelSettings, SweepAxis, DEFAULT_MAX_CELLS,
    DEFAULT_MAX_CLIENTS, RECOMMENDED_SAMPLE_RATE, REQUIRED_KEYS,
};
pub use presets::{preset_entries, preset_names};
pub use report::{
    manifest, read_csv, rows_to_csv, summarize, summary_json, write_outputs, CellSummary,
    OutputPaths, CSV_FILE, MANIFEST_FILE, SUMMARY_FILE,
};
pub use sweep::{
    expand_cells, load_dataset, row_config, run_seed, run_single, run_sweep, Cell, ResultRow,
    RunFailure, SweepOutcome, METRIC_ERROR, METRIC_FAIRNESS, METRIC_GFL, METRIC_NEWCOMER,
    METRIC_PFL,
};
