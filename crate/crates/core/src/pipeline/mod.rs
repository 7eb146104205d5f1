//! Experiment orchestration: dataset generation, training, restoration,
//! evaluation and the files they exchange.

mod commands;
mod config;
mod dataset;

pub use commands::{
    default_manifest_path, diff_path, evaluate, evaluate_cmd, format_decimal, loss_csv,
    model_tile_px, restore_cmd, run_all, simulate_cmd, train_cmd, EvalReport, RunRow, RunSummary,
    LOSS_FILE, MODEL_FILE, REPORT_CSV, REPORT_TXT,
};
pub use config::{ExperimentConfig, Normalization};
pub use dataset::{gen_dataset, simulate_channel, simulate_page, Manifest, PairEntry, Split, MANIFEST_FILE};
