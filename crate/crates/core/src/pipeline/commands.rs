use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::autoencoder::{self, AeParams, TrainOutcome};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::imageio;
use crate::patterns;

use super::config::ExperimentConfig;
use super::dataset::{self, Manifest, Split, MANIFEST_FILE};

pub const MODEL_FILE: &str = "model.hrae";
pub const LOSS_FILE: &str = "loss.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";

/// Plain decimal with 17 significant digits (no exponent).
pub fn format_decimal(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.16}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn loss_csv(history: &[f64]) -> String {
    let mut s = String::from("epoch,mean_loss\n");
    for (i, l) in history.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, format_decimal(*l));
    }
    s
}

pub fn default_manifest_path(config: &ExperimentConfig) -> PathBuf {
    config.out_dir.join("dataset").join(MANIFEST_FILE)
}

/// Trains on every training pair of the manifest and writes the model and
/// loss curve into `config.out_dir`.
pub fn train_cmd(manifest_path: &Path, config: &ExperimentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let manifest = Manifest::load(manifest_path)?;
    let pairs = manifest.training_pairs(config.tile_px)?;
    let outcome = autoencoder::train(&pairs, &config.train_config())?;
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    autoencoder::save_model(config.out_dir.join(MODEL_FILE), &outcome.params)?;
    let csv_path = config.out_dir.join(LOSS_FILE);
    fs::write(&csv_path, loss_csv(&outcome.loss_history)).map_err(|e| Error::io(&csv_path, e))?;
    Ok(outcome)
}

/// Tile size whose square matches the model's input layer.
pub fn model_tile_px(params: &AeParams) -> Result<usize> {
    let n = (params.n_in() as f64).sqrt().round() as usize;
    if n * n != params.n_in() {
        return Err(Error::Dimension(format!(
            "model input size {} is not a square tile",
            params.n_in()
        )));
    }
    Ok(n)
}

/// Path of the difference image written next to `output`.
pub fn diff_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "restored".into());
    let ext = output
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pgm".into());
    output.with_file_name(format!("{stem}_diff.{ext}"))
}

/// Restores `input` with the model and writes it to `output`. When a
/// reference is given, `|restored - reference|` is written alongside.
pub fn restore_cmd(
    model: &Path,
    input: &Path,
    output: &Path,
    reference: Option<&Path>,
    tile_px: usize,
) -> Result<Image> {
    let params = autoencoder::load_model(model)?;
    if tile_px * tile_px != params.n_in() {
        return Err(Error::Dimension(format!(
            "model expects {} inputs but tiles are {tile_px}x{tile_px}",
            params.n_in()
        )));
    }
    let degraded = imageio::read_image(input)?;
    let restored = autoencoder::restore(&params, &degraded, tile_px)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    imageio::write_image(output, &restored)?;
    if let Some(reference) = reference {
        let reference = imageio::read_image(reference)?;
        imageio::write_image(diff_path(output), &restored.abs_diff(&reference)?)?;
    }
    Ok(restored)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub mse_raw: f64,
    pub mse_restored: f64,
    pub ber_raw: f64,
    pub ber_restored: f64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "mse_raw,mse_restored,ber_raw,ber_restored";

    pub fn csv_line(&self) -> String {
        [self.mse_raw, self.mse_restored, self.ber_raw, self.ber_restored]
            .iter()
            .map(|v| format_decimal(*v))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_text(&self) -> String {
        format!(
            "mse_raw      = {}\nmse_restored = {}\nber_raw      = {}\nber_restored = {}\n",
            format_decimal(self.mse_raw),
            format_decimal(self.mse_restored),
            format_decimal(self.ber_raw),
            format_decimal(self.ber_restored)
        )
    }
}

/// Per-pixel MSE and block BER of the raw and restored images against the
/// binary original.
pub fn evaluate(original: &Image, raw: &Image, restored: &Image, block_px: usize) -> Result<EvalReport> {
    Ok(EvalReport {
        mse_raw: original.mean_squared_error(raw)?,
        mse_restored: original.mean_squared_error(restored)?,
        ber_raw: patterns::bit_error_rate(original, raw, block_px)?,
        ber_restored: patterns::bit_error_rate(original, restored, block_px)?,
    })
}

pub fn evaluate_cmd(original: &Path, raw: &Path, restored: &Path, block_px: usize) -> Result<EvalReport> {
    evaluate(
        &imageio::read_image(original)?,
        &imageio::read_image(raw)?,
        &imageio::read_image(restored)?,
        block_px,
    )
}

/// Records and reconstructs a binary image file, writing the normalized
/// reconstruction. Used to push QR codes and other external patterns
/// through the same channel as page data.
pub fn simulate_cmd(config: &ExperimentConfig, input: &Path, output: &Path, threshold: f64) -> Result<Image> {
    let original = patterns::load_binary_image(input, threshold)?;
    let optical = crate::optics::OpticalConfig {
        pixels_x: original.width(),
        pixels_y: original.height(),
        ..config.optical.clone()
    };
    let cfg = ExperimentConfig {
        optical,
        ..config.clone()
    };
    let recon = dataset::simulate_channel(&cfg, &original, cfg.phase_seed(0))?;
    imageio::write_image(output, &recon)?;
    Ok(recon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub image: String,
    pub split: Split,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub outcome: TrainOutcome,
    pub rows: Vec<RunRow>,
}

/// Generates the dataset, trains, restores the held-out images and the
/// first training image, and writes per-image metrics.
pub fn run_all(config: &ExperimentConfig) -> Result<RunSummary> {
    let manifest = dataset::gen_dataset(config)?;
    let outcome = train_cmd(&default_manifest_path(config), config)?;
    let restored_dir = config.out_dir.join("restored");
    fs::create_dir_all(&restored_dir).map_err(|e| Error::io(&restored_dir, e))?;

    let mut rows = Vec::new();
    let chosen = manifest
        .entries(Split::Eval)
        .chain(manifest.entries(Split::Train).take(1));
    for entry in chosen {
        let (original, raw) = manifest.load_pair(entry)?;
        let restored = autoencoder::restore(&outcome.params, &raw, config.tile_px)?;
        let name = entry
            .original
            .file_stem()
            .map(|s| s.to_string_lossy().replace("original", "restored"))
            .unwrap_or_default();
        imageio::write_pgm(restored_dir.join(format!("{name}.pgm")), &restored)?;
        imageio::write_pgm(
            restored_dir.join(format!("{name}_diff.pgm")),
            &restored.abs_diff(&original)?,
        )?;
        rows.push(RunRow {
            image: entry.original.display().to_string(),
            split: entry.split,
            report: evaluate(&original, &raw, &restored, config.page.block_px)?,
        });
    }

    let mut csv = format!("image,split,{}\n", EvalReport::CSV_HEADER);
    let mut text = String::new();
    for row in &rows {
        let split = match row.split {
            Split::Train => "train",
            Split::Eval => "held-out",
        };
        let _ = writeln!(csv, "{},{},{}", row.image, split, row.report.csv_line());
        let _ = writeln!(text, "[{}] {}\n{}", split, row.image, row.report.to_text());
    }
    let csv_path = config.out_dir.join(REPORT_CSV);
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    let txt_path = config.out_dir.join(REPORT_TXT);
    fs::write(&txt_path, text).map_err(|e| Error::io(&txt_path, e))?;
    Ok(RunSummary {
        manifest,
        outcome,
        rows,
    })
}
