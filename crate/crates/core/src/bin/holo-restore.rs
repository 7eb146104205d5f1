use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use holo_restore::pipeline::{self, ExperimentConfig, EvalReport};
use holo_restore::Result;

#[derive(Parser)]
#[command(name = "holo-restore", version, about = "Simulate holographic page-data storage and restore reconstructions with an autoencoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured top-level seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate page data, holograms and normalized reconstructions.
    GenDataset {
        #[command(flatten)]
        common: Common,
    },
    /// Train the autoencoder on a generated dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset manifest; defaults to <out>/dataset/manifest.txt.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Restore a degraded reconstruction with a trained model.
    Restore {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output image (.pgm or .png); defaults to <out>/restored.pgm.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Clean image to difference against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Compare raw and restored images against the original.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        restored: PathBuf,
        /// Defaults to the configured block size.
        #[arg(long)]
        block_px: Option<usize>,
    },
    /// Record and reconstruct an external binary image (e.g. a QR code).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// gen-dataset, train, restore and evaluate in one go.
    RunAll {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenDataset { common } => {
            let cfg = common.load()?;
            let m = pipeline::gen_dataset(&cfg)?;
            println!(
                "wrote {} pairs ({} training subpatterns) to {}",
                m.pairs.len(),
                m.subpatterns,
                m.root.display()
            );
        }
        Command::Train { common, dataset } => {
            let cfg = common.load()?;
            let manifest = dataset.unwrap_or_else(|| pipeline::default_manifest_path(&cfg));
            let out = pipeline::train_cmd(&manifest, &cfg)?;
            let last = out.loss_history.last().copied().unwrap_or(f64::NAN);
            println!(
                "trained {} epochs, final mean loss {}; model at {}",
                out.loss_history.len(),
                pipeline::format_decimal(last),
                cfg.out_dir.join(pipeline::MODEL_FILE).display()
            );
        }
        Command::Restore {
            common,
            model,
            input,
            output,
            reference,
        } => {
            let cfg = common.load()?;
            let output = output.unwrap_or_else(|| cfg.out_dir.join("restored.pgm"));
            pipeline::restore_cmd(&model, &input, &output, reference.as_deref(), cfg.tile_px)?;
            println!("wrote {}", output.display());
        }
        Command::Evaluate {
            common,
            original,
            raw,
            restored,
            block_px,
        } => {
            let cfg = common.load()?;
            let block_px = block_px.unwrap_or(cfg.page.block_px);
            let report = pipeline::evaluate_cmd(&original, &raw, &restored, block_px)?;
            print!("{}", report.to_text());
            println!("{}\n{}", EvalReport::CSV_HEADER, report.csv_line());
        }
        Command::Simulate {
            common,
            input,
            output,
            threshold,
        } => {
            let cfg = common.load()?;
            pipeline::simulate_cmd(&cfg, &input, &output, threshold)?;
            println!("wrote {}", output.display());
        }
        Command::RunAll { common } => {
            let cfg = common.load()?;
            let summary = pipeline::run_all(&cfg)?;
            for row in &summary.rows {
                println!("{} {:?}: {}", row.image, row.split, row.report.csv_line());
            }
            println!("report at {}", cfg.out_dir.join(pipeline::REPORT_CSV).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
