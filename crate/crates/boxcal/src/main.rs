use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use boxcal::cli::{
    self, DiagnoseArgs, FitArgs, IntervalArgs, PredictArgs, SplitPart, SplitRatios, SynthArgs,
    TrainArgs, ValidateArgs,
};
use boxcal::diagnostics::{self, ReliabilityMode};
use boxcal::error::Error;
use boxcal::toymodel::{SynthConfig, TrainConfig};

/// Calibrated localization uncertainty for single-object bounding boxes.
#[derive(Parser)]
#[command(name = "boxcal", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset (JSONL).
    Synth(SynthCmd),
    /// Train the toy model on the train split and save it as JSON.
    Train(TrainCmd),
    /// Run MC-dropout (or weight-scaled) inference over a split.
    Predict(PredictCmd),
    /// Check that predicted variances track realized squared errors.
    Validate(ValidateCmd),
    /// Fit one recalibrator per coordinate from calibration predictions.
    Fit(FitCmd),
    /// Reliability curves and calibration MSE, before/after recalibration.
    Diagnose(DiagnoseCmd),
    /// Emit calibrated confidence regions for each prediction.
    Interval(IntervalCmd),
}

#[derive(Args)]
struct SynthCmd {
    /// Output dataset path (JSONL).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    num_examples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    feature_dim: usize,
    /// Low end of the per-example noise standard deviation.
    #[arg(long, default_value_t = 0.02)]
    noise_lo: f64,
    /// High end of the per-example noise standard deviation.
    #[arg(long, default_value_t = 0.05)]
    noise_hi: f64,
    #[arg(long, default_value_t = 2)]
    class_count: usize,
}

#[derive(Args)]
struct TrainCmd {
    /// Input dataset path (JSONL).
    #[arg(long)]
    data: PathBuf,
    /// Output model path (JSON).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train:calibration:test ratios.
    #[arg(long, default_value = "2:0.9:0.9")]
    split: String,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    /// Epoch at which the learning rate decays by --decay-factor.
    #[arg(long, default_value_t = 150)]
    decay_epoch: usize,
    #[arg(long, default_value_t = 0.1)]
    decay_factor: f64,
}

#[derive(Args)]
struct PredictCmd {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Output predictions path (JSONL).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "2:0.9:0.9")]
    split: String,
    /// Which part of the split to predict on.
    #[arg(long, default_value = "test")]
    part: String,
    /// Number of MC-dropout samples per example.
    #[arg(long, default_value_t = 50)]
    mc_samples: usize,
    /// Use deterministic weight scaling instead of MC-dropout.
    #[arg(long, default_value_t = false)]
    weight_scaling: bool,
}

#[derive(Args)]
struct ValidateCmd {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of equal-count variance bins in the scatter summary.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Minimum acceptable rank correlation before warning.
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
}

#[derive(Args)]
struct FitCmd {
    #[arg(long)]
    predictions: PathBuf,
    /// Directory for the four recalibrator JSON files.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DiagnoseCmd {
    #[arg(long)]
    predictions: PathBuf,
    /// Directory holding recalibrator files; omit for before-only curves.
    #[arg(long)]
    recal_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated confidence levels; defaults to 0.05..0.95.
    #[arg(long)]
    levels: Option<String>,
    /// one-sided or central coverage.
    #[arg(long, default_value = "one-sided")]
    mode: String,
    /// Number of equal-width classification confidence bins.
    #[arg(long, default_value_t = 10)]
    bins: usize,
}

#[derive(Args)]
struct IntervalCmd {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    recal_dir: PathBuf,
    /// Output regions path (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Confidence level of the emitted regions.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

fn parse_levels(spec: Option<&str>) -> boxcal::Result<Vec<f64>> {
    match spec {
        None => Ok(diagnostics::default_levels()),
        Some(s) => s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("invalid level {tok:?}")))
            })
            .collect(),
    }
}

fn run(cli: Cli) -> boxcal::Result<ExitCode> {
    match cli.command {
        Command::Synth(cmd) => {
            let n = cli::cmd_synth(&SynthArgs {
                out: cmd.out.clone(),
                config: SynthConfig {
                    num_examples: cmd.num_examples,
                    feature_dim: cmd.feature_dim,
                    noise_scale_range: (cmd.noise_lo, cmd.noise_hi),
                    seed: cmd.seed,
                    class_count: cmd.class_count,
                },
            })?;
            println!("wrote {n} examples to {}", cmd.out.display());
        }
        Command::Train(cmd) => {
            let summary = cli::cmd_train(&TrainArgs {
                data: cmd.data,
                out: cmd.out.clone(),
                seed: cmd.seed,
                split: cmd.split.parse::<SplitRatios>()?,
                hidden_dim: cmd.hidden,
                dropout_rate: cmd.dropout,
                train_config: TrainConfig {
                    epochs: cmd.epochs,
                    learning_rate: cmd.learning_rate,
                    batch_size: cmd.batch_size,
                    lr_decay_epoch: cmd.decay_epoch,
                    lr_decay_factor: cmd.decay_factor,
                    ..Default::default()
                },
            })?;
            for (epoch, loss) in summary.epoch_mean_losses.iter().enumerate() {
                println!("epoch {epoch:4}: mean loss {loss:.6}");
            }
            println!(
                "trained on {} examples, model saved to {}",
                summary.examples_used,
                cmd.out.display()
            );
        }
        Command::Predict(cmd) => {
            let n = cli::cmd_predict(&PredictArgs {
                data: cmd.data,
                model: cmd.model,
                out: cmd.out.clone(),
                seed: cmd.seed,
                split: cmd.split.parse::<SplitRatios>()?,
                part: cmd.part.parse::<SplitPart>()?,
                mc_samples: cmd.mc_samples,
                weight_scaling: cmd.weight_scaling,
            })?;
            println!("wrote {n} predictions to {}", cmd.out.display());
        }
        Command::Validate(cmd) => {
            let report = cli::cmd_validate(&ValidateArgs {
                predictions: cmd.predictions,
                out_dir: cmd.out_dir,
                bins: cmd.bins,
                threshold: cmd.threshold,
            })?;
            for c in &report.per_coordinate {
                println!(
                    "{}: rank correlation {:.4}{}",
                    c.coordinate,
                    c.rank_correlation,
                    if c.degenerate { " (degenerate)" } else { "" }
                );
            }
            if report.warning {
                eprintln!(
                    "warning: variance-error association below threshold {}; \
                     recalibration may not give the desired results",
                    report.threshold
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::Fit(cmd) => {
            let report = cli::cmd_fit(&FitArgs {
                predictions: cmd.predictions,
                out_dir: cmd.out_dir.clone(),
            })?;
            println!(
                "fitted 4 recalibrators from {} rows ({} skipped) into {}; knots: {:?}",
                report.rows_used,
                report.rows_skipped,
                cmd.out_dir.display(),
                report.knot_counts
            );
        }
        Command::Diagnose(cmd) => {
            let summary = cli::cmd_diagnose(&DiagnoseArgs {
                predictions: cmd.predictions,
                recal_dir: cmd.recal_dir,
                out_dir: cmd.out_dir,
                levels: parse_levels(cmd.levels.as_deref())?,
                mode: cmd.mode.parse::<ReliabilityMode>()?,
                bins: cmd.bins,
            })?;
            println!("coordinate  mse_before      mse_after");
            for (i, coord) in boxcal::Coord::ALL.iter().enumerate() {
                let after = summary
                    .localization_mse_after
                    .as_ref()
                    .map_or("-".to_string(), |v| format!("{:.3e}", v[i]));
                println!(
                    "{:<10}  {:.3e}       {}",
                    coord.name(),
                    summary.localization_mse_before[i],
                    after
                );
            }
            let avg_after = summary
                .average_mse_after
                .map_or("-".to_string(), |v| format!("{v:.3e}"));
            println!(
                "average     {:.3e}       {avg_after}",
                summary.average_mse_before
            );
            println!("classification mse: {:.3e}", summary.classification_mse);
        }
        Command::Interval(cmd) => {
            let n = cli::cmd_interval(&IntervalArgs {
                predictions: cmd.predictions,
                recal_dir: cmd.recal_dir,
                out: cmd.out.clone(),
                level: cmd.level,
            })?;
            println!("wrote {n} regions to {}", cmd.out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err @ Error::Fit(_)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(1)
        }
    }
}
