//! Pipeline orchestration: file formats, dataset splitting and the
//! subcommand implementations behind the `boxcal` binary.
//!
//! All datasets are JSONL (one record per line, each carrying a
//! `schema_version`); curves and scatters are exported as CSV for
//! plotting and JSON for everything else. Every command is deterministic
//! given its input files, flags and seed.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::diagnostics::{
    self, ReliabilityCurve, ReliabilityMode, ScatterSeries,
};
use crate::error::{Error, Result};
use crate::gaussian::{self, Gaussian1D};
use crate::intervals;
use crate::predictive::{aggregate, Coord, GroundTruth, PredictiveBox};
use crate::recalibration::{self, CalibratedCdf, Recalibrator};
use crate::rng::{mix64, SplitMix64, Stream};
use crate::toymodel::{
    self, LabeledExample, SynthConfig, ToyModelParams, TrainConfig,
};

pub const SCHEMA_VERSION: u32 = 1;

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub schema_version: u32,
    pub id: String,
    pub features: Vec<f64>,
    pub truth: GroundTruth,
}

/// One line of a predictions file: the serialized form of a
/// [`PredictiveBox`] plus the optional carried-over truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub schema_version: u32,
    pub id: String,
    pub coord_means: [f64; 4],
    pub epistemic_var: [f64; 4],
    pub aleatoric_var: [f64; 4],
    pub class_probs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<GroundTruth>,
}

impl PredictionRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        let finite = self
            .coord_means
            .iter()
            .chain(&self.epistemic_var)
            .chain(&self.aleatoric_var)
            .all(|x| x.is_finite());
        if !finite {
            return Err("non-finite coordinate statistics".into());
        }
        if self.epistemic_var.iter().chain(&self.aleatoric_var).any(|v| *v < 0.0) {
            return Err("variances must be nonnegative".into());
        }
        if self.class_probs.is_empty()
            || self.class_probs.iter().any(|p| !p.is_finite() || *p < 0.0)
        {
            return Err("class probabilities must be nonnegative and finite".into());
        }
        let sum: f64 = self.class_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(format!("class probabilities sum to {sum}"));
        }
        if let Some(t) = &self.truth {
            t.validate(self.class_probs.len()).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// Rebuilds the predictive distribution, flooring variances.
    pub fn to_predictive_box(&self) -> Result<PredictiveBox> {
        let mut coords = [Gaussian1D::new(0.0, 1.0)?; 4];
        for i in 0..4 {
            coords[i] =
                Gaussian1D::new(self.coord_means[i], self.epistemic_var[i] + self.aleatoric_var[i])?;
        }
        Ok(PredictiveBox {
            coords,
            epistemic_var: self.epistemic_var,
            aleatoric_var: self.aleatoric_var,
            class_probs: self.class_probs.clone(),
            sample_count: 0,
        })
    }
}

/// One line of a regions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub schema_version: u32,
    pub id: String,
    pub level: f64,
    pub mean_box: [f64; 4],
    pub outer_box: [f64; 4],
    pub inner_box: Option<[f64; 4]>,
    pub intervals: Vec<IntervalRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub coordinate: Coord,
    pub lower: f64,
    pub upper: f64,
}

/// Persisted recalibration map for one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecalibratorFile {
    pub schema_version: u32,
    pub coordinate: Coord,
    pub knots: Vec<(f64, f64)>,
}

/// Train/calibration/test ratios, e.g. `2:0.9:0.9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios(pub f64, pub f64, pub f64);

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios(2.0, 0.9, 0.9)
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Usage(format!("split must look like 2:0.9:0.9, got {s:?}")));
        }
        let mut vals = [0.0; 3];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("invalid split component {p:?}")))?;
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::Usage("split ratios must be positive".into()));
            }
        }
        Ok(SplitRatios(vals[0], vals[1], vals[2]))
    }
}

/// Which portion of the (ordered) dataset a command operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    Train,
    Cal,
    Test,
    All,
}

impl std::str::FromStr for SplitPart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "cal" => Ok(Self::Cal),
            "test" => Ok(Self::Test),
            "all" => Ok(Self::All),
            other => Err(Error::Usage(format!(
                "unknown split part {other:?}, expected train, cal, test or all"
            ))),
        }
    }
}

/// Index range of `part` within an `n`-record dataset. The split is by
/// record order, which is exchangeable for synthetic data and keeps every
/// command reproducible from the same file.
pub fn split_range(n: usize, ratios: SplitRatios, part: SplitPart) -> std::ops::Range<usize> {
    let total = ratios.0 + ratios.1 + ratios.2;
    let a = ((n as f64) * ratios.0 / total).floor() as usize;
    let b = ((n as f64) * (ratios.0 + ratios.1) / total).floor() as usize;
    match part {
        SplitPart::Train => 0..a,
        SplitPart::Cal => a..b,
        SplitPart::Test => b..n,
        SplitPart::All => 0..n,
    }
}

fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    validate: impl Fn(&T) -> std::result::Result<(), String>,
) -> Result<Vec<T>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Usage(format!("cannot open {}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        validate(&record).map_err(|message| Error::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            message,
        })?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn validate_dataset_record(r: &DatasetRecord) -> std::result::Result<(), String> {
    if r.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {}, expected {SCHEMA_VERSION}",
            r.schema_version
        ));
    }
    if r.features.is_empty() || r.features.iter().any(|x| !x.is_finite()) {
        return Err("features must be non-empty and finite".into());
    }
    r.truth.validate(usize::MAX).map_err(|e| e.to_string())
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    read_jsonl(path, validate_dataset_record)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    read_jsonl(path, PredictionRecord::validate)
}

// ---------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub out: PathBuf,
    pub config: SynthConfig,
}

/// Generates a synthetic dataset file. Returns the number of records.
pub fn cmd_synth(args: &SynthArgs) -> Result<usize> {
    let data = toymodel::synth_generate(&args.config)?;
    let records: Vec<DatasetRecord> = data
        .into_iter()
        .enumerate()
        .map(|(i, ex)| DatasetRecord {
            schema_version: SCHEMA_VERSION,
            id: format!("ex-{i:06}"),
            features: ex.features,
            truth: ex.truth,
        })
        .collect();
    write_jsonl(&args.out, &records)?;
    Ok(records.len())
}

// ---------------------------------------------------------------------
// train
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub split: SplitRatios,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    pub train_config: TrainConfig,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub examples_used: usize,
    pub epoch_mean_losses: Vec<f64>,
}

/// Trains on the train part of the split and writes the model JSON.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary> {
    let records = read_dataset(&args.data)?;
    if records.is_empty() {
        return Err(Error::Usage("dataset is empty".into()));
    }
    let range = split_range(records.len(), args.split, SplitPart::Train);
    let train_set: Vec<LabeledExample> = records[range]
        .iter()
        .map(|r| LabeledExample {
            features: r.features.clone(),
            truth: r.truth,
        })
        .collect();
    if train_set.is_empty() {
        return Err(Error::Usage("train split is empty".into()));
    }
    let feature_dim = train_set[0].features.len();
    let class_count = records.iter().map(|r| r.truth.class_id).max().unwrap_or(0) + 1;
    let params = ToyModelParams::init(
        feature_dim,
        args.hidden_dim,
        class_count,
        args.dropout_rate,
        args.seed,
    )?;
    let outcome = toymodel::train(&train_set, &params, &args.train_config, args.seed)?;
    toymodel::save_model(&args.out, &outcome.params)?;
    Ok(TrainSummary {
        examples_used: train_set.len(),
        epoch_mean_losses: outcome.epoch_mean_losses,
    })
}

// ---------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub data: PathBuf,
    pub model: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub split: SplitRatios,
    pub part: SplitPart,
    pub mc_samples: usize,
    pub weight_scaling: bool,
}

/// Runs inference over the selected part and writes prediction records.
pub fn cmd_predict(args: &PredictArgs) -> Result<usize> {
    let records = read_dataset(&args.data)?;
    let params = toymodel::load_model(&args.model)?;
    let range = split_range(records.len(), args.split, args.part);

    let mut out = Vec::with_capacity(range.len());
    for (ordinal, record) in records[range].iter().enumerate() {
        let samples = if args.weight_scaling {
            vec![toymodel::weight_scaled_predict(&params, &record.features)?]
        } else {
            // Per-record stream so output does not depend on chunking.
            let record_seed =
                SplitMix64::stream(args.seed, Stream::Data, ordinal as u64).next_u64();
            toymodel::mc_predict(&params, &record.features, args.mc_samples, record_seed)?
        };
        let agg = aggregate(&samples)?;
        out.push(PredictionRecord {
            schema_version: SCHEMA_VERSION,
            id: record.id.clone(),
            coord_means: agg.mean_box(),
            epistemic_var: agg.epistemic_var,
            aleatoric_var: agg.aleatoric_var,
            class_probs: agg.class_probs,
            truth: Some(record.truth),
        });
    }
    write_jsonl(&args.out, &out)?;
    Ok(out.len())
}

// ---------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ValidateArgs {
    pub predictions: PathBuf,
    pub out_dir: PathBuf,
    pub bins: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordinateValidation {
    pub coordinate: Coord,
    pub rank_correlation: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub threshold: f64,
    pub per_coordinate: Vec<CoordinateValidation>,
    /// True when any coordinate's rank correlation falls below the
    /// threshold, in which case recalibration is unlikely to help.
    pub warning: bool,
}

/// Builds the variance-vs-error scatter per coordinate and flags weak
/// association between predicted variance and realized squared error.
pub fn cmd_validate(args: &ValidateArgs) -> Result<ValidationReport> {
    let records = read_predictions(&args.predictions)?;
    let pairs = paired_with_truth(&records)?;
    std::fs::create_dir_all(&args.out_dir)?;

    let mut per_coordinate = Vec::with_capacity(4);
    for coord in Coord::ALL {
        let scatter: ScatterSeries =
            diagnostics::variance_error_scatter(&pairs, coord.index(), args.bins)?;
        std::fs::write(
            args.out_dir.join(format!("scatter_{}.csv", coord.name())),
            scatter.to_csv(),
        )?;
        write_pretty_json(
            &args.out_dir.join(format!("scatter_{}.json", coord.name())),
            &scatter,
        )?;
        per_coordinate.push(CoordinateValidation {
            coordinate: coord,
            rank_correlation: scatter.rank_correlation,
            degenerate: scatter.degenerate,
        });
    }
    let warning = per_coordinate
        .iter()
        .any(|c| c.degenerate || c.rank_correlation < args.threshold);
    let report = ValidationReport {
        schema_version: SCHEMA_VERSION,
        threshold: args.threshold,
        per_coordinate,
        warning,
    };
    write_pretty_json(&args.out_dir.join("validation_report.json"), &report)?;
    Ok(report)
}

fn paired_with_truth(records: &[PredictionRecord]) -> Result<Vec<(PredictiveBox, GroundTruth)>> {
    let pairs: Vec<(PredictiveBox, GroundTruth)> = records
        .iter()
        .filter_map(|r| r.truth.map(|t| r.to_predictive_box().map(|b| (b, t))))
        .collect::<Result<_>>()?;
    if pairs.is_empty() {
        return Err(Error::Usage("no predictions carry ground truth".into()));
    }
    Ok(pairs)
}

// ---------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub predictions: PathBuf,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub rows_used: usize,
    pub rows_skipped: usize,
    pub knot_counts: Vec<usize>,
}

/// Fits one recalibrator per coordinate from the calibration predictions
/// and writes them as JSON files.
pub fn cmd_fit(args: &FitArgs) -> Result<FitReport> {
    let records = read_predictions(&args.predictions)?;
    let rows_skipped = records.iter().filter(|r| r.truth.is_none()).count();
    let usable: Vec<&PredictionRecord> = records.iter().filter(|r| r.truth.is_some()).collect();
    std::fs::create_dir_all(&args.out_dir)?;

    let mut knot_counts = Vec::with_capacity(4);
    for coord in Coord::ALL {
        let i = coord.index();
        let mut pits = Vec::with_capacity(usable.len());
        for r in &usable {
            let bx = r.to_predictive_box()?;
            let truth = r.truth.expect("filtered to records with truth");
            pits.push(gaussian::cdf(&bx.coords[i], truth.box_coords[i])?);
        }
        let recal = recalibration::fit(&pits)?;
        knot_counts.push(recal.knots().len());
        let file = RecalibratorFile {
            schema_version: SCHEMA_VERSION,
            coordinate: coord,
            knots: recal.knots().to_vec(),
        };
        write_pretty_json(&args.out_dir.join(recalibrator_file_name(coord)), &file)?;
    }
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        rows_used: usable.len(),
        rows_skipped,
        knot_counts,
    };
    write_pretty_json(&args.out_dir.join("fit_report.json"), &report)?;
    Ok(report)
}

pub fn recalibrator_file_name(coord: Coord) -> String {
    format!("recalibrator_{}.json", coord.name())
}

/// Loads the four per-coordinate recalibrators from a directory written
/// by [`cmd_fit`], re-validating monotonicity.
pub fn load_recalibrators(dir: &Path) -> Result<[Recalibrator; 4]> {
    let mut out: Vec<Recalibrator> = Vec::with_capacity(4);
    for coord in Coord::ALL {
        let path = dir.join(recalibrator_file_name(coord));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Usage(format!("cannot open {}: {e}", path.display())))?;
        let file: RecalibratorFile = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            line: 1,
            message: e.to_string(),
        })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema {
                path: path.display().to_string(),
                line: 1,
                message: format!("unsupported schema_version {}", file.schema_version),
            });
        }
        if file.coordinate != coord {
            return Err(Error::Schema {
                path: path.display().to_string(),
                line: 1,
                message: format!("expected coordinate {coord}, found {}", file.coordinate),
            });
        }
        out.push(Recalibrator::from_knots(file.knots)?);
    }
    Ok([
        out[0].clone(),
        out[1].clone(),
        out[2].clone(),
        out[3].clone(),
    ])
}

// ---------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DiagnoseArgs {
    pub predictions: PathBuf,
    pub recal_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub levels: Vec<f64>,
    pub mode: ReliabilityMode,
    pub bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnoseSummary {
    pub schema_version: u32,
    pub mode: ReliabilityMode,
    pub localization_mse_before: Vec<f64>,
    pub localization_mse_after: Option<Vec<f64>>,
    pub average_mse_before: f64,
    pub average_mse_after: Option<f64>,
    pub classification_mse: f64,
}

/// Reliability curves per coordinate (before and, when recalibrators are
/// given, after recalibration), the classification curve and an MSE
/// summary.
pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<DiagnoseSummary> {
    let records = read_predictions(&args.predictions)?;
    let pairs = paired_with_truth(&records)?;
    let recals = args.recal_dir.as_deref().map(load_recalibrators).transpose()?;
    std::fs::create_dir_all(&args.out_dir)?;

    let mut mse_before = Vec::with_capacity(4);
    let mut mse_after = recals.is_some().then(Vec::new);
    for coord in Coord::ALL {
        let i = coord.index();
        let raw: Vec<(Gaussian1D, f64)> = pairs
            .iter()
            .map(|(bx, t)| (bx.coords[i], t.box_coords[i]))
            .collect();
        let before = diagnostics::reliability_localization(&raw, &args.levels, args.mode)?;
        std::fs::write(
            args.out_dir.join(format!("reliability_{}_before.csv", coord.name())),
            before.to_csv(),
        )?;
        write_pretty_json(
            &args.out_dir.join(format!("reliability_{}_before.json", coord.name())),
            &before,
        )?;
        mse_before.push(before.mse);

        if let Some(recals) = &recals {
            let cal: Vec<(CalibratedCdf<'_>, f64)> = pairs
                .iter()
                .map(|(bx, t)| (CalibratedCdf::new(bx.coords[i], &recals[i]), t.box_coords[i]))
                .collect();
            let after = diagnostics::reliability_localization(&cal, &args.levels, args.mode)?;
            std::fs::write(
                args.out_dir.join(format!("reliability_{}_after.csv", coord.name())),
                after.to_csv(),
            )?;
            write_pretty_json(
                &args.out_dir.join(format!("reliability_{}_after.json", coord.name())),
                &after,
            )?;
            mse_after.as_mut().unwrap().push(after.mse);
        }
    }

    let class_preds: Vec<(f64, bool)> = pairs
        .iter()
        .zip(records.iter().filter(|r| r.truth.is_some()))
        .map(|((_, truth), record)| {
            let (argmax, best) = record
                .class_probs
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, p)| {
                    if *p > acc.1 {
                        (k, *p)
                    } else {
                        acc
                    }
                });
            (best, argmax == truth.class_id)
        })
        .collect();
    let classification: ReliabilityCurve =
        diagnostics::reliability_classification(&class_preds, args.bins)?;
    std::fs::write(args.out_dir.join("classification.csv"), classification.to_csv())?;
    write_pretty_json(&args.out_dir.join("classification.json"), &classification)?;

    let average = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let summary = DiagnoseSummary {
        schema_version: SCHEMA_VERSION,
        mode: args.mode,
        average_mse_before: average(&mse_before),
        average_mse_after: mse_after.as_deref().map(average),
        localization_mse_before: mse_before,
        localization_mse_after: mse_after,
        classification_mse: classification.mse,
    };
    write_pretty_json(&args.out_dir.join("mse_summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------
// interval
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct IntervalArgs {
    pub predictions: PathBuf,
    pub recal_dir: PathBuf,
    pub out: PathBuf,
    pub level: f64,
}

/// Emits the calibrated confidence region for every prediction.
pub fn cmd_interval(args: &IntervalArgs) -> Result<usize> {
    let records = read_predictions(&args.predictions)?;
    if records.is_empty() {
        return Err(Error::Usage("predictions file is empty".into()));
    }
    let recals = load_recalibrators(&args.recal_dir)?;

    let mut out = Vec::with_capacity(records.len());
    for record in &records {
        let bx = record.to_predictive_box()?;
        let region = intervals::box_region(&bx, &recals, args.level)?;
        out.push(RegionRecord {
            schema_version: SCHEMA_VERSION,
            id: record.id.clone(),
            level: region.level,
            mean_box: bx.mean_box(),
            outer_box: region.outer_box,
            inner_box: region.inner_box,
            intervals: region
                .intervals
                .iter()
                .map(|iv| IntervalRecord {
                    coordinate: iv.coordinate,
                    lower: iv.lower,
                    upper: iv.upper,
                })
                .collect(),
        });
    }
    write_jsonl(&args.out, &out)?;
    Ok(out.len())
}

pub fn read_regions(path: &Path) -> Result<Vec<RegionRecord>> {
    read_jsonl(path, |r: &RegionRecord| {
        if r.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", r.schema_version));
        }
        Ok(())
    })
}

/// Derives a per-purpose sub-seed; used by callers that need several
/// independent pipelines from one user-facing seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = seed;
    for b in label.bytes() {
        h = mix64(h ^ b as u64);
    }
    h
}
