//! Reliability diagrams, calibration MSE and the variance-vs-error
//! validation scatter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Cdf;
use crate::predictive::{GroundTruth, PredictiveBox};

/// How observed frequencies are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReliabilityMode {
    /// Fraction of truths with CDF value at most q (Eq.-style one-sided
    /// coverage). This is the default.
    OneSided,
    /// Fraction of truths inside the central q-interval around the median.
    Central,
    /// Confidence-binned classification accuracy.
    Classification,
}

impl std::str::FromStr for ReliabilityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-sided" => Ok(Self::OneSided),
            "central" => Ok(Self::Central),
            "classification" => Ok(Self::Classification),
            other => Err(Error::Usage(format!(
                "unknown reliability mode {other:?}, expected one-sided or central"
            ))),
        }
    }
}

/// (expected confidence, observed frequency) pairs plus their mean squared
/// deviation from the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityCurve {
    pub points: Vec<(f64, f64)>,
    pub mse: f64,
    pub mode: ReliabilityMode,
}

impl ReliabilityCurve {
    fn new(points: Vec<(f64, f64)>, mode: ReliabilityMode) -> Self {
        let mse = mse_of(&points);
        Self { points, mse, mode }
    }

    /// CSV export: header plus one point per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("expected,observed\n");
        for (e, o) in &self.points {
            out.push_str(&format!("{e},{o}\n"));
        }
        out
    }
}

fn mse_of(points: &[(f64, f64)]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.iter().map(|(e, o)| (o - e) * (o - e)).sum::<f64>() / points.len() as f64
}

/// Mean squared deviation of a curve from the diagonal; lower is better
/// calibrated.
pub fn calibration_mse(curve: &ReliabilityCurve) -> f64 {
    mse_of(&curve.points)
}

/// Default level grid: 0.05, 0.10, ..., 0.95.
pub fn default_levels() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Reliability curve for localization: each example pairs a predictive
/// CDF (raw or recalibrated) with the truth coordinate.
pub fn reliability_localization<C: Cdf>(
    examples: &[(C, f64)],
    levels: &[f64],
    mode: ReliabilityMode,
) -> Result<ReliabilityCurve> {
    if examples.is_empty() {
        return Err(Error::Usage("reliability curve needs at least one example".into()));
    }
    if levels.is_empty() {
        return Err(Error::Usage("reliability curve needs at least one level".into()));
    }
    if levels.iter().any(|q| !(0.0 < *q && *q < 1.0)) {
        return Err(Error::Usage("levels must lie strictly inside (0,1)".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("levels must be strictly increasing".into()));
    }
    if matches!(mode, ReliabilityMode::Classification) {
        return Err(Error::Usage(
            "classification mode is served by reliability_classification".into(),
        ));
    }

    let mut pits = Vec::with_capacity(examples.len());
    for (dist, truth) in examples {
        if !truth.is_finite() {
            return Err(Error::Usage("truth coordinates must be finite".into()));
        }
        pits.push(dist.cdf(*truth)?);
    }

    let n = pits.len() as f64;
    let points = levels
        .iter()
        .map(|&q| {
            let hits = match mode {
                ReliabilityMode::OneSided => pits.iter().filter(|&&p| p <= q).count(),
                ReliabilityMode::Central => {
                    pits.iter().filter(|&&p| (p - 0.5).abs() <= q / 2.0).count()
                }
                ReliabilityMode::Classification => unreachable!(),
            };
            (q, hits as f64 / n)
        })
        .collect();
    Ok(ReliabilityCurve::new(points, mode))
}

/// Reliability curve for classification: equal-width confidence bins,
/// expected = mean confidence, observed = accuracy. Empty bins are
/// skipped; the MSE weights non-empty bins uniformly.
pub fn reliability_classification(
    predictions: &[(f64, bool)],
    bins: usize,
) -> Result<ReliabilityCurve> {
    if predictions.is_empty() {
        return Err(Error::Usage("classification curve needs at least one prediction".into()));
    }
    if bins < 1 {
        return Err(Error::Usage("bin count must be at least 1".into()));
    }
    if predictions.iter().any(|(c, _)| !(0.0..=1.0).contains(c)) {
        return Err(Error::Usage("confidences must lie in [0,1]".into()));
    }

    let mut conf_sum = vec![0.0; bins];
    let mut correct = vec![0usize; bins];
    let mut count = vec![0usize; bins];
    for &(conf, ok) in predictions {
        let b = ((conf * bins as f64) as usize).min(bins - 1);
        conf_sum[b] += conf;
        count[b] += 1;
        if ok {
            correct[b] += 1;
        }
    }

    let points: Vec<(f64, f64)> = (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (conf_sum[b] / count[b] as f64, correct[b] as f64 / count[b] as f64))
        .collect();
    Ok(ReliabilityCurve::new(points, ReliabilityMode::Classification))
}

/// Raw (variance, squared error) pairs with equal-count binned means and
/// the rank correlation between the two series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSeries {
    pub points: Vec<(f64, f64)>,
    /// (mean variance in bin, mean squared error in bin) per quantile bin,
    /// adjacent bins with identical centers merged.
    pub binned_means: Vec<(f64, f64)>,
    pub rank_correlation: f64,
    /// Set when the correlation is undefined (constant series); the
    /// reported correlation is then 0.
    pub degenerate: bool,
}

impl ScatterSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variance,squared_error\n");
        for (v, e) in &self.points {
            out.push_str(&format!("{v},{e}\n"));
        }
        out
    }
}

/// Builds the validation scatter for one coordinate: predicted total
/// variance against realized squared error.
pub fn variance_error_scatter(
    examples: &[(PredictiveBox, GroundTruth)],
    coordinate: usize,
    bins: usize,
) -> Result<ScatterSeries> {
    if examples.is_empty() {
        return Err(Error::Usage("scatter needs at least one example".into()));
    }
    if bins < 1 {
        return Err(Error::Usage("bin count must be at least 1".into()));
    }
    let coord = crate::predictive::Coord::from_index(coordinate)?;
    let i = coord.index();

    let points: Vec<(f64, f64)> = examples
        .iter()
        .map(|(bx, truth)| {
            let err = truth.box_coords[i] - bx.coords[i].mean();
            (bx.coords[i].variance(), err * err)
        })
        .collect();

    // Equal-count bins over variance order.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.partial_cmp(&points[b].0).unwrap());
    let bins = bins.min(points.len());
    let mut binned: Vec<(f64, f64)> = Vec::with_capacity(bins);
    let per = points.len() / bins;
    let extra = points.len() % bins;
    let mut start = 0;
    for b in 0..bins {
        let size = per + usize::from(b < extra);
        let slice = &order[start..start + size];
        let vbar = slice.iter().map(|&k| points[k].0).sum::<f64>() / size as f64;
        let ebar = slice.iter().map(|&k| points[k].1).sum::<f64>() / size as f64;
        // Merge with the previous bin when the variance center did not
        // move (constant-variance data collapses to one effective bin).
        match binned.last_mut() {
            Some((pv, pe)) if *pv == vbar => *pe = (*pe + ebar) / 2.0,
            _ => binned.push((vbar, ebar)),
        }
        start += size;
    }

    let (rank_correlation, degenerate) = spearman(
        &points.iter().map(|p| p.0).collect::<Vec<_>>(),
        &points.iter().map(|p| p.1).collect::<Vec<_>>(),
    );

    Ok(ScatterSeries {
        points,
        binned_means: binned,
        rank_correlation,
        degenerate,
    })
}

/// Spearman rank correlation with average ranks for ties. Returns
/// `(0.0, true)` when either series is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> (f64, bool) {
    debug_assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, true);
    }
    (sxy / (sxx * syy).sqrt(), false)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks averaged across the tie group
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}
