//! Monotone recalibration of predictive CDFs.
//!
//! A [`Recalibrator`] is a nondecreasing map R: [0,1] -> [0,1] fitted so
//! that composing it with the raw Gaussian CDF restores calibration: the
//! recalibrated q-level interval covers roughly a q fraction of held-out
//! truths. Fitting pairs each observed CDF value with its empirical
//! frequency and projects the targets onto the monotone cone with PAVA.
//! The raw isotonic fit is a step function; we interpolate linearly
//! between its knots so quantiles are continuous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, Cdf, Gaussian1D, PROB_CLAMP};

/// Weighted least-squares projection of `values` onto the nondecreasing
/// cone (pool-adjacent-violators).
///
/// Blocks carry their weighted sums and only divide once at the end, so
/// integer-valued inputs come out exact and a second application is a
/// no-op bit for bit.
pub fn pava(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Usage("pava requires a non-empty value list".into()));
    }
    if values.len() != weights.len() {
        return Err(Error::Usage(format!(
            "pava length mismatch: {} values vs {} weights",
            values.len(),
            weights.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("pava values must be finite".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::Usage("pava weights must be positive".into()));
    }

    struct Block {
        sum: f64,
        weight: f64,
        len: usize,
        // Kept alongside the sums: an unpooled block's mean is its input
        // value bit for bit, so re-running pava on its own output never
        // pools on rounding noise.
        mean: f64,
    }

    let mut blocks: Vec<Block> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push(Block { sum: v * w, weight: w, len: 1, mean: v });
        while blocks.len() >= 2 {
            let top = blocks.len() - 1;
            if blocks[top - 1].mean > blocks[top].mean {
                let merged = blocks.pop().unwrap();
                let last = blocks.last_mut().unwrap();
                last.sum += merged.sum;
                last.weight += merged.weight;
                last.len += merged.len;
                last.mean = last.sum / last.weight;
            } else {
                break;
            }
        }
    }

    let mut out = Vec::with_capacity(values.len());
    for b in blocks {
        out.extend(std::iter::repeat(b.mean).take(b.len));
    }
    Ok(out)
}

/// A fitted monotone recalibration map, stored as sorted knots with the
/// endpoint anchors (0,0) and (1,1) always present. Evaluation is
/// piecewise-linear between knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recalibrator {
    knots: Vec<(f64, f64)>,
}

impl Recalibrator {
    /// The identity map: knots (0,0) and (1,1) only.
    pub fn identity() -> Self {
        Self {
            knots: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    /// Builds from interior knots, appending the (0,0) and (1,1) anchors.
    pub fn from_interior_knots(interior: Vec<(f64, f64)>) -> Result<Self> {
        let mut knots = Vec::with_capacity(interior.len() + 2);
        knots.push((0.0, 0.0));
        knots.extend(interior);
        knots.push((1.0, 1.0));
        Self::from_knots(knots)
    }

    /// Builds from a complete knot list (anchors included), validating
    /// monotonicity. This is the loader entry point for persisted maps.
    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Usage("recalibrator needs at least the two anchor knots".into()));
        }
        if knots[0] != (0.0, 0.0) || *knots.last().unwrap() != (1.0, 1.0) {
            return Err(Error::Usage(
                "recalibrator knots must be anchored at (0,0) and (1,1)".into(),
            ));
        }
        for pair in knots.windows(2) {
            let ((p0, r0), (p1, r1)) = (pair[0], pair[1]);
            if !(p0.is_finite() && r0.is_finite() && p1.is_finite() && r1.is_finite()) {
                return Err(Error::Usage("recalibrator knots must be finite".into()));
            }
            if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&r1) {
                return Err(Error::Usage("recalibrator knots must lie in [0,1]".into()));
            }
            if p0 >= p1 {
                return Err(Error::Usage(format!(
                    "knot abscissae must be strictly increasing, got {p0} then {p1}"
                )));
            }
            if r0 > r1 {
                return Err(Error::Usage(format!(
                    "knot ordinates must be nondecreasing, got {r0} then {r1}"
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

/// Fits a recalibrator from the CDF values `p_t` of one coordinate over a
/// calibration set.
///
/// Each value is paired with the empirical frequency `|{s : p_s <= p_t}| / N`,
/// duplicates are merged by averaging targets, and the targets are
/// projected onto the monotone cone before becoming knots. Inputs are
/// clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` so the interior knots
/// never collide with the anchors.
pub fn fit(cdf_values: &[f64]) -> Result<Recalibrator> {
    const MIN_POINTS: usize = 10;
    if cdf_values.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "recalibration needs at least {MIN_POINTS} points, got {}",
            cdf_values.len()
        )));
    }
    if cdf_values.iter().any(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
        return Err(Error::Fit("cdf values must lie in [0,1]".into()));
    }

    let n = cdf_values.len() as f64;
    let mut sorted: Vec<f64> = cdf_values
        .iter()
        .map(|p| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // One knot per distinct p; the target of a tie group is its shared
    // empirical frequency rank/N, the weight its multiplicity.
    let mut ps: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        ps.push(sorted[i]);
        targets.push(j as f64 / n);
        weights.push((j - i) as f64);
        i = j;
    }

    let fitted = pava(&targets, &weights)?;
    let interior: Vec<(f64, f64)> = ps.into_iter().zip(fitted).collect();
    Recalibrator::from_interior_knots(interior)
}

/// Evaluates the recalibration map at `p`.
pub fn apply(recal: &Recalibrator, p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("recalibrator input must lie in [0,1], got {p}")));
    }
    let knots = &recal.knots;
    let hi = match knots.binary_search_by(|(kp, _)| kp.partial_cmp(&p).unwrap()) {
        Ok(exact) => return Ok(knots[exact].1),
        Err(pos) => pos,
    };
    // p is strictly between knots[hi-1] and knots[hi]; anchors guarantee
    // 0 < hi < len.
    let (p0, r0) = knots[hi - 1];
    let (p1, r1) = knots[hi];
    Ok(r0 + (r1 - r0) * (p - p0) / (p1 - p0))
}

/// Generalized inverse `inf { p : R(p) >= q }`. On flat segments this is
/// the left endpoint.
pub fn inverse(recal: &Recalibrator, q: f64) -> Result<f64> {
    if !q.is_finite() || !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("recalibrator inverse input must lie in [0,1], got {q}")));
    }
    let knots = &recal.knots;
    // First knot whose ordinate reaches q.
    let k = knots.partition_point(|(_, r)| *r < q);
    if k == 0 {
        return Ok(knots[0].0);
    }
    let (p0, r0) = knots[k - 1];
    let (p1, r1) = knots[k];
    // r0 < q <= r1 here, so the segment is strictly increasing in r.
    Ok(p0 + (p1 - p0) * (q - r0) / (r1 - r0))
}

/// A recalibrated predictive CDF: `R` composed with the Gaussian CDF.
#[derive(Debug, Clone, Copy)]
pub struct CalibratedCdf<'a> {
    pub base: Gaussian1D,
    pub recal: &'a Recalibrator,
}

impl<'a> CalibratedCdf<'a> {
    pub fn new(base: Gaussian1D, recal: &'a Recalibrator) -> Self {
        Self { base, recal }
    }

    /// `R(Phi(z))`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        apply(self.recal, gaussian::cdf(&self.base, z)?)
    }

    /// `Phi^{-1}(R^{-1}(q))`, with the inverse map's output clamped into
    /// `(PROB_CLAMP, 1 - PROB_CLAMP)` to keep the Gaussian quantile finite.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        let p = inverse(self.recal, q)?.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        gaussian::quantile(&self.base, p)
    }
}

impl Cdf for CalibratedCdf<'_> {
    fn cdf(&self, z: f64) -> Result<f64> {
        CalibratedCdf::cdf(self, z)
    }
}
