//! Aggregation of MC-dropout forward passes into per-coordinate
//! predictive distributions.
//!
//! Each stochastic forward pass yields an [`McSample`]; [`aggregate`]
//! turns a batch of them into a [`PredictiveBox`] whose per-coordinate
//! variance is the sum of the epistemic part (spread of the sampled
//! means) and the aleatoric part (mean of the predicted variances).
//! Coordinates are treated as mutually independent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Gaussian1D;

/// Tolerance for the class-probability simplex check.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Box coordinate identifiers, in storage order. `(x_min, y_min)` is the
/// top-left corner, `(x_max, y_max)` the bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coord {
    XMin,
    YMin,
    XMax,
    YMax,
}

impl Coord {
    pub const ALL: [Coord; 4] = [Coord::XMin, Coord::YMin, Coord::XMax, Coord::YMax];

    pub fn index(self) -> usize {
        match self {
            Coord::XMin => 0,
            Coord::YMin => 1,
            Coord::XMax => 2,
            Coord::YMax => 3,
        }
    }

    pub fn from_index(i: usize) -> Result<Coord> {
        Coord::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Usage(format!("coordinate index {i} out of range 0..4")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Coord::XMin => "x_min",
            Coord::YMin => "y_min",
            Coord::XMax => "x_max",
            Coord::YMax => "y_max",
        }
    }
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One MC-dropout forward pass: predicted coordinate means, predicted log
/// aleatoric variances and softmax class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub coord_means: [f64; 4],
    pub coord_logvars: [f64; 4],
    pub class_probs: Vec<f64>,
}

impl McSample {
    pub fn validate(&self) -> Result<()> {
        if self.coord_means.iter().any(|m| !m.is_finite())
            || self.coord_logvars.iter().any(|s| !s.is_finite())
        {
            return Err(Error::Domain("mc sample has non-finite coordinate outputs".into()));
        }
        validate_simplex(&self.class_probs)
    }
}

fn validate_simplex(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Domain("class probabilities are empty".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Domain("class probabilities must be finite and nonnegative".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Domain(format!("class probabilities sum to {sum}, expected 1")));
    }
    Ok(())
}

/// A labeled box with its class. Coordinates are normalized to `[0, 1]`
/// with `x_min < x_max` and `y_min < y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "box")]
    pub box_coords: [f64; 4],
    pub class_id: usize,
}

impl GroundTruth {
    pub fn new(box_coords: [f64; 4], class_id: usize) -> Result<Self> {
        let gt = Self { box_coords, class_id };
        gt.validate(usize::MAX)?;
        Ok(gt)
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        let b = &self.box_coords;
        if b.iter().any(|c| !c.is_finite() || !(0.0..=1.0).contains(c)) {
            return Err(Error::Domain(format!("box coordinates must lie in [0,1], got {b:?}")));
        }
        if b[0] >= b[2] || b[1] >= b[3] {
            return Err(Error::Domain(format!(
                "box must satisfy x_min < x_max and y_min < y_max, got {b:?}"
            )));
        }
        if self.class_id >= num_classes {
            return Err(Error::Domain(format!(
                "class id {} out of range 0..{num_classes}",
                self.class_id
            )));
        }
        Ok(())
    }

    pub fn coord(&self, c: Coord) -> f64 {
        self.box_coords[c.index()]
    }
}

/// The aggregated predictive distribution for one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveBox {
    pub coords: [Gaussian1D; 4],
    pub epistemic_var: [f64; 4],
    pub aleatoric_var: [f64; 4],
    pub class_probs: Vec<f64>,
    pub sample_count: usize,
}

impl PredictiveBox {
    pub fn mean_box(&self) -> [f64; 4] {
        [
            self.coords[0].mean(),
            self.coords[1].mean(),
            self.coords[2].mean(),
            self.coords[3].mean(),
        ]
    }
}

/// Aggregates `samples` into a [`PredictiveBox`].
///
/// Per coordinate the predictive mean is the sample mean, the epistemic
/// variance is the population variance of the sampled means, and the
/// aleatoric variance is the mean of `exp(logvar)`. The residual-based
/// variance is computed around the shifted mean so that identical samples
/// produce an epistemic variance of exactly zero.
pub fn aggregate(samples: &[McSample]) -> Result<PredictiveBox> {
    if samples.is_empty() {
        return Err(Error::Usage("cannot aggregate an empty sample list".into()));
    }
    let class_count = samples[0].class_probs.len();
    for s in samples {
        s.validate()?;
        if s.class_probs.len() != class_count {
            return Err(Error::Usage(format!(
                "inconsistent class counts across samples: {} vs {class_count}",
                s.class_probs.len()
            )));
        }
    }
    let t = samples.len() as f64;

    let mut coords = [Gaussian1D::new(0.0, 1.0)?; 4];
    let mut epistemic = [0.0; 4];
    let mut aleatoric = [0.0; 4];
    for i in 0..4 {
        let base = samples[0].coord_means[i];
        let shift_sum: f64 = samples.iter().map(|s| s.coord_means[i] - base).sum();
        let mean = base + shift_sum / t;
        let ss: f64 = samples
            .iter()
            .map(|s| {
                let d = s.coord_means[i] - mean;
                d * d
            })
            .sum();
        epistemic[i] = (ss / t).max(0.0);
        aleatoric[i] = samples.iter().map(|s| s.coord_logvars[i].exp()).sum::<f64>() / t;
        coords[i] = Gaussian1D::new(mean, epistemic[i] + aleatoric[i])?;
    }

    let mut class_probs = vec![0.0; class_count];
    for s in samples {
        for (acc, p) in class_probs.iter_mut().zip(&s.class_probs) {
            *acc += p;
        }
    }
    for p in class_probs.iter_mut() {
        *p /= t;
    }

    Ok(PredictiveBox {
        coords,
        epistemic_var: epistemic,
        aleatoric_var: aleatoric,
        class_probs,
        sample_count: samples.len(),
    })
}

/// CDF of coordinate `i`'s predictive distribution at `z`.
pub fn coordinate_cdf(bx: &PredictiveBox, i: usize, z: f64) -> Result<f64> {
    let c = Coord::from_index(i)?;
    crate::gaussian::cdf(&bx.coords[c.index()], z)
}
