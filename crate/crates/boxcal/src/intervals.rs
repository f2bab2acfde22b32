//! Calibrated confidence intervals per coordinate and the derived
//! inner/outer box regions.
//!
//! A q-level interval for one coordinate is centered in probability: with
//! r the recalibrated CDF at the predictive mean, the bounds are the
//! calibrated quantiles at r -/+ q/2. The box region is the axis-aligned
//! product of the four coordinate intervals, an overapproximation of any
//! joint region since coordinates are treated independently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::PROB_CLAMP;
use crate::predictive::{Coord, PredictiveBox};
use crate::recalibration::{CalibratedCdf, Recalibrator};

/// A calibrated confidence interval for a single coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateInterval {
    pub coordinate: Coord,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-coordinate intervals plus the derived boxes. `outer_box` always
/// contains the predicted mean box; `inner_box` is `None` when the
/// intervals are wide enough that it inverts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub level: f64,
    pub intervals: [CoordinateInterval; 4],
    pub outer_box: [f64; 4],
    pub inner_box: Option<[f64; 4]>,
}

fn check_level(q: f64) -> Result<()> {
    if !q.is_finite() || q <= 0.0 || q >= 1.0 {
        return Err(Error::Usage(format!("confidence level must lie in (0,1), got {q}")));
    }
    Ok(())
}

/// The q-level interval around the (probability-)center of `c`.
///
/// When r -/+ q/2 overflows [0,1] the band is clamped into
/// `[PROB_CLAMP, 1 - PROB_CLAMP]`, which makes extreme-q intervals
/// asymmetric around the mean.
pub fn coord_interval(c: &CalibratedCdf<'_>, coordinate: Coord, q: f64) -> Result<CoordinateInterval> {
    check_level(q)?;
    let r = c.cdf(c.base.mean())?;
    let lo_q = (r - q / 2.0).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let hi_q = (r + q / 2.0).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let lower = c.quantile(lo_q)?;
    let upper = c.quantile(hi_q)?;
    debug_assert!(lower <= upper);
    Ok(CoordinateInterval {
        coordinate,
        level: q,
        lower,
        upper,
    })
}

/// Applies [`coord_interval`] to all four coordinates of `bx` and derives
/// the outer and inner boxes.
pub fn box_region(
    bx: &PredictiveBox,
    recals: &[Recalibrator; 4],
    q: f64,
) -> Result<ConfidenceRegion> {
    check_level(q)?;
    let mut intervals = [CoordinateInterval {
        coordinate: Coord::XMin,
        level: q,
        lower: 0.0,
        upper: 0.0,
    }; 4];
    for coord in Coord::ALL {
        let i = coord.index();
        let c = CalibratedCdf::new(bx.coords[i], &recals[i]);
        intervals[i] = coord_interval(&c, coord, q)?;
    }

    let outer_box = [
        intervals[0].lower,
        intervals[1].lower,
        intervals[2].upper,
        intervals[3].upper,
    ];
    if outer_box[0] > outer_box[2] || outer_box[1] > outer_box[3] {
        return Err(Error::Domain(
            "predictive mean box is inverted; cannot form a confidence region".into(),
        ));
    }
    let inner_candidate = [
        intervals[0].upper,
        intervals[1].upper,
        intervals[2].lower,
        intervals[3].lower,
    ];
    let inner_box = (inner_candidate[0] <= inner_candidate[2]
        && inner_candidate[1] <= inner_candidate[3])
        .then_some(inner_candidate);

    Ok(ConfidenceRegion {
        level: q,
        intervals,
        outer_box,
        inner_box,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::Gaussian1D;
    use crate::predictive::{aggregate, McSample};
    use crate::recalibration;
    use crate::rng::SplitMix64;

    fn identity4() -> [Recalibrator; 4] {
        [
            Recalibrator::identity(),
            Recalibrator::identity(),
            Recalibrator::identity(),
            Recalibrator::identity(),
        ]
    }

    fn box_from(means: [f64; 4], var: f64) -> PredictiveBox {
        let s = McSample {
            coord_means: means,
            coord_logvars: [var.ln(); 4],
            class_probs: vec![1.0],
        };
        aggregate(&[s]).unwrap()
    }

    #[test]
    fn identity_recalibrator_ninety_five_percent() {
        let id = Recalibrator::identity();
        let base = Gaussian1D::new(0.4, 0.0025).unwrap(); // sigma 0.05
        let c = CalibratedCdf::new(base, &id);
        let iv = coord_interval(&c, Coord::XMin, 0.95).unwrap();
        let sd = base.std_dev();
        assert!((iv.lower - (0.4 - 1.959964 * sd)).abs() < 1e-5);
        assert!((iv.upper - (0.4 + 1.959964 * sd)).abs() < 1e-5);
    }

    #[test]
    fn tiny_level_collapses_to_median() {
        let id = Recalibrator::identity();
        let base = Gaussian1D::new(0.6, 0.01).unwrap();
        let c = CalibratedCdf::new(base, &id);
        let iv = coord_interval(&c, Coord::YMin, 1e-9).unwrap();
        assert!((iv.lower - 0.6).abs() < 1e-9);
        assert!((iv.upper - 0.6).abs() < 1e-9);
        assert!(iv.lower <= iv.upper);
    }

    #[test]
    fn rejects_bad_levels() {
        let id = Recalibrator::identity();
        let base = Gaussian1D::new(0.5, 0.01).unwrap();
        let c = CalibratedCdf::new(base, &id);
        for q in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(coord_interval(&c, Coord::XMin, q).is_err());
        }
        let bx = box_from([0.3, 0.3, 0.7, 0.7], 1e-4);
        assert!(box_region(&bx, &identity4(), 0.0).is_err());
    }

    #[test]
    fn overconfident_fit_restores_width() {
        // sigma_model = sigma_true/2; after fitting, the 95% interval
        // should be about twice the uncalibrated width.
        let mut rng = SplitMix64::new(71);
        let sigma_true: f64 = 0.08;
        let model = Gaussian1D::new(0.5, (sigma_true / 2.0).powi(2)).unwrap();
        let pits: Vec<f64> = (0..10_000)
            .map(|_| {
                crate::gaussian::cdf(&model, 0.5 + sigma_true * rng.next_normal()).unwrap()
            })
            .collect();
        let recal = recalibration::fit(&pits).unwrap();
        let c = CalibratedCdf::new(model, &recal);
        let iv = coord_interval(&c, Coord::XMax, 0.95).unwrap();
        let width = iv.upper - iv.lower;
        let expect = 2.0 * 1.959964 * sigma_true;
        assert!((width - expect).abs() < 0.1 * expect, "width {width} expect {expect}");
    }

    #[test]
    fn nesting_over_random_pairs() {
        let mut rng = SplitMix64::new(73);
        for _ in 0..500 {
            let base = Gaussian1D::new(rng.next_f64(), rng.next_range(1e-6, 0.02)).unwrap();
            let recal = random_recalibrator(&mut rng);
            let c = CalibratedCdf::new(base, &recal);
            let q1 = rng.next_range(0.05, 0.9);
            let q2 = rng.next_range(q1, 0.99);
            let a = coord_interval(&c, Coord::XMin, q1).unwrap();
            let b = coord_interval(&c, Coord::XMin, q2).unwrap();
            assert!(b.lower <= a.lower + 1e-12 && a.upper <= b.upper + 1e-12);
            assert!(a.lower <= a.upper);
        }
    }

    fn random_recalibrator(rng: &mut SplitMix64) -> Recalibrator {
        let k = 1 + rng.next_usize(10);
        let mut ps: Vec<f64> = (0..k).map(|_| rng.next_range(0.02, 0.98)).collect();
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ps.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let mut rs: Vec<f64> = (0..ps.len()).map(|_| rng.next_f64()).collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Recalibrator::from_interior_knots(ps.into_iter().zip(rs).collect()).unwrap()
    }

    #[test]
    fn degenerate_box_region_collapses_to_mean() {
        let bx = box_from([0.2, 0.3, 0.8, 0.9], 1e-12);
        let region = box_region(&bx, &identity4(), 0.95).unwrap();
        let mean = bx.mean_box();
        for i in 0..4 {
            assert!((region.outer_box[i] - mean[i]).abs() < 1e-5);
        }
        let inner = region.inner_box.expect("inner box should exist");
        for i in 0..4 {
            assert!((inner[i] - mean[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn symmetric_box_region_dilates_by_quantile() {
        let var = 0.0004; // sigma 0.02
        let bx = box_from([0.3, 0.3, 0.7, 0.7], var);
        let region = box_region(&bx, &identity4(), 0.95).unwrap();
        let d = 1.959964 * var.sqrt();
        let expect = [0.3 - d, 0.3 - d, 0.7 + d, 0.7 + d];
        for i in 0..4 {
            assert!((region.outer_box[i] - expect[i]).abs() < 1e-5);
        }
        // mean box inside outer box
        let mean = bx.mean_box();
        assert!(region.outer_box[0] <= mean[0] && mean[2] <= region.outer_box[2]);
        assert!(region.outer_box[1] <= mean[1] && mean[3] <= region.outer_box[3]);
    }

    #[test]
    fn wide_variances_empty_inner_box() {
        let bx = box_from([0.45, 0.45, 0.55, 0.55], 0.01); // sigma 0.1 vs gap 0.1
        let region = box_region(&bx, &identity4(), 0.95).unwrap();
        assert!(region.inner_box.is_none());
        assert!(region.outer_box[0] <= region.outer_box[2]);
        assert!(region.outer_box[1] <= region.outer_box[3]);
    }

    #[test]
    fn outer_box_contains_interval_corners() {
        let mut rng = SplitMix64::new(79);
        for _ in 0..100 {
            let cx = rng.next_range(0.3, 0.7);
            let cy = rng.next_range(0.3, 0.7);
            let w = rng.next_range(0.1, 0.25);
            let h = rng.next_range(0.1, 0.25);
            let bx = box_from(
                [cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0],
                rng.next_range(1e-5, 1e-3),
            );
            let q = rng.next_range(0.1, 0.95);
            let region = box_region(&bx, &identity4(), q).unwrap();
            for iv in &region.intervals {
                match iv.coordinate {
                    Coord::XMin => assert!(region.outer_box[0] <= iv.lower),
                    Coord::YMin => assert!(region.outer_box[1] <= iv.lower),
                    Coord::XMax => assert!(region.outer_box[2] >= iv.upper),
                    Coord::YMax => assert!(region.outer_box[3] >= iv.upper),
                }
            }
        }
    }
}
