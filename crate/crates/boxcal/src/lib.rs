//! boxcal: calibrated localization uncertainty for single-object
//! bounding-box prediction.
//!
//! The library covers the full loop from uncalibrated predictive
//! distributions to calibrated confidence regions:
//!
//! - [`gaussian`] — scalar Gaussian CDF/quantile/density, the base
//!   per-coordinate predictive distribution.
//! - [`predictive`] — aggregation of MC-dropout samples into predictive
//!   means plus epistemic/aleatoric variance decomposition.
//! - [`toymodel`] — a synthetic scene generator and a small
//!   dropout-trained MLP with a heteroscedastic regression head, which
//!   supplies realistic uncalibrated inputs end to end.
//! - [`recalibration`] — isotonic (PAVA-based) monotone maps over CDF
//!   values, with generalized inverses.
//! - [`diagnostics`] — reliability diagrams, calibration MSE and the
//!   variance-vs-error validation scatter.
//! - [`intervals`] — calibrated per-coordinate intervals and inner/outer
//!   box regions.
//! - [`cli`] — file formats and the pipeline subcommands behind the
//!   `boxcal` binary.
//!
//! Runnable walkthroughs for each capability live in `examples/`; start
//! with `examples/full_pipeline.rs`.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod gaussian;
pub mod intervals;
pub mod predictive;
pub mod recalibration;
pub mod rng;
pub mod toymodel;

pub use error::{Error, Result};
pub use gaussian::{Cdf, Gaussian1D};
pub use intervals::{ConfidenceRegion, CoordinateInterval};
pub use predictive::{Coord, GroundTruth, McSample, PredictiveBox};
pub use recalibration::{CalibratedCdf, Recalibrator};
