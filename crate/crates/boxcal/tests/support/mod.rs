//! Independent oracles for the acceptance suite. Nothing here may call
//! into the implementation paths it checks: the CDF oracle integrates
//! the density numerically, the quantile oracle bisects on it, and the
//! isotonic oracle searches pooling partitions exhaustively.

/// Standard normal density.
fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn simpson(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (phi(a) + 4.0 * phi(m) + phi(b))
}

fn adaptive(a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(a, m);
    let right = simpson(m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() < 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(a, m, left, tol / 2.0, depth - 1) + adaptive(m, b, right, tol / 2.0, depth - 1)
    }
}

/// Standard normal CDF by adaptive Simpson quadrature of the density,
/// accurate to well below 1e-10 over the range used in tests.
pub fn oracle_std_cdf(z: f64) -> f64 {
    if z < 0.0 {
        return 1.0 - oracle_std_cdf(-z);
    }
    let clipped = z.min(12.0);
    0.5 + adaptive(0.0, clipped, simpson(0.0, clipped), 1e-13, 48)
}

/// CDF oracle for a general Gaussian.
pub fn oracle_cdf(mean: f64, variance: f64, z: f64) -> f64 {
    oracle_std_cdf((z - mean) / variance.sqrt())
}

/// Standard normal quantile by bisection on the integration oracle.
pub fn oracle_std_quantile(q: f64) -> f64 {
    assert!(q > 0.0 && q < 1.0);
    let (mut lo, mut hi) = (-13.0, 13.0);
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if oracle_std_cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Weighted isotonic regression by exhaustive search over consecutive
/// pooling partitions: the least-squares monotone fit is the feasible
/// partition (nondecreasing block means) with minimal weighted SSE.
pub fn pava_oracle(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 1 && n <= 16);
    assert_eq!(weights.len(), n);
    let mut best: Option<(f64, Vec<f64>)> = None;
    // Bit k of `cuts` set means a block boundary between k and k+1.
    for cuts in 0..(1u32 << (n - 1)) {
        let mut fitted = vec![0.0; n];
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut feasible = true;
        let mut sse = 0.0;
        for end in 0..n {
            let boundary = end == n - 1 || cuts & (1 << end) != 0;
            if !boundary {
                continue;
            }
            let block = start..=end;
            let wsum: f64 = block.clone().map(|i| weights[i]).sum();
            let vsum: f64 = block.clone().map(|i| values[i] * weights[i]).sum();
            let mean = vsum / wsum;
            if mean < prev_mean {
                feasible = false;
                break;
            }
            prev_mean = mean;
            for i in block {
                fitted[i] = mean;
                let d = values[i] - mean;
                sse += weights[i] * d * d;
            }
            start = end + 1;
        }
        if feasible && best.as_ref().map_or(true, |(b, _)| sse < *b) {
            best = Some((sse, fitted));
        }
    }
    best.expect("at least the all-pooled partition is feasible").1
}

#[allow(dead_code)]
pub fn assert_close(got: f64, expect: f64, tol: f64, what: &str) {
    assert!(
        (got - expect).abs() <= tol,
        "{what}: got {got}, expected {expect} (tol {tol})"
    );
}
