//! Closed-form predictions: corruption threshold, failure witness scale,
//! convergence time and expectations over the uniform sphere.

use std::f64::consts::SQRT_2;

use crate::{Error, Result};

/// `B(m, n) = Gamma(m) Gamma(n) / Gamma(m + n)`.
pub fn beta_fn(m: f64, n: f64) -> Result<f64> {
    for v in [m, n] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain { what: "beta function", value: v });
        }
    }
    Ok((libm::lgamma(m) + libm::lgamma(n) - libm::lgamma(m + n)).exp())
}

fn beta(m: f64, n: f64) -> f64 {
    beta_fn(m, n).expect("positive beta arguments")
}

/// `B(d-1, 1/2) / B((d-1)/2, 1/2)`.
fn beta_ratio(d: usize) -> f64 {
    let d = d as f64;
    beta(d - 1.0, 0.5) / beta((d - 1.0) / 2.0, 0.5)
}

/// Corruption level `p~(d) = (1 + B(d-1, 1/2) / B((d-1)/2, 1/2))^{-1}`
/// up to which the convex relaxations recover the ground truth.
///
/// # Panics
/// If `d < 2`.
pub fn p_tilde(d: usize) -> f64 {
    assert!(d >= 2, "p_tilde needs d >= 2");
    1.0 / (1.0 + beta_ratio(d))
}

/// Limit of [`p_tilde`] as `d -> infinity`.
pub fn p_tilde_limit() -> f64 {
    1.0 / (1.0 + 1.0 / SQRT_2)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ThresholdTable {
    pub dim: usize,
    pub p_tilde: f64,
    pub beta_ratio: f64,
}

impl ThresholdTable {
    pub fn new(d: usize) -> Self {
        ThresholdTable { dim: d, p_tilde: p_tilde(d), beta_ratio: beta_ratio(d) }
    }

    pub fn range(dims: impl IntoIterator<Item = usize>) -> Vec<Self> {
        dims.into_iter().map(Self::new).collect()
    }
}

/// Shrinkage `lambda*` for which `(1 - lambda*) I` beats `I` in expectation
/// once `p > p~(d)`.
pub fn lambda_star(d: usize, p: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::Domain { what: "lambda_star dimension", value: d as f64 });
    }
    let pt = p_tilde(d);
    if !(p > pt && p < 1.0) {
        return Err(Error::Domain { what: "lambda_star corruption level", value: p });
    }
    let df = d as f64;
    let value = (p - pt) / (pt * p) * beta((df - 1.0) / 2.0, 0.5) / beta((df - 2.0) / 2.0, 0.5);
    debug_assert!(value > 0.0 && value <= 1.0);
    Ok(value)
}

/// Expected cost gap bound `-(lambda* / (2 p~)) (p - p~)` at the witness.
pub fn witness_gap_bound(d: usize, p: f64) -> Result<f64> {
    let l = lambda_star(d, p)?;
    let pt = p_tilde(d);
    Ok(-(l / (2.0 * pt)) * (p - pt))
}

/// Lower bound `lambda* sqrt(d) / 4` on the distance from `I` of every
/// convex minimizer past the threshold.
pub fn failure_distance_bound(d: usize, p: f64) -> Result<f64> {
    Ok(lambda_star(d, p)? * (d as f64).sqrt() / 4.0)
}

/// Large-sample flow time to reach the ground truth from angle `s`:
/// `T(s) = d / (1 - p) * arccosh(sec(s / 2))`.
pub fn finite_time_bound(d: usize, p: f64, s: f64) -> Result<f64> {
    if !(0.0..std::f64::consts::PI).contains(&s) {
        return Err(Error::Domain { what: "initial angle", value: s });
    }
    if !(p < 1.0) {
        return Err(Error::Domain { what: "corruption level", value: p });
    }
    Ok(d as f64 / (1.0 - p) * (1.0 / (s / 2.0).cos()).acosh())
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SphereExpectations {
    /// `E |x - y|` for independent uniform `x`, `y`.
    pub mean_dist: f64,
    /// `E [1 / (|x - y| |x + y|)]`.
    pub inv_prod_mean: f64,
    /// Coefficient of `I` in `E [x (x - y)^T / |x - y|]`.
    pub cross_coeff: f64,
}

pub fn sphere_expectations(d: usize) -> Result<SphereExpectations> {
    if d < 3 {
        return Err(Error::Domain { what: "sphere expectation dimension", value: d as f64 });
    }
    let df = d as f64;
    let mean_dist = 2.0 * beta_ratio(d);
    Ok(SphereExpectations {
        mean_dist,
        inv_prod_mean: beta((df - 2.0) / 2.0, 0.5) / (2.0 * beta((df - 1.0) / 2.0, 0.5)),
        cross_coeff: mean_dist / (2.0 * df),
    })
}

/// The published small-ball bound `delta^d / (5 sqrt(d))` on
/// `P(|x - y| < delta)`.
pub fn small_ball_bound(d: usize, delta: f64) -> f64 {
    delta.powi(d as i32) / (5.0 * (d as f64).sqrt())
}

/// Exact `P(|x - y| < delta)` for independent uniform points on `S^{d-1}`:
/// the regularized incomplete beta `I_{delta^2 (4 - delta^2) / 4}((d-1)/2, 1/2) / 2`
/// for `delta <= sqrt(2)`, by symmetry otherwise. Evaluated by quadrature of
/// the polar-angle density.
pub fn small_ball_probability(d: usize, delta: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    if delta >= 2.0 {
        return 1.0;
    }
    // |x - y| = 2 sin(theta / 2), density of theta proportional to sin^{d-2}.
    let theta_max = 2.0 * (delta / 2.0).asin();
    let df = d as f64;
    let norm = beta((df - 1.0) / 2.0, 0.5);
    simpson(|t| t.sin().powi(d as i32 - 2), 0.0, theta_max, 4000) / norm
}

pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Recovery boundary of the convex relaxations at sample size `n`,
/// `p~(d) - c sqrt(log N / N)`.
pub fn convex_boundary_curve(d: usize, n: usize, c: f64) -> f64 {
    p_tilde(d) - c * sample_rate(n)
}

/// Recovery boundary of the Riemannian method, `1 - c sqrt(log N / N)`.
pub fn nonconvex_boundary_curve(n: usize, c: f64) -> f64 {
    1.0 - c * sample_rate(n)
}

fn sample_rate(n: usize) -> f64 {
    let n = n as f64;
    (n.ln() / n).sqrt()
}
