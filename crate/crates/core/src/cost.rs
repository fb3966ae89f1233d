//! Least unsquared deviation (LUD) and least squares objectives with their
//! generalized gradients.

use crate::datamodel::{mat_vec, RegistrationInstance};
use crate::numeric::pairwise_sum;
use crate::sogeom::{Rotation, SkewSym};
use crate::Matrix;

/// Residuals shorter than this are treated as zero when choosing a
/// subgradient element.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Element of the unit ball used for a residual that vanishes, where the
/// subdifferential of `|r|` is the whole ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateSelection {
    /// The zero vector.
    #[default]
    Zero,
    /// `r / (tol + |r|)`, the smoothing of the reference line-search
    /// pseudocode. Nondegenerate residuals still map to `r / |r|`.
    Smoothed,
}

#[derive(Clone, Debug)]
pub struct GradientEvaluation {
    /// `L(A)`.
    pub value: f64,
    /// An element of the generalized gradient, `(1/N) sum_i b_i x_i^T`.
    pub euclid_grad: Matrix,
    /// Indices whose residual norm fell below the tolerance.
    pub degenerate_indices: Vec<usize>,
    /// The unit-ball vector used for each degenerate index, in order.
    pub chosen_selection: Vec<Vec<f64>>,
}

fn residual_norms(a: &Matrix, inst: &RegistrationInstance) -> Vec<f64> {
    let d = inst.dim();
    let mut buf = vec![0.0; d];
    inst.x()
        .rows()
        .zip(inst.y().rows())
        .map(|(x, y)| {
            mat_vec(a, x, &mut buf);
            buf.iter()
                .zip(y)
                .map(|(ax, yi)| (ax - yi) * (ax - yi))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// `L(A) = (1/N) sum_i |A x_i - y_i|_2`.
pub fn lud_cost(a: &Matrix, inst: &RegistrationInstance) -> f64 {
    pairwise_sum(&residual_norms(a, inst)) / inst.len() as f64
}

/// `(1/N) sum_i |A x_i - y_i|_2^2`.
pub fn ls_cost(a: &Matrix, inst: &RegistrationInstance) -> f64 {
    let sq: Vec<f64> = residual_norms(a, inst).iter().map(|r| r * r).collect();
    pairwise_sum(&sq) / inst.len() as f64
}

/// Generalized gradient of the LUD cost with zero selection on degenerate
/// residuals.
pub fn lud_subgradient(a: &Matrix, inst: &RegistrationInstance, degeneracy_tol: f64) -> GradientEvaluation {
    lud_subgradient_with(a, inst, degeneracy_tol, DegenerateSelection::Zero)
}

pub fn lud_subgradient_with(
    a: &Matrix,
    inst: &RegistrationInstance,
    degeneracy_tol: f64,
    selection: DegenerateSelection,
) -> GradientEvaluation {
    let d = inst.dim();
    let n = inst.len();
    let mut grad = Matrix::zeros(d, d);
    let mut norms = Vec::with_capacity(n);
    let mut degenerate_indices = Vec::new();
    let mut chosen_selection = Vec::new();
    let mut r = vec![0.0; d];

    for (i, (x, y)) in inst.x().rows().zip(inst.y().rows()).enumerate() {
        mat_vec(a, x, &mut r);
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        norms.push(norm);
        let scale = if norm >= degeneracy_tol {
            1.0 / norm
        } else {
            degenerate_indices.push(i);
            match selection {
                DegenerateSelection::Zero => 0.0,
                DegenerateSelection::Smoothed => 1.0 / (degeneracy_tol + norm),
            }
        };
        if norm < degeneracy_tol {
            chosen_selection.push(r.iter().map(|v| v * scale).collect());
        }
        if scale != 0.0 {
            for (row, ri) in r.iter().enumerate() {
                let b = ri * scale;
                for (col, xj) in x.iter().enumerate() {
                    grad[(row, col)] += b * xj;
                }
            }
        }
    }
    GradientEvaluation {
        value: pairwise_sum(&norms) / n as f64,
        euclid_grad: grad / n as f64,
        degenerate_indices,
        chosen_selection,
    }
}

/// `skew(R^T G)` for `G` an element of the Euclidean generalized gradient;
/// the tangent vector at `R` is `R skew(R^T G)`.
pub fn riemannian_from_euclidean(r: &Rotation, euclid_grad: &Matrix) -> SkewSym {
    SkewSym::skew_part(&(r.matrix().transpose() * euclid_grad))
}

/// Riemannian generalized gradient in tangent coordinates, zero selection.
pub fn riemannian_subgradient(r: &Rotation, inst: &RegistrationInstance, degeneracy_tol: f64) -> SkewSym {
    riemannian_subgradient_with(r, inst, degeneracy_tol, DegenerateSelection::Zero).0
}

pub fn riemannian_subgradient_with(
    r: &Rotation,
    inst: &RegistrationInstance,
    degeneracy_tol: f64,
    selection: DegenerateSelection,
) -> (SkewSym, GradientEvaluation) {
    let eval = lud_subgradient_with(r.matrix(), inst, degeneracy_tol, selection);
    (riemannian_from_euclidean(r, &eval.euclid_grad), eval)
}

/// Bounds on `|u + v| - |v|` for nonzero, non-parallel `u`, `v`:
///
/// `u.v/|v| <= |u + v| - |v| <= u.v/|v| + |u|^3 / (2 sqrt(|u|^2 |v|^2 - (u.v)^2))`.
///
/// Returns `(lower, exact, upper)`.
pub fn norm_difference_bounds(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let sum = u.iter().zip(v).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
    let lower = dot / nv;
    let gram = (nu * nu * nv * nv - dot * dot).max(0.0);
    let upper = lower + 0.5 * nu.powi(3) / gram.sqrt();
    (lower, sum - nv, upper)
}
