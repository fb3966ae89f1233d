//! Projection onto and membership in the convex hull of `SO(d)`.
//!
//! A matrix lies in `conv SO(d)` iff its signed singular values (the
//! smallest one carrying the sign of `det(U V^T)`) lie in the even-parity
//! polytope `conv{s in {-1, 1}^d : even number of -1 entries}`. Projection
//! therefore reduces to a projection in `R^d`. Membership is certified
//! independently by the spectrahedral description with two linear matrix
//! inequalities.

use std::sync::OnceLock;

use crate::linalg::{determinant, max_symmetric_eigenvalue, sorted_svd};
use crate::{Error, Matrix, Result, Vector};

/// Largest dimension accepted by [`membership_conv_so`]; its matrix
/// inequality has size `2^{d-1}`.
pub const MAX_MEMBERSHIP_DIM: usize = 8;

/// `A = U diag(values) V^T` with `det(U V^T) = +1`; only the last value may
/// be negative.
#[derive(Clone, Debug)]
pub struct SignedSpectrum {
    pub u: Matrix,
    pub values: Vector,
    pub v: Matrix,
}

impl SignedSpectrum {
    pub fn recompose(&self) -> Matrix {
        &self.u * Matrix::from_diagonal(&self.values) * self.v.transpose()
    }
}

pub fn signed_svd(a: &Matrix) -> SignedSpectrum {
    let d = a.nrows();
    let svd = sorted_svd(a);
    let mut u = svd.u;
    let mut values = svd.values;
    if determinant(&(&u * svd.v.transpose())) < 0.0 {
        let col = -u.column(d - 1);
        u.set_column(d - 1, &col);
        values[d - 1] = -values[d - 1];
    }
    SignedSpectrum { u, values, v: svd.v }
}

/// `theta . clip(z - beta theta, 0, 1)`.
fn facet_value(z: &[f64], theta: &[f64], beta: f64) -> f64 {
    z.iter().zip(theta).map(|(zi, t)| t * (zi - beta * t).clamp(0.0, 1.0)).sum()
}

/// Euclidean projection onto the even-parity polytope in `{-1, 1}`
/// coordinates.
///
/// With `z = (1 - s) / 2` the polytope becomes the parity polytope of the
/// unit cube: clip to the cube, and if the clipped point violates the odd-set
/// facet picked by rounding, project onto that facet within the cube by a
/// one-dimensional search over sorted breakpoints.
pub fn project_even_parity(s: &[f64]) -> Vec<f64> {
    let d = s.len();
    let z: Vec<f64> = s.iter().map(|v| (1.0 - v) / 2.0).collect();
    let clipped: Vec<f64> = z.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut odd: Vec<bool> = z.iter().map(|&v| v > 0.5).collect();
    if odd.iter().filter(|&&b| b).count() % 2 == 0 {
        let closest = (0..d)
            .min_by(|&i, &j| (z[i] - 0.5).abs().total_cmp(&(z[j] - 0.5).abs()))
            .expect("non-empty spectrum");
        odd[closest] = !odd[closest];
    }
    let theta: Vec<f64> = odd.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    let target = odd.iter().filter(|&&b| b).count() as f64 - 1.0;

    let to_signed = |w: &[f64]| w.iter().map(|v| 1.0 - 2.0 * v).collect::<Vec<f64>>();
    if facet_value(&z, &theta, 0.0) <= target {
        return to_signed(&clipped);
    }

    // The facet value is piecewise linear and non-increasing in beta.
    let mut breaks: Vec<f64> = z
        .iter()
        .zip(&theta)
        .flat_map(|(&zi, &t)| if t > 0.0 { [zi - 1.0, zi] } else { [-zi, 1.0 - zi] })
        .filter(|&b| b > 0.0)
        .collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut lo = 0.0;
    let mut lo_val = facet_value(&z, &theta, 0.0);
    let mut beta = *breaks.last().expect("at least one breakpoint");
    for &b in &breaks[1..] {
        let val = facet_value(&z, &theta, b);
        if val <= target {
            beta = if lo_val > val { lo + (lo_val - target) * (b - lo) / (lo_val - val) } else { b };
            break;
        }
        lo = b;
        lo_val = val;
    }
    let w: Vec<f64> = z.iter().zip(&theta).map(|(zi, t)| (zi - beta * t).clamp(0.0, 1.0)).collect();
    to_signed(&w)
}

/// Frobenius-nearest point of `conv SO(d)`.
pub fn project_conv_so(a: &Matrix) -> Matrix {
    let mut spec = signed_svd(a);
    let projected = project_even_parity(spec.values.as_slice());
    spec.values = Vector::from_vec(projected);
    spec.recompose()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipStatus {
    /// Both inequalities hold with slack above the margin.
    Member,
    /// Within the margin of the boundary; rotations land here.
    Boundary,
    NonMember,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Membership {
    pub status: MembershipStatus,
    /// `1 - |A|_2`.
    pub norm_slack: f64,
    /// `(d - 2) - lambda_max(sum_ij A^(ij) [D A]_ij)`.
    pub parity_slack: f64,
}

impl Membership {
    pub fn min_slack(&self) -> f64 {
        self.norm_slack.min(self.parity_slack)
    }

    /// Member or on the boundary.
    pub fn is_member(&self) -> bool {
        self.status != MembershipStatus::NonMember
    }
}

fn kron_all(factors: &[&Matrix]) -> Matrix {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// Coefficient matrices `A^(ij) = -P^T lambda_i rho_j P` of the parity
/// inequality, row-major in `(i, j)`.
fn build_coefficients(n: usize) -> Vec<Matrix> {
    let gen = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let flip = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let id = Matrix::identity(2, 2);
    let one = Matrix::identity(1, 1);

    let chain = |before: &Matrix, k_before: usize, after: &Matrix, k_after: usize| {
        let mut fs: Vec<&Matrix> = vec![&one];
        fs.extend(std::iter::repeat_n(before, k_before));
        fs.push(&gen);
        fs.extend(std::iter::repeat_n(after, k_after));
        kron_all(&fs)
    };
    let left: Vec<Matrix> = (0..n).map(|i| chain(&flip, i, &id, n - 1 - i)).collect();
    let right: Vec<Matrix> = (0..n).map(|j| chain(&id, j, &flip, n - 1 - j)).collect();

    let half = 1usize << (n - 1);
    let rest_id = Matrix::identity(half, half);
    let rest_flip = kron_all(&std::iter::once(&one).chain(std::iter::repeat_n(&flip, n - 1)).collect::<Vec<_>>());
    let plus = Matrix::from_row_slice(2, 1, &[0.5, 0.5]);
    let minus = Matrix::from_row_slice(2, 1, &[0.5, -0.5]);
    let even = plus.kronecker(&rest_id) + minus.kronecker(&rest_flip);

    let mut out = Vec::with_capacity(n * n);
    for l in &left {
        for r in &right {
            out.push(-(even.transpose() * l * r * &even));
        }
    }
    out
}

fn coefficients(n: usize) -> &'static [Matrix] {
    static CACHE: [OnceLock<Vec<Matrix>>; MAX_MEMBERSHIP_DIM + 1] = [const { OnceLock::new() }; MAX_MEMBERSHIP_DIM + 1];
    CACHE[n].get_or_init(|| build_coefficients(n))
}

/// Certifies membership of `a` in `conv SO(d)` via
/// `[[0, A], [A^T, 0]] <= I` and `sum_ij A^(ij) [D A]_ij <= (d - 2) I` with
/// `D = diag(1, ..., 1, -1)`.
pub fn membership_conv_so(a: &Matrix, margin: f64) -> Result<Membership> {
    let n = a.nrows();
    if n > MAX_MEMBERSHIP_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    if !a.is_square() || n < 2 {
        return Err(Error::DimensionMismatch { expected: n.max(2), got: a.ncols() });
    }
    let norm_slack = 1.0 - sorted_svd(a).values[0];
    let coeffs = coefficients(n);
    let half = 1usize << (n - 1);
    let mut lhs = Matrix::zeros(half, half);
    for i in 0..n {
        let sign = if i == n - 1 { -1.0 } else { 1.0 };
        for j in 0..n {
            lhs += &coeffs[i * n + j] * (sign * a[(i, j)]);
        }
    }
    let parity_slack = (n as f64 - 2.0) - max_symmetric_eigenvalue(&lhs);
    let slack = norm_slack.min(parity_slack);
    let status = if slack > margin {
        MembershipStatus::Member
    } else if slack >= -margin {
        MembershipStatus::Boundary
    } else {
        MembershipStatus::NonMember
    };
    Ok(Membership { status, norm_slack, parity_slack })
}
