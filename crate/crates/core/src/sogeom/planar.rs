//! Invariant-plane splitting of skew-symmetric matrices and rotations.
//!
//! Both kinds of matrices are normal, so their real Schur form is block
//! diagonal with 2x2 rotation (resp. skew) blocks. The blocks are recovered
//! from the symmetric eigendecomposition of the symmetric part (`-S^2` for a
//! skew `S`, `(R + R^T)/2` for a rotation) and the skew part then fixes the
//! orientation of each plane. The symmetric solver never fails to converge,
//! which the nonsymmetric QR iteration cannot promise on orthogonal input.

use std::f64::consts::PI;

use crate::linalg::{orthogonalize, sorted_symmetric_eigen};
use crate::{Matrix, Vector};

/// Planar angles closer than this to `pi` are flagged: the plane is no
/// longer determined by the rotation.
pub const PI_ANGLE_TOL: f64 = 1e-6;

/// Below this sine a rotation plane with negative cosine is treated as an
/// exact half turn and paired with another `-1` eigenvector.
const HALF_TURN_SINE_TOL: f64 = 3e-8;
/// Below this sine a plane with positive cosine is treated as fixed.
const FIXED_SINE_TOL: f64 = 1e-13;
/// Relative size below which `S u` counts as zero.
const KERNEL_TOL: f64 = 1e-14;

/// One invariant plane `span(u, v)`: `R u = cos(a) u + sin(a) v` for a
/// rotation, `S u = a v` for a skew matrix.
#[derive(Clone, Debug)]
pub(crate) struct Plane {
    pub angle: f64,
    pub u: Vector,
    pub v: Vector,
}

impl Plane {
    /// `angle * (v u^T - u v^T)`, the plane's share of the logarithm.
    pub fn generator(&self) -> Matrix {
        self.angle * (&self.v * self.u.transpose() - &self.u * self.v.transpose())
    }

    /// Adds `exp(t * generator) - I` restricted to this plane into `acc`.
    pub fn add_rotation_part(&self, t: f64, acc: &mut Matrix) {
        let (s, c) = (t * self.angle).sin_cos();
        let uu = &self.u * self.u.transpose();
        let vv = &self.v * self.v.transpose();
        let vu = &self.v * self.u.transpose();
        *acc += (c - 1.0) * (uu + vv) + s * (&vu - vu.transpose());
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct PlaneSplit {
    pub planes: Vec<Plane>,
    pub fixed: Vec<Vector>,
    pub degenerate: bool,
}

/// Picks the next direction from the eigenvector candidates: the first
/// unused one (in eigen order) whose residual against `basis` is large.
/// The residuals of the unused candidates square-sum to the remaining
/// dimension, so one with norm at least `1/sqrt(d)` always exists.
fn next_direction(candidates: &[Vector], used: &mut [bool], basis: &[Vector]) -> Vector {
    let d = candidates.len();
    let threshold = 0.5 / (d as f64).sqrt();
    let mut best: Option<(usize, Vector, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if used[i] {
            continue;
        }
        let r = orthogonalize(c, basis);
        let n = r.norm();
        if n >= threshold {
            used[i] = true;
            return r / n;
        }
        if best.as_ref().is_none_or(|(_, _, bn)| n > *bn) {
            best = Some((i, r, n));
        }
    }
    let (i, r, n) = best.expect("candidate set exhausted before the basis was complete");
    used[i] = true;
    r / n
}

fn normalized(v: Vector) -> Option<Vector> {
    let n = v.norm();
    (n > 0.0).then(|| v / n)
}

fn with(basis: &[Vector], extra: &Vector) -> Vec<Vector> {
    let mut b = basis.to_vec();
    b.push(extra.clone());
    b
}

/// Splits a skew-symmetric matrix into planes with positive angles plus
/// its kernel.
pub(crate) fn skew_planes(s: &Matrix) -> PlaneSplit {
    let d = s.nrows();
    let scale = s.norm().max(1.0);
    let (_, mut candidates) = sorted_symmetric_eigen(&(s.transpose() * s));
    candidates.reverse();
    let mut used = vec![false; d];
    let mut basis: Vec<Vector> = Vec::with_capacity(d);
    let mut split = PlaneSplit::default();

    while basis.len() < d {
        let u = next_direction(&candidates, &mut used, &basis);
        let remaining = d - basis.len();
        let w = orthogonalize(&(s * &u), &with(&basis, &u));
        if remaining < 2 || w.norm() <= KERNEL_TOL * scale {
            basis.push(u.clone());
            split.fixed.push(u);
            continue;
        }
        let v = w.normalize();
        // S v = -angle u: re-derive u from v to drop kernel contamination.
        let u = normalized(orthogonalize(&(-(s * &v)), &basis)).unwrap_or(u);
        let mut v = normalized(orthogonalize(&v, &with(&basis, &u))).unwrap_or(v);
        let mut angle = v.dot(&(s * &u));
        if angle < 0.0 {
            v = -v;
            angle = -angle;
        }
        basis.push(u.clone());
        basis.push(v.clone());
        split.planes.push(Plane { angle, u, v });
    }
    split
}

/// Splits a rotation into invariant planes with angles in `(0, pi]` plus
/// its fixed space. Angle-`pi` planes built from pairs of `-1`
/// eigenvectors, or with angles within [`PI_ANGLE_TOL`] of `pi`, set the
/// `degenerate` flag.
pub(crate) fn rotation_planes(r: &Matrix) -> PlaneSplit {
    let d = r.nrows();
    let sym = 0.5 * (r + r.transpose());
    let skew = 0.5 * (r - r.transpose());
    let (_, candidates) = sorted_symmetric_eigen(&sym);
    let mut used = vec![false; d];
    let mut basis: Vec<Vector> = Vec::with_capacity(d);
    let mut half_turn: Option<Vector> = None;
    let mut split = PlaneSplit::default();

    while basis.len() < d {
        let u = next_direction(&candidates, &mut used, &basis);
        let remaining = d - basis.len();
        let cosine = u.dot(&(r * &u));
        let w = orthogonalize(&(&skew * &u), &with(&basis, &u));
        let sine = w.norm();

        if cosine < 0.0 && (sine < HALF_TURN_SINE_TOL || remaining < 2) {
            basis.push(u.clone());
            match half_turn.take() {
                Some(first) => {
                    split.degenerate = true;
                    split.planes.push(Plane {
                        angle: PI,
                        u: first,
                        v: u,
                    });
                }
                None => half_turn = Some(u),
            }
            continue;
        }
        if sine < FIXED_SINE_TOL || remaining < 2 {
            basis.push(u.clone());
            split.fixed.push(u);
            continue;
        }

        let v = w / sine;
        // K v = -sin(angle) u.
        let u = normalized(orthogonalize(&(-(&skew * &v)), &basis)).unwrap_or(u);
        let mut v = normalized(orthogonalize(&v, &with(&basis, &u))).unwrap_or(v);
        let rot_u = r * &u;
        let mut angle = v.dot(&rot_u).atan2(u.dot(&rot_u));
        if angle < 0.0 {
            v = -v;
            angle = -angle;
        }
        if angle > PI - PI_ANGLE_TOL {
            split.degenerate = true;
        }
        basis.push(u.clone());
        basis.push(v.clone());
        split.planes.push(Plane { angle, u, v });
    }
    if let Some(u) = half_turn {
        // An unpaired -1 direction cannot occur for det = +1 input.
        split.degenerate = true;
        split.fixed.push(u);
    }
    split
}

/// Angles and 2-frames of the planar decomposition
/// `R = I + sum_i U_i (R_{sigma_i} - I_2) U_i^T`.
#[derive(Clone, Debug)]
pub struct PlanarDecomposition {
    dim: usize,
    angles: Vec<f64>,
    frames: Vec<Matrix>,
}

impl PlanarDecomposition {
    pub(crate) fn from_split(dim: usize, split: PlaneSplit) -> Self {
        let mut planes = split.planes;
        // Stable: equal angles keep discovery order.
        planes.sort_by(|a, b| b.angle.total_cmp(&a.angle));
        let mut angles = Vec::with_capacity(dim / 2);
        let mut frames = Vec::with_capacity(dim / 2);
        for p in planes {
            angles.push(p.angle);
            frames.push(Matrix::from_columns(&[p.u, p.v]));
        }
        for pair in split.fixed.chunks_exact(2) {
            if angles.len() == dim / 2 {
                break;
            }
            angles.push(0.0);
            frames.push(Matrix::from_columns(pair));
        }
        PlanarDecomposition {
            dim,
            angles,
            frames,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Planar angles `sigma_1 >= ... >= sigma_{floor(d/2)} >= 0`.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// The `d x 2` orthonormal frames `U_i`, one per angle.
    pub fn frames(&self) -> &[Matrix] {
        &self.frames
    }

    /// All frames side by side, a `d x 2 floor(d/2)` matrix.
    pub fn stacked_frames(&self) -> Matrix {
        let cols: Vec<Vector> = self
            .frames
            .iter()
            .flat_map(|f| [f.column(0).into_owned(), f.column(1).into_owned()])
            .collect();
        if cols.is_empty() {
            return Matrix::zeros(self.dim, 0);
        }
        Matrix::from_columns(&cols)
    }

    /// `I + sum_i U_i (R_{sigma_i} - I_2) U_i^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut out = Matrix::identity(self.dim, self.dim);
        for (&angle, frame) in self.angles.iter().zip(&self.frames) {
            let (s, c) = angle.sin_cos();
            let block = nalgebra::Matrix2::new(c - 1.0, -s, s, c - 1.0);
            let block = Matrix::from_fn(2, 2, |i, j| block[(i, j)]);
            out += frame * block * frame.transpose();
        }
        out
    }
}
