//! Geometry of the special orthogonal group `SO(d)`.
//!
//! Exponential and principal logarithm are computed plane by plane from the
//! block-diagonal real Schur form, which makes them exact up to rounding for
//! every dimension and gives the planar decomposition for free. Inputs whose
//! logarithm sits at (or within [`PI_ANGLE_TOL`] of) a half turn get a valid
//! branch back together with a `degenerate` flag.

mod planar;

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::QR;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::{determinant, sorted_svd};
use crate::{Error, Matrix, Result, Vector};

pub use planar::{PlanarDecomposition, PI_ANGLE_TOL};
pub(crate) use planar::{rotation_planes, skew_planes, Plane};

/// A value together with a flag telling whether the input was at a
/// degenerate point (half-turn logarithm, tied projection) where the value
/// is one valid choice among several.
#[derive(Clone, Debug, PartialEq)]
pub struct Checked<T> {
    pub value: T,
    pub degenerate: bool,
}

impl<T> Checked<T> {
    fn new(value: T, degenerate: bool) -> Self {
        Checked { value, degenerate }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Checked<U> {
        Checked::new(f(self.value), self.degenerate)
    }
}

/// A `d x d` special orthogonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation(Matrix);

impl Rotation {
    /// Bound on `|R^T R - I|_F` and on `|det R - 1|`.
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() || m.nrows() < 2 {
            return Err(Error::DimensionMismatch {
                expected: m.nrows().max(2),
                got: m.ncols(),
            });
        }
        let d = m.nrows();
        let orthogonality = (m.transpose() * &m - Matrix::identity(d, d)).norm();
        let det = determinant(&m);
        if !(orthogonality <= Self::TOLERANCE && (det - 1.0).abs() <= Self::TOLERANCE) {
            return Err(Error::NotARotation {
                orthogonality,
                determinant: det,
            });
        }
        Ok(Rotation(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert!(
            Rotation::new(m.clone()).is_ok(),
            "matrix left SO(d): {m}"
        );
        Rotation(m)
    }

    pub fn identity(d: usize) -> Self {
        Rotation(Matrix::identity(d, d))
    }

    /// Rotation by `theta` in the coordinate plane `(i, j)`: `e_i` turns
    /// towards `e_j`.
    pub fn in_plane(d: usize, i: usize, j: usize, theta: f64) -> Self {
        let mut m = Matrix::identity(d, d);
        let (s, c) = theta.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(j, i)] = s;
        m[(i, j)] = -s;
        Rotation(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// `|log R|_2`, the largest planar angle.
    pub fn angle(&self) -> f64 {
        rotation_planes(&self.0)
            .planes
            .iter()
            .map(|p| p.angle)
            .fold(0.0, f64::max)
    }
}

impl Mul for &Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(&self.0 * &rhs.0)
    }
}

impl Mul<&Vector> for &Rotation {
    type Output = Vector;

    fn mul(self, rhs: &Vector) -> Vector {
        &self.0 * rhs
    }
}

/// A `d x d` skew-symmetric matrix, an element of the Lie algebra `so(d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewSym(Matrix);

impl SkewSym {
    /// Bound on `|S + S^T|_F`.
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let defect = (&m + m.transpose()).norm();
        if defect > Self::TOLERANCE {
            return Err(Error::NotSkewSymmetric(defect));
        }
        Ok(SkewSym(m))
    }

    /// `skew(A) = (A - A^T) / 2`, exactly antisymmetric.
    pub fn skew_part(a: &Matrix) -> Self {
        SkewSym(crate::linalg::skew_part(a))
    }

    pub fn zeros(d: usize) -> Self {
        SkewSym(Matrix::zeros(d, d))
    }

    /// The 2x2 generator `A_2 = [[0, -1], [1, 0]]` placed in the coordinate
    /// plane `(i, j)`.
    pub fn plane_generator(d: usize, i: usize, j: usize) -> Self {
        let mut m = Matrix::zeros(d, d);
        m[(j, i)] = 1.0;
        m[(i, j)] = -1.0;
        SkewSym(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scaled(&self, t: f64) -> SkewSym {
        SkewSym(&self.0 * t)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Operator 2-norm, equal to the largest planar angle.
    pub fn spectral_norm(&self) -> f64 {
        skew_planes(&self.0)
            .planes
            .iter()
            .map(|p| p.angle)
            .fold(0.0, f64::max)
    }
}

/// The one-parameter subgroup `t -> exp(t S)`. Splitting `S` once makes
/// every later evaluation a closed-form sum over its planes, which is what
/// a line search along a geodesic needs.
#[derive(Clone, Debug)]
pub struct ExpPath {
    dim: usize,
    planes: Vec<Plane>,
}

impl ExpPath {
    pub fn new(s: &SkewSym) -> Self {
        ExpPath {
            dim: s.dim(),
            planes: skew_planes(s.matrix()).planes,
        }
    }

    pub fn at(&self, t: f64) -> Rotation {
        let mut m = Matrix::identity(self.dim, self.dim);
        for p in &self.planes {
            p.add_rotation_part(t, &mut m);
        }
        Rotation(m)
    }
}

pub fn exp_so(s: &SkewSym) -> Rotation {
    ExpPath::new(s).at(1.0)
}

/// Principal logarithm. Planar angles lie in `[0, pi]`; the flag is set
/// when one of them is within [`PI_ANGLE_TOL`] of `pi`.
pub fn log_so(r: &Rotation) -> Checked<SkewSym> {
    let split = rotation_planes(r.matrix());
    let d = r.dim();
    let mut m = Matrix::zeros(d, d);
    for p in &split.planes {
        m += p.generator();
    }
    Checked::new(SkewSym::skew_part(&m), split.degenerate)
}

pub fn planar_decompose(r: &Rotation) -> Checked<PlanarDecomposition> {
    let split = rotation_planes(r.matrix());
    let degenerate = split.degenerate;
    Checked::new(PlanarDecomposition::from_split(r.dim(), split), degenerate)
}

/// `gamma(t) = R exp(t S)`.
pub fn geodesic(r: &Rotation, s: &SkewSym, t: f64) -> Rotation {
    r * &exp_so(&s.scaled(t))
}

/// `D(R, Q) = |log(Q^T R)|_F`.
pub fn riemannian_distance(r: &Rotation, q: &Rotation) -> Checked<f64> {
    log_so(&(&q.transpose() * r)).map(|s| s.frobenius_norm())
}

/// `|log(Q^T R)|_2`, the largest planar angle between two rotations.
pub fn angle_between(r: &Rotation, q: &Rotation) -> f64 {
    (&q.transpose() * r).angle()
}

/// Relative gap below which two singular values count as tied.
const SINGULAR_TIE_TOL: f64 = 1e-12;

/// Frobenius-nearest rotation `U diag(1, ..., 1, det(U V^T)) V^T`.
///
/// When `det(U V^T) = -1` and the two smallest singular values tie, the
/// minimizer is not unique; one is returned with the flag set.
pub fn project_to_so(a: &Matrix) -> Checked<Rotation> {
    let d = a.nrows();
    let svd = sorted_svd(a);
    let mut u = svd.u;
    let det = determinant(&(&u * svd.v.transpose()));
    let mut degenerate = false;
    if det < 0.0 {
        let col = -u.column(d - 1);
        u.set_column(d - 1, &col);
        let s = &svd.values;
        let scale = s[0].max(f64::MIN_POSITIVE);
        degenerate = d >= 2 && (s[d - 2] - s[d - 1]).abs() <= SINGULAR_TIE_TOL * scale;
    }
    Checked::new(Rotation(u * svd.v.transpose()), degenerate)
}

/// Haar-distributed random rotation (QR of a Gaussian matrix with the
/// sign convention that makes the factorization unique).
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Rotation {
    let g = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = QR::new(g);
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    if determinant(&q) < 0.0 {
        let col = -q.column(0);
        q.set_column(0, &col);
    }
    Rotation::from_matrix_unchecked(q)
}

/// Random rotation with `|log R|_2 = s`: a Haar-random frame, principal
/// angle `s`, the other planar angles uniform on `[0, s]`.
pub fn random_rotation_with_angle<R: Rng + ?Sized>(
    d: usize,
    s: f64,
    rng: &mut R,
) -> Result<Rotation> {
    if !(0.0..PI).contains(&s) {
        return Err(Error::Domain {
            what: "rotation angle",
            value: s,
        });
    }
    if s == 0.0 {
        return Ok(Rotation::identity(d));
    }
    let frame = random_rotation(d, rng);
    let mut block = Matrix::identity(d, d);
    let angle = Uniform::new_inclusive(0.0, s).expect("valid angle range");
    for k in 0..d / 2 {
        let theta = if k == 0 { s } else { angle.sample(rng) };
        let (sn, c) = theta.sin_cos();
        let (i, j) = (2 * k, 2 * k + 1);
        block[(i, i)] = c;
        block[(j, j)] = c;
        block[(j, i)] = sn;
        block[(i, j)] = -sn;
    }
    let q = frame.matrix();
    Ok(Rotation::from_matrix_unchecked(q * block * q.transpose()))
}
