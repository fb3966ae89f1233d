//! Registration instances under the outlier model: clean pairs satisfy
//! `y_i = R0 x_i`, a uniformly chosen subset of `round(p N)` pairs has `y_i`
//! replaced by an independent draw from the same source distribution.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numeric::pairwise_sum;
use crate::sogeom::Rotation;
use crate::{Error, Matrix, Result};

/// `out = A x` with a fixed loop order, shared by generation and the cost
/// so that `y_i = R0 x_i` reproduces bit for bit.
#[inline]
pub(crate) fn mat_vec(a: &Matrix, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..d {
            acc += a[(i, j)] * x[j];
        }
        *o = acc;
    }
}

/// `n` points of `R^d` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len(),
            });
        }
        Ok(Points { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Points::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    /// Applies `A` to every point.
    pub fn transformed(&self, a: &Matrix) -> Points {
        let mut coords = vec![0.0; self.coords.len()];
        for (src, dst) in self.rows().zip(coords.chunks_exact_mut(self.dim)) {
            mat_vec(a, src, dst);
        }
        Points {
            dim: self.dim,
            coords,
        }
    }
}

/// Empirical distribution: uniform weight `1/M` on each of `M` points.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCloud {
    points: Points,
}

impl DiscreteCloud {
    pub fn new(points: Points) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateCloud);
        }
        Ok(DiscreteCloud { points })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn centroid(&self) -> Vec<f64> {
        let d = self.dim();
        let mut column = Vec::with_capacity(self.len());
        (0..d)
            .map(|k| {
                column.clear();
                column.extend(self.points.rows().map(|r| r[k]));
                pairwise_sum(&column) / self.len() as f64
            })
            .collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.points.rows().map(norm).fold(0.0, f64::max)
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let j = rng.random_range(0..self.len());
        out.copy_from_slice(self.points.row(j));
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Distribution the `x_i` and the corrupted `y_i` are drawn from.
#[derive(Clone, Debug)]
pub enum PointSource {
    /// Uniform on the unit sphere `S^{d-1}`.
    Sphere,
    /// Uniform over the points of a (normalized) cloud, with replacement.
    Cloud(Arc<DiscreteCloud>),
}

impl PointSource {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            PointSource::Sphere => sample_unit_vector(rng, out),
            PointSource::Cloud(c) => c.sample_into(rng, out),
        }
    }
}

fn sample_unit_vector<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let n = norm(out);
        if n > 1e-150 {
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

/// `n` i.i.d. points uniform on `S^{d-1}` (normalized Gaussians).
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Points {
    let mut coords = vec![0.0; d * n];
    for row in coords.chunks_exact_mut(d) {
        sample_unit_vector(rng, row);
    }
    Points { dim: d, coords }
}

/// Paired clouds with their ground truth and corruption set.
#[derive(Clone, Debug, PartialEq)]
pub struct RegistrationInstance {
    x: Points,
    y: Points,
    ground_truth: Rotation,
    corrupted: Vec<usize>,
}

impl RegistrationInstance {
    /// Assembles an instance from existing data. `corrupted` is sorted and
    /// deduplicated.
    pub fn from_parts(
        x: Points,
        y: Points,
        ground_truth: Rotation,
        mut corrupted: Vec<usize>,
    ) -> Result<Self> {
        let d = ground_truth.dim();
        for pts in [&x, &y] {
            if pts.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: pts.dim(),
                });
            }
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        corrupted.sort_unstable();
        corrupted.dedup();
        if corrupted.last().is_some_and(|&i| i >= x.len()) {
            return Err(Error::InvalidSpec("corrupted index out of range".into()));
        }
        Ok(RegistrationInstance {
            x,
            y,
            ground_truth,
            corrupted,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &Points {
        &self.x
    }

    pub fn y(&self) -> &Points {
        &self.y
    }

    pub fn ground_truth(&self) -> &Rotation {
        &self.ground_truth
    }

    /// Sorted indices of the corrupted pairs.
    pub fn corrupted(&self) -> &[usize] {
        &self.corrupted
    }

    /// `p = |C| / N`.
    pub fn level(&self) -> f64 {
        self.corrupted.len() as f64 / self.len() as f64
    }

    /// Same instance with every `x_i` replaced by `P x_i` and the ground
    /// truth by `R0 P^T`, so that clean pairs still match.
    pub fn rotate_sources(&self, p: &Rotation) -> RegistrationInstance {
        RegistrationInstance {
            x: self.x.transformed(p.matrix()),
            y: self.y.clone(),
            ground_truth: &self.ground_truth * &p.transpose(),
            corrupted: self.corrupted.clone(),
        }
    }
}

/// `|C| = round(p N)`.
pub fn corrupted_count(n: usize, p: f64) -> usize {
    ((p * n as f64).round() as usize).min(n)
}

/// Draws `x_i` from `source`, picks `C` uniformly among subsets of size
/// `round(p N)`, sets `y_i = R0 x_i` off `C` and redraws `y_i` from `source`
/// on `C`.
pub fn generate_instance<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    r0: &Rotation,
    source: &PointSource,
    rng: &mut R,
) -> Result<RegistrationInstance> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidLevel(p));
    }
    let d = r0.dim();
    if let PointSource::Cloud(c) = source {
        if c.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.dim(),
            });
        }
    }
    let mut x = vec![0.0; n * d];
    for row in x.chunks_exact_mut(d) {
        source.draw(rng, row);
    }
    let mut corrupted = index::sample(rng, n, corrupted_count(n, p)).into_vec();
    corrupted.sort_unstable();

    let mut y = vec![0.0; n * d];
    for (src, dst) in x.chunks_exact(d).zip(y.chunks_exact_mut(d)) {
        mat_vec(r0.matrix(), src, dst);
    }
    for &i in &corrupted {
        source.draw(rng, &mut y[i * d..(i + 1) * d]);
    }
    Ok(RegistrationInstance {
        x: Points { dim: d, coords: x },
        y: Points { dim: d, coords: y },
        ground_truth: r0.clone(),
        corrupted,
    })
}

/// On-disk point cloud formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    /// One point per line, comma or whitespace separated; `#` lines skipped.
    XyzCsv,
    /// ASCII PLY; the `x`, `y`, `z` properties of the `vertex` element.
    AsciiPly,
}

impl CloudFormat {
    /// `.ply` files are PLY, everything else is read as xyz/csv.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ply") => CloudFormat::AsciiPly,
            _ => CloudFormat::XyzCsv,
        }
    }
}

/// Reads a cloud; the result is not normalized.
pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<DiscreteCloud> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&text);
    let points = match format {
        CloudFormat::XyzCsv => parse_xyz(path, &text)?,
        CloudFormat::AsciiPly => parse_ply(path, &text)?,
    };
    DiscreteCloud::new(points)
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

fn parse_row(path: &Path, line_no: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| parse_error(path, line_no, format!("invalid number {f:?}")))
        })
        .collect()
}

fn parse_xyz(path: &Path, text: &str) -> Result<Points> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let row = parse_row(path, line_no, &fields)?;
        let expected = *dim.get_or_insert(row.len());
        if row.len() != expected {
            return Err(parse_error(
                path,
                line_no,
                format!("row has {} columns, expected {expected}", row.len()),
            ));
        }
        coords.extend(row);
    }
    match dim {
        Some(d) => Points::new(d, coords),
        None => Err(parse_error(path, 0, "no points found")),
    }
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_ply(path: &Path, text: &str) -> Result<Points> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_error(path, 1, "missing 'ply' magic line")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_end = false;
    for (line_no, line) in lines.by_ref() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => match words.next() {
                Some("ascii") => {}
                Some(other) => {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("binary PLY ({other}) is not supported, convert to ASCII"),
                    ))
                }
                None => return Err(parse_error(path, line_no, "incomplete format line")),
            },
            Some("element") => {
                let name = words.next().unwrap_or_default().to_string();
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_error(path, line_no, "element without count"))?;
                elements.push(PlyElement {
                    name,
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_error(path, line_no, "property before element"))?;
                let name = line.split_whitespace().last().unwrap_or_default();
                el.properties.push(name.to_string());
            }
            Some("end_header") => {
                saw_end = true;
                break;
            }
            _ => {}
        }
    }
    if !saw_end {
        return Err(parse_error(path, 0, "missing end_header"));
    }

    let mut points = None;
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                lines
                    .next()
                    .ok_or_else(|| parse_error(path, 0, format!("truncated {} data", el.name)))?;
            }
            continue;
        }
        let column = |axis: &str| {
            el.properties
                .iter()
                .position(|p| p == axis)
                .ok_or_else(|| parse_error(path, 0, format!("vertex element has no {axis} property")))
        };
        let cols = [column("x")?, column("y")?, column("z")?];
        let mut coords = Vec::with_capacity(3 * el.count);
        for _ in 0..el.count {
            let (line_no, line) = lines
                .next()
                .ok_or_else(|| parse_error(path, 0, "truncated vertex data"))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < el.properties.len() {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("vertex has {} values, expected {}", fields.len(), el.properties.len()),
                ));
            }
            let picked: Vec<&str> = cols.iter().map(|&c| fields[c]).collect();
            coords.extend(parse_row(path, line_no, &picked)?);
        }
        points = Some(Points::new(3, coords)?);
        break;
    }
    points.ok_or_else(|| parse_error(path, 0, "no vertex element"))
}

/// Centers the cloud at the origin and scales it to maximum norm one.
pub fn normalize_cloud(cloud: &DiscreteCloud) -> Result<DiscreteCloud> {
    let centroid = cloud.centroid();
    let d = cloud.dim();
    let scale_before = cloud.max_norm();
    let mut coords: Vec<f64> = cloud.points().as_slice().to_vec();
    for row in coords.chunks_exact_mut(d) {
        for (v, c) in row.iter_mut().zip(&centroid) {
            *v -= c;
        }
    }
    let radius = coords.chunks_exact(d).map(norm).fold(0.0, f64::max);
    if radius == 0.0 || radius <= 1e-14 * scale_before {
        return Err(Error::DegenerateCloud);
    }
    coords.iter_mut().for_each(|v| *v /= radius);
    DiscreteCloud::new(Points::new(d, coords)?)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::sogeom::random_rotation;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn write_temp(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn sphere_rows_are_unit() {
        let pts = sample_sphere(5, 1000, &mut rng(1));
        assert!(pts.rows().all(|r| (norm(r) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn sphere_sample_mean_near_zero() {
        // Cov = I/d, so each coordinate mean has standard error 1/sqrt(d n).
        let (d, n) = (3, 100_000);
        let pts = sample_sphere(d, n, &mut rng(2));
        let bound = 3.0 * (1.0 / (d * n) as f64).sqrt();
        for k in 0..d {
            let mean = pts.rows().map(|r| r[k]).sum::<f64>() / n as f64;
            assert!(mean.abs() < bound, "coordinate {k} mean {mean}");
        }
    }

    #[test]
    fn clean_instance_matches_exactly() {
        let r0 = random_rotation(3, &mut rng(3));
        let inst = generate_instance(50, 0.0, &r0, &PointSource::Sphere, &mut rng(4)).unwrap();
        assert!(inst.corrupted().is_empty());
        let mut buf = [0.0; 3];
        for (x, y) in inst.x().rows().zip(inst.y().rows()) {
            mat_vec(r0.matrix(), x, &mut buf);
            assert_eq!(&buf[..], y);
        }
    }

    #[test]
    fn corruption_count_rounds() {
        let r0 = Rotation::identity(3);
        let inst = generate_instance(100, 0.5, &r0, &PointSource::Sphere, &mut rng(5)).unwrap();
        assert_eq!(inst.corrupted().len(), 50);
        assert_eq!(inst.level(), 0.5);
        assert_eq!(corrupted_count(10, 0.25), 3);
        assert!(matches!(
            generate_instance(10, 1.0, &r0, &PointSource::Sphere, &mut rng(5)),
            Err(Error::InvalidLevel(_))
        ));
        assert!(generate_instance(10, -0.1, &r0, &PointSource::Sphere, &mut rng(5)).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let r0 = Rotation::identity(4);
        let a = generate_instance(128, 0.75, &r0, &PointSource::Sphere, &mut rng(99)).unwrap();
        let b = generate_instance(128, 0.75, &r0, &PointSource::Sphere, &mut rng(99)).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(128, 0.75, &r0, &PointSource::Sphere, &mut rng(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cloud_source_draws_cloud_points() {
        let pts = sample_sphere(3, 40, &mut rng(6));
        let cloud = Arc::new(DiscreteCloud::new(pts).unwrap());
        let src = PointSource::Cloud(cloud.clone());
        let inst = generate_instance(64, 0.5, &Rotation::identity(3), &src, &mut rng(7)).unwrap();
        let members: Vec<&[f64]> = cloud.points().rows().collect();
        for &i in inst.corrupted() {
            assert!(members.contains(&inst.y().row(i)));
        }
        for x in inst.x().rows() {
            assert!(members.contains(&x));
        }
    }

    #[test]
    fn csv_loading() {
        let f = write_temp("1,0,0\n0,1,0\n0,0,1\n", ".csv");
        let c = load_cloud(f.path(), CloudFormat::XyzCsv).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.dim(), 3);
        assert_eq!(c.points().row(1), &[0.0, 1.0, 0.0]);

        let f = write_temp("# x y z\n1 2 3\n\n4\t5 6\n", ".xyz");
        let c = load_cloud(f.path(), CloudFormat::XyzCsv).unwrap();
        assert_eq!(c.points().row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn csv_ragged_row_names_the_line() {
        let f = write_temp("1,0,0\n1,2\n0,0,1\n", ".csv");
        match load_cloud(f.path(), CloudFormat::XyzCsv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_temp("1,0,0\n1,zz,0\n", ".csv");
        assert!(matches!(load_cloud(f.path(), CloudFormat::XyzCsv), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn ply_loading_skips_other_elements() {
        let ply = "ply\nformat ascii 1.0\ncomment bunny\nelement camera 1\nproperty float fov\n\
                   element vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\n\
                   element face 1\nproperty list uchar int vertex_indices\nend_header\n\
                   45\n1 0 0 255\n0 1 0 255\n0 0 1.5 255\n3 0 1 2\n";
        let f = write_temp(ply, ".ply");
        assert_eq!(CloudFormat::from_path(f.path()), CloudFormat::AsciiPly);
        let c = load_cloud(f.path(), CloudFormat::AsciiPly).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.points().row(2), &[0.0, 0.0, 1.5]);
    }

    #[test]
    fn binary_ply_rejected() {
        let f = write_temp("ply\nformat binary_little_endian 1.0\nelement vertex 1\nend_header\n", ".ply");
        match load_cloud(f.path(), CloudFormat::AsciiPly) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("binary")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn normalization_examples() {
        let two = DiscreteCloud::new(Points::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap()).unwrap();
        let n = normalize_cloud(&two).unwrap();
        assert_eq!(n.points().row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(n.points().row(1), &[-1.0, 0.0, 0.0]);

        let again = normalize_cloud(&n).unwrap();
        for (a, b) in n.points().as_slice().iter().zip(again.points().as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }

        let same = DiscreteCloud::new(Points::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap()).unwrap();
        assert!(matches!(normalize_cloud(&same), Err(Error::DegenerateCloud)));
    }

    proptest::proptest! {
        #[test]
        fn prop_normalization_is_a_fixed_point(seed in proptest::prelude::any::<u64>(), m in 2usize..200) {
            let mut g = rng(seed);
            let coords: Vec<f64> = (0..3 * m).map(|_| 10.0 * { let v: f64 = StandardNormal.sample(&mut g); v } + 3.0).collect();
            let c = DiscreteCloud::new(Points::new(3, coords).unwrap()).unwrap();
            let n = normalize_cloud(&c).unwrap();
            proptest::prop_assert!(n.centroid().iter().all(|v| v.abs() < 1e-9));
            proptest::prop_assert!((n.max_norm() - 1.0).abs() < 1e-9);
            let nn = normalize_cloud(&n).unwrap();
            for (a, b) in n.points().as_slice().iter().zip(nn.points().as_slice()) {
                proptest::prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
