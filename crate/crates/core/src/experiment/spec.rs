use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datamodel::{load_cloud, normalize_cloud, CloudFormat, PointSource};
use crate::solvers::SolverConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PhaseGrid,
    InitEnvelope,
    SingleRun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Riemannian subgradient over `SO(d)`.
    So,
    /// Projected subgradient over `conv SO(d)`.
    Conv,
    /// Reweighted least squares over all matrices.
    Unconstrained,
    /// Closed-form least squares rotation.
    Ls,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::So => "so",
            SolverKind::Conv => "conv",
            SolverKind::Unconstrained => "unconstrained",
            SolverKind::Ls => "ls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "so" => Ok(SolverKind::So),
            "conv" => Ok(SolverKind::Conv),
            "unconstrained" => Ok(SolverKind::Unconstrained),
            "ls" => Ok(SolverKind::Ls),
            other => Err(Error::InvalidSpec(format!(
                "unknown solver `{other}` (expected so, conv, unconstrained or ls)"
            ))),
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        s.split(',').filter(|t| !t.trim().is_empty()).map(Self::parse).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceSpec {
    Sphere,
    /// Points drawn with replacement from a normalized cloud file.
    Cloud(PathBuf),
}

impl SourceSpec {
    pub fn resolve(&self, dim: usize) -> Result<PointSource> {
        match self {
            SourceSpec::Sphere => Ok(PointSource::Sphere),
            SourceSpec::Cloud(path) => {
                let cloud = normalize_cloud(&load_cloud(path, CloudFormat::from_path(path))?)?;
                if cloud.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: cloud.dim() });
                }
                Ok(PointSource::Cloud(Arc::new(cloud)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub n_values: Vec<usize>,
    pub p_values: Vec<f64>,
    /// Trials per grid cell, or random starts per sample size for envelopes.
    pub trials: usize,
    pub recovery_tol: f64,
    pub solvers: Vec<SolverKind>,
    pub source: SourceSpec,
    pub base_seed: u64,
    pub solver: SolverConfig,
    /// Angle below which an envelope run counts as converged.
    pub convergence_angle: f64,
    /// Constant `c` of the boundary overlay curves.
    pub overlay_c: f64,
}

impl ExperimentSpec {
    /// Powers of two from 4 to 1024, `p` from 0.1 to 0.99, all solvers.
    pub fn phase_grid(dim: usize) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::PhaseGrid,
            dim,
            n_values: (2..=10).map(|k| 1usize << k).collect(),
            p_values: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
            trials: 10,
            recovery_tol: 1e-2,
            solvers: vec![SolverKind::So, SolverKind::Conv, SolverKind::Unconstrained, SolverKind::Ls],
            source: SourceSpec::Sphere,
            base_seed: 0,
            solver: SolverConfig::default(),
            convergence_angle: 1e-2,
            overlay_c: 1.0,
        }
    }

    /// `d = 4`, `p = 0.75`, `N` in {24, 32, 64, 128}, 100 starts.
    pub fn init_envelope() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::InitEnvelope,
            dim: 4,
            n_values: vec![24, 32, 64, 128],
            p_values: vec![0.75],
            trials: 100,
            solvers: vec![SolverKind::So],
            ..Self::phase_grid(4)
        }
    }

    pub fn single_run(dim: usize, n: usize, p: f64) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::SingleRun,
            n_values: vec![n],
            p_values: vec![p],
            trials: 1,
            ..Self::phase_grid(dim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.dim < 2 {
            return fail(format!("dimension must be at least 2, got {}", self.dim));
        }
        if self.n_values.is_empty() || self.p_values.is_empty() {
            return fail("sample-size and corruption grids must be non-empty".into());
        }
        if self.n_values.contains(&0) {
            return fail("sample sizes must be positive".into());
        }
        if let Some(p) = self.p_values.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return fail(format!("corruption level {p} outside [0, 1)"));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return fail("no solver selected".into());
        }
        if !(self.recovery_tol > 0.0) || !(self.convergence_angle > 0.0) {
            return fail("tolerances must be positive".into());
        }
        self.solver.validate()
    }
}

/// Sample-size grid: `a,b,c` or `a:b:geometric` (doubling from `a` while
/// not above `b`).
pub fn parse_n_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidSpec(format!("invalid sample-size grid `{s}`"));
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, kind] if kind.trim() == "geometric" => {
            let (a, b) = (parse(a)?, parse(b)?);
            if a == 0 || a > b {
                return Err(bad());
            }
            std::iter::successors(Some(a), |&n| n.checked_mul(2)).take_while(|&n| n <= b).collect()
        }
        [_] => s.split(',').map(parse).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() || grid.contains(&0) {
        return Err(bad());
    }
    Ok(grid)
}

/// Corruption grid: `a,b,c` or `a:b:k` for `k` evenly spaced levels.
pub fn parse_p_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidSpec(format!("invalid corruption grid `{s}`"));
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, k] => {
            let (a, b) = (parse(a)?, parse(b)?);
            let k: usize = k.trim().parse().map_err(|_| bad())?;
            match k {
                0 => return Err(bad()),
                1 => vec![a],
                _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
            }
        }
        [_] => s.split(',').map(parse).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.iter().any(|p| !(0.0..1.0).contains(p)) {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_size_grids() {
        assert_eq!(parse_n_grid("4:1024:geometric").unwrap(), vec![4, 8, 16, 32, 64, 128, 256, 512, 1024]);
        assert_eq!(parse_n_grid("24, 32,64").unwrap(), vec![24, 32, 64]);
        assert_eq!(parse_n_grid("5:20:geometric").unwrap(), vec![5, 10, 20]);
        assert!(parse_n_grid("8:4:geometric").is_err());
        assert!(parse_n_grid("4:8:linear").is_err());
        assert!(parse_n_grid("0,4").is_err());
        assert!(parse_n_grid("x").is_err());
    }

    #[test]
    fn corruption_grids() {
        assert_eq!(parse_p_grid("0.1,0.5").unwrap(), vec![0.1, 0.5]);
        let g = parse_p_grid("0.1:0.9:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - 0.5).abs() < 1e-15);
        assert!(parse_p_grid("0.5,1.0").is_err());
        assert!(parse_p_grid("0.1:0.9:0").is_err());
    }

    #[test]
    fn solver_names_round_trip() {
        for k in [SolverKind::So, SolverKind::Conv, SolverKind::Unconstrained, SolverKind::Ls] {
            assert_eq!(SolverKind::parse(k.name()).unwrap(), k);
        }
        assert!(SolverKind::parse("cvx").is_err());
        assert_eq!(SolverKind::parse_list("so,ls").unwrap(), vec![SolverKind::So, SolverKind::Ls]);
    }

    #[test]
    fn validation() {
        assert!(ExperimentSpec::phase_grid(3).validate().is_ok());
        assert!(ExperimentSpec::init_envelope().validate().is_ok());
        let mut s = ExperimentSpec::phase_grid(3);
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::phase_grid(3);
        s.p_values.push(1.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_serializes() {
        let s = ExperimentSpec::init_envelope();
        let back: ExperimentSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
