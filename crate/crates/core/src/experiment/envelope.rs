use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::finite_time_bound;
use crate::datamodel::{generate_instance, RegistrationInstance};
use crate::numeric::{hash_seed, trial_seed};
use crate::sogeom::{angle_between, random_rotation_with_angle, Rotation};
use crate::solvers::{solve_lud_so, SolverConfig, Termination};
use crate::Result;

use super::spec::ExperimentSpec;
use super::stats::spearman;

/// One random start of the Riemannian method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeRecord {
    pub n: usize,
    pub start: usize,
    /// `|log(R0^T R(0))|_2`.
    pub initial_angle: f64,
    /// The final angle is below the convergence angle.
    pub converged: bool,
    /// Flow time of the first iterate within the convergence angle.
    pub t_cvg: Option<f64>,
    pub final_angle: f64,
    pub iterations: usize,
    pub termination: Termination,
}

/// An intermediate iterate of a converged run, treated as a start of its
/// own: its angle and the flow time it still needed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub n: usize,
    pub start: usize,
    pub angle: f64,
    pub remaining_time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeResult {
    pub spec: ExperimentSpec,
    /// Ordered by `N`, then start.
    pub records: Vec<EnvelopeRecord>,
    pub samples: Vec<TrajectorySample>,
    pub wall_time_secs: f64,
}

impl PartialEq for EnvelopeResult {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.records == other.records && self.samples == other.samples
    }
}

/// How well converged runs follow `T(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub converged: usize,
    /// `max(0, mean(T_cvg - T(s)))` over converged runs.
    pub offset: f64,
    pub factor: f64,
    /// Share of converged runs with `T_cvg <= factor T(s) + offset`.
    pub fraction_within: f64,
    /// Rank correlation of `T_cvg` with the initial angle.
    pub spearman: Option<f64>,
}

impl EnvelopeResult {
    pub fn records_for(&self, n: usize) -> impl Iterator<Item = &EnvelopeRecord> {
        self.records.iter().filter(move |r| r.n == n)
    }

    /// Largest initial angle among converged starts at sample size `n`.
    pub fn max_converged_angle(&self, n: usize) -> Option<f64> {
        self.records_for(n).filter(|r| r.converged).map(|r| r.initial_angle).reduce(f64::max)
    }

    pub fn fit(&self, n: usize, factor: f64) -> EnvelopeFit {
        let (d, p) = (self.spec.dim, self.spec.p_values[0]);
        let pairs: Vec<(f64, f64)> = self
            .records_for(n)
            .filter_map(|r| r.t_cvg.filter(|_| r.converged).map(|t| (r.initial_angle, t)))
            .collect();
        let bound = |s: f64| finite_time_bound(d, p, s).unwrap_or(f64::INFINITY);
        let count = pairs.len();
        if count == 0 {
            return EnvelopeFit { converged: 0, offset: 0.0, factor, fraction_within: 0.0, spearman: None };
        }
        let offset = (pairs.iter().map(|&(s, t)| t - bound(s)).sum::<f64>() / count as f64).max(0.0);
        let within = pairs.iter().filter(|&&(s, t)| t <= factor * bound(s) + offset).count();
        let (angles, times): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        EnvelopeFit {
            converged: count,
            offset,
            factor,
            fraction_within: within as f64 / count as f64,
            spearman: spearman(&angles, &times),
        }
    }
}

fn instance_seed(spec: &ExperimentSpec, n: usize, p: f64) -> u64 {
    hash_seed(&[spec.base_seed, n as u64, p.to_bits(), u64::MAX])
}

fn run_start(
    inst: &RegistrationInstance,
    spec: &ExperimentSpec,
    cfg: &SolverConfig,
    n: usize,
    p: f64,
    start: usize,
) -> Result<(EnvelopeRecord, Vec<TrajectorySample>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.base_seed, n, p, start));
    let s = rng.random_range(0.0..PI);
    let r0 = inst.ground_truth();
    let init = r0 * &random_rotation_with_angle(spec.dim, s, &mut rng)?;
    let report = solve_lud_so(inst, &init, cfg)?;

    let angles: Vec<(f64, f64)> = report
        .trajectory
        .iter()
        .map(|pt| (pt.flow_time, angle_between(&Rotation::from_matrix_unchecked(pt.iterate.clone()), r0)))
        .collect();
    let final_angle = angles.last().map_or(s, |a| a.1);
    let converged = final_angle < spec.convergence_angle;
    let hit = angles.iter().position(|&(_, a)| a < spec.convergence_angle);
    let t_cvg = hit.map(|i| angles[i].0);
    let samples = match (converged, hit) {
        (true, Some(i)) => angles[..=i]
            .iter()
            .map(|&(t, a)| TrajectorySample { n, start, angle: a, remaining_time: angles[i].0 - t })
            .collect(),
        _ => Vec::new(),
    };
    let record = EnvelopeRecord {
        n,
        start,
        initial_angle: s,
        converged,
        t_cvg,
        final_angle,
        iterations: report.iterations,
        termination: report.termination,
    };
    Ok((record, samples))
}

/// One instance per sample size (ground truth the identity), then
/// `spec.trials` Riemannian runs from rotations at a uniformly random angle
/// in `[0, pi)` from the truth, recording flow times along each trajectory.
pub fn run_init_envelope(spec: &ExperimentSpec) -> Result<EnvelopeResult> {
    spec.validate()?;
    let clock = Instant::now();
    let source = spec.source.resolve(spec.dim)?;
    let p = spec.p_values[0];
    let cfg = SolverConfig { record_trajectory: true, ..spec.solver.clone() };
    let mut records = Vec::new();
    let mut samples = Vec::new();
    for &n in &spec.n_values {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(spec, n, p));
        let inst = generate_instance(n, p, &Rotation::identity(spec.dim), &source, &mut rng)?;
        let runs: Vec<Result<(EnvelopeRecord, Vec<TrajectorySample>)>> =
            (0..spec.trials).into_par_iter().map(|k| run_start(&inst, spec, &cfg, n, p, k)).collect();
        for run in runs {
            let (r, s) = run?;
            records.push(r);
            samples.extend(s);
        }
    }
    Ok(EnvelopeResult { spec: spec.clone(), records, samples, wall_time_secs: clock.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_envelope() {
        let mut spec = ExperimentSpec::init_envelope();
        spec.n_values = vec![64];
        spec.trials = 12;
        let r = run_init_envelope(&spec).unwrap();
        assert_eq!(r.records.len(), 12);
        for rec in &r.records {
            if rec.converged {
                assert!(rec.final_angle < 1e-2);
                assert!(rec.t_cvg.is_some());
            }
        }
        for s in &r.samples {
            assert!(s.remaining_time >= 0.0);
        }
        assert_eq!(r, run_init_envelope(&spec).unwrap());
        let fit = r.fit(64, 2.0);
        assert!(fit.fraction_within >= 0.0 && fit.fraction_within <= 1.0);
    }
}
