use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::datamodel::{generate_instance, PointSource, RegistrationInstance};
use crate::numeric::{pairwise_sum, trial_seed};
use crate::sogeom::{project_to_so, Rotation};
use crate::solvers::{solve_lud_conv_so, solve_lud_so, solve_lud_unconstrained, solve_wahba_ls, SolverConfig};
use crate::Result;

use super::spec::{ExperimentSpec, SolverKind};

/// Result of one estimator on one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOutcome {
    pub solver: String,
    /// `|A* - R0|_F`, `NaN` when the run failed.
    pub error: f64,
    pub iterations: usize,
    pub flow_time: f64,
    pub failed: bool,
}

impl SolverOutcome {
    fn ok(solver: &str, error: f64, iterations: usize, flow_time: f64) -> Self {
        SolverOutcome { solver: solver.to_string(), error, iterations, flow_time, failed: false }
    }

    fn failed(solver: &str) -> Self {
        SolverOutcome { solver: solver.to_string(), error: f64::NAN, iterations: 0, flow_time: 0.0, failed: true }
    }
}

/// Output labels of a solver; the convex solver also reports its estimate
/// rounded to the nearest rotation.
fn labels(kind: SolverKind) -> &'static [&'static str] {
    match kind {
        SolverKind::So => &["so"],
        SolverKind::Conv => &["conv", "conv-projected"],
        SolverKind::Unconstrained => &["unconstrained"],
        SolverKind::Ls => &["ls"],
    }
}

fn run_solver(kind: SolverKind, inst: &RegistrationInstance, ls: &Rotation, cfg: &SolverConfig) -> Vec<SolverOutcome> {
    let r0 = inst.ground_truth().matrix();
    match kind {
        SolverKind::So => vec![match solve_lud_so(inst, ls, cfg) {
            Ok(r) => SolverOutcome::ok("so", r.recovery_error, r.iterations, r.flow_time),
            Err(_) => SolverOutcome::failed("so"),
        }],
        SolverKind::Conv => match solve_lud_conv_so(inst, ls.matrix(), cfg) {
            Ok(r) => {
                let rounded = project_to_so(&r.final_iterate).value;
                vec![
                    SolverOutcome::ok("conv", r.recovery_error, r.iterations, r.flow_time),
                    SolverOutcome::ok("conv-projected", (rounded.matrix() - r0).norm(), r.iterations, r.flow_time),
                ]
            }
            Err(_) => vec![SolverOutcome::failed("conv"), SolverOutcome::failed("conv-projected")],
        },
        SolverKind::Unconstrained => vec![match solve_lud_unconstrained(inst, ls.matrix(), cfg) {
            Ok(r) => SolverOutcome::ok("unconstrained", r.recovery_error, r.iterations, 0.0),
            Err(_) => SolverOutcome::failed("unconstrained"),
        }],
        SolverKind::Ls => vec![SolverOutcome::ok("ls", (ls.matrix() - r0).norm(), 0, 0.0)],
    }
}

/// Draws the instance of one trial; the ground truth is the identity.
fn trial_instance(spec: &ExperimentSpec, source: &PointSource, n: usize, p: f64, trial: usize) -> Result<RegistrationInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.base_seed, n, p, trial));
    generate_instance(n, p, &Rotation::identity(spec.dim), source, &mut rng)
}

/// Every selected solver on one trial, initialized at the least-squares
/// rotation.
fn run_trial(spec: &ExperimentSpec, source: &PointSource, n: usize, p: f64, trial: usize) -> Vec<SolverOutcome> {
    let all_labels = spec.solvers.iter().flat_map(|&k| labels(k).iter().copied());
    let Ok(inst) = trial_instance(spec, source, n, p, trial) else {
        return all_labels.map(SolverOutcome::failed).collect();
    };
    let ls = solve_wahba_ls(&inst).value;
    spec.solvers.iter().flat_map(|&k| run_solver(k, &inst, &ls, &spec.solver)).collect()
}

/// Aggregate over the trials of one `(solver, N, p)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCell {
    pub solver: String,
    pub n: usize,
    pub p: f64,
    pub trials: usize,
    /// Trials with `|A* - R0|_F <= recovery_tol`.
    pub recoveries: usize,
    /// Trials whose solver returned an error; excluded from the means.
    pub failures: usize,
    pub mean_error: f64,
    pub mean_iters: f64,
    pub mean_flow_time: f64,
}

impl GridCell {
    pub fn recovery_rate(&self) -> f64 {
        self.recoveries as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridResult {
    pub spec: ExperimentSpec,
    /// Ordered by solver (selection order), then `N`, then `p`.
    pub cells: Vec<GridCell>,
    /// Not part of the outcome; excluded from comparisons and CSV output.
    pub wall_time_secs: f64,
}

impl PartialEq for GridResult {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.cells == other.cells
    }
}

impl GridResult {
    pub fn cell(&self, solver: &str, n: usize, p: f64) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.solver == solver && c.n == n && c.p == p)
    }
}

fn aggregate(solver: &str, n: usize, p: f64, outcomes: &[&SolverOutcome], tol: f64) -> GridCell {
    let ok: Vec<&&SolverOutcome> = outcomes.iter().filter(|o| !o.failed).collect();
    let mean = |f: &dyn Fn(&SolverOutcome) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            pairwise_sum(&ok.iter().map(|o| f(o)).collect::<Vec<_>>()) / ok.len() as f64
        }
    };
    GridCell {
        solver: solver.to_string(),
        n,
        p,
        trials: outcomes.len(),
        recoveries: ok.iter().filter(|o| o.error <= tol).count(),
        failures: outcomes.len() - ok.len(),
        mean_error: mean(&|o| o.error),
        mean_iters: mean(&|o| o.iterations as f64),
        mean_flow_time: mean(&|o| o.flow_time),
    }
}

/// Runs every `(N, p, trial)` combination in parallel. Each trial seeds its
/// own generator from `(base_seed, N, p, trial)`, so the result does not
/// depend on scheduling.
pub fn run_phase_grid(spec: &ExperimentSpec) -> Result<GridResult> {
    spec.validate()?;
    let start = Instant::now();
    let source = spec.source.resolve(spec.dim)?;
    let jobs: Vec<(usize, f64, usize)> = spec
        .n_values
        .iter()
        .flat_map(|&n| spec.p_values.iter().flat_map(move |&p| (0..spec.trials).map(move |t| (n, p, t))))
        .collect();
    let outcomes: Vec<Vec<SolverOutcome>> =
        jobs.par_iter().map(|&(n, p, t)| run_trial(spec, &source, n, p, t)).collect();

    let all_labels: Vec<&str> = spec.solvers.iter().flat_map(|&k| labels(k).iter().copied()).collect();
    let mut cells = Vec::new();
    for (slot, label) in all_labels.iter().enumerate() {
        for (ni, &n) in spec.n_values.iter().enumerate() {
            for (pi, &p) in spec.p_values.iter().enumerate() {
                let base = (ni * spec.p_values.len() + pi) * spec.trials;
                let cell: Vec<&SolverOutcome> = (0..spec.trials).map(|t| &outcomes[base + t][slot]).collect();
                cells.push(aggregate(label, n, p, &cell, spec.recovery_tol));
            }
        }
    }
    Ok(GridResult { spec: spec.clone(), cells, wall_time_secs: start.elapsed().as_secs_f64() })
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleResult {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub outcomes: Vec<SolverOutcome>,
}

/// One instance at the first `(N, p)` of the spec, every selected solver.
pub fn run_single(spec: &ExperimentSpec) -> Result<SingleResult> {
    spec.validate()?;
    let source = spec.source.resolve(spec.dim)?;
    let (n, p) = (spec.n_values[0], spec.p_values[0]);
    let inst = trial_instance(spec, &source, n, p, 0)?;
    let ls = solve_wahba_ls(&inst).value;
    let outcomes = spec.solvers.iter().flat_map(|&k| run_solver(k, &inst, &ls, &spec.solver)).collect();
    Ok(SingleResult { n, p, seed: trial_seed(spec.base_seed, n, p, 0), outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        let mut s = ExperimentSpec::phase_grid(3);
        s.n_values = vec![16, 32];
        s.p_values = vec![0.0, 0.5];
        s.trials = 3;
        s.solver.step_schedule.max_iters = 3000;
        s
    }

    #[test]
    fn clean_cells_always_recover() {
        let mut s = small_spec();
        s.p_values = vec![0.0];
        let r = run_phase_grid(&s).unwrap();
        assert_eq!(r.cells.len(), 5 * 2);
        for c in &r.cells {
            assert_eq!(c.recoveries, c.trials, "{c:?}");
            assert_eq!(c.failures, 0);
        }
    }

    #[test]
    fn grid_is_deterministic_and_ordered() {
        let s = small_spec();
        let a = run_phase_grid(&s).unwrap();
        let b = run_phase_grid(&s).unwrap();
        assert_eq!(a, b);
        let order: Vec<(&str, usize, f64)> = a.cells.iter().map(|c| (c.solver.as_str(), c.n, c.p)).take(4).collect();
        assert_eq!(order, vec![("so", 16, 0.0), ("so", 16, 0.5), ("so", 32, 0.0), ("so", 32, 0.5)]);
        assert!(a.cell("conv-projected", 32, 0.5).is_some());
        assert!(a.cells.iter().all(|c| c.recoveries <= c.trials));
    }

    #[test]
    fn single_run_reports_every_label() {
        let mut s = ExperimentSpec::single_run(3, 64, 0.3);
        s.solver.step_schedule.max_iters = 2000;
        let r = run_single(&s).unwrap();
        let names: Vec<&str> = r.outcomes.iter().map(|o| o.solver.as_str()).collect();
        assert_eq!(names, vec!["so", "conv", "conv-projected", "unconstrained", "ls"]);
    }
}
