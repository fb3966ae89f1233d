use serde::{Deserialize, Serialize};

use crate::cost::{DegenerateSelection, DEFAULT_DEGENERACY_TOL};
use crate::{Error, Matrix, Result};

/// Backtracking parameters of the geodesic line search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub shrink: f64,
    pub max_probes: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch { shrink: 0.5, max_probes: 30 }
    }
}

/// Diminishing steps `initial / k^decay` of the projected subgradient method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub initial: f64,
    pub decay: f64,
    pub max_iters: usize,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { initial: 1.0, decay: 0.5, max_iters: 20_000 }
    }
}

impl StepSchedule {
    pub fn step(&self, k: usize) -> f64 {
        self.initial / (k as f64).powf(self.decay)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Largest step tried by the line search.
    pub alpha_max: f64,
    /// Stop once `|A_k - A_{k-1}|_F` (or the cost change for reweighting)
    /// falls below this.
    pub stop_tol: f64,
    pub degeneracy_tol: f64,
    /// Subgradient element used on vanishing residuals by the Riemannian
    /// method.
    pub selection: DegenerateSelection,
    pub line_search: LineSearch,
    pub step_schedule: StepSchedule,
    /// Keep every iterate of the Riemannian method with its flow time.
    pub record_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            alpha_max: 1.0,
            stop_tol: 1e-8,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            selection: DegenerateSelection::Smoothed,
            line_search: LineSearch::default(),
            step_schedule: StepSchedule::default(),
            record_trajectory: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_max", self.alpha_max),
            ("stop_tol", self.stop_tol),
            ("degeneracy_tol", self.degeneracy_tol),
            ("step_schedule.initial", self.step_schedule.initial),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.line_search.shrink > 0.0 && self.line_search.shrink < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "line search shrink must lie in (0, 1), got {}",
                self.line_search.shrink
            )));
        }
        if self.step_schedule.decay < 0.0 {
            return Err(Error::InvalidSpec("step decay must be non-negative".into()));
        }
        if self.max_iters == 0 || self.line_search.max_probes == 0 || self.step_schedule.max_iters == 0 {
            return Err(Error::InvalidSpec("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    /// The line search found no decrease.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub flow_time: f64,
    pub iterate: Matrix,
}

#[derive(Clone, Debug)]
pub struct SolverReport {
    pub final_iterate: Matrix,
    pub cost_trace: Vec<f64>,
    /// Sum of accepted step sizes.
    pub flow_time: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// `|final - R0|_F`.
    pub recovery_error: f64,
    /// Set when a degenerate case was hit (singular reweighted system,
    /// tied projection).
    pub degenerate: bool,
    /// Minimum slack of the conv SO(d) membership certificate of the final
    /// iterate, for the convex solver.
    pub membership_slack: Option<f64>,
    /// Starting point first, then every accepted iterate.
    pub trajectory: Vec<TrajectoryPoint>,
}

impl SolverReport {
    pub fn final_cost(&self) -> f64 {
        *self.cost_trace.last().expect("cost trace starts with the initial cost")
    }
}
