use nalgebra::linalg::Cholesky;

use crate::cost::lud_cost;
use crate::datamodel::RegistrationInstance;
use crate::{Matrix, Result};

use super::config::{SolverConfig, SolverReport, Termination};

const INITIAL_SMOOTHING: f64 = 1.0;
const SMOOTHING_FLOOR: f64 = 1e-10;

/// Least unsquared deviation over all `d x d` matrices by reweighted least
/// squares with weights `1 / max(|r_i|, eps)`; `eps` is halved whenever the
/// cost stops moving and the run ends once it reaches its floor.
pub fn solve_lud_unconstrained(inst: &RegistrationInstance, init: &Matrix, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let d = inst.dim();
    let mut a = init.clone();
    let mut cost = lud_cost(&a, inst);
    let mut cost_trace = vec![cost];
    let mut eps = INITIAL_SMOOTHING;
    let mut degenerate = false;
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    let mut residual = vec![0.0; d];

    while iterations < cfg.max_iters {
        let mut xx = Matrix::zeros(d, d);
        let mut yx = Matrix::zeros(d, d);
        for (x, y) in inst.x().rows().zip(inst.y().rows()) {
            crate::datamodel::mat_vec(&a, x, &mut residual);
            let norm = residual.iter().zip(y).map(|(r, yi)| (r - yi) * (r - yi)).sum::<f64>().sqrt();
            let w = 1.0 / norm.max(eps);
            for i in 0..d {
                for j in 0..d {
                    xx[(i, j)] += w * x[i] * x[j];
                    yx[(i, j)] += w * y[i] * x[j];
                }
            }
        }
        let chol = Cholesky::new(xx.clone()).or_else(|| {
            degenerate = true;
            let scale = xx.norm().max(1.0);
            Cholesky::new(xx + Matrix::identity(d, d) * (eps * scale))
        });
        let Some(chol) = chol else {
            termination = Termination::Stalled;
            break;
        };
        // A = (Y W X^T)(X W X^T)^{-1}; solve on the transposed system.
        let next = chol.solve(&yx.transpose()).transpose();
        let next_cost = lud_cost(&next, inst);
        iterations += 1;
        let stagnant = (cost - next_cost).abs() <= cfg.stop_tol * cost.max(1.0);
        a = next;
        cost = next_cost;
        cost_trace.push(cost);
        if stagnant {
            if eps <= SMOOTHING_FLOOR {
                termination = Termination::Converged;
                break;
            }
            eps = (eps * 0.5).max(SMOOTHING_FLOOR);
        }
    }

    let recovery_error = (&a - inst.ground_truth().matrix()).norm();
    Ok(SolverReport {
        final_iterate: a,
        cost_trace,
        flow_time: 0.0,
        iterations,
        termination,
        recovery_error,
        degenerate,
        membership_slack: None,
        trajectory: Vec::new(),
    })
}
