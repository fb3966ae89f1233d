use crate::cost::{lud_cost, riemannian_subgradient_with};
use crate::datamodel::RegistrationInstance;
use crate::sogeom::{ExpPath, Rotation};
use crate::Result;

use super::config::{SolverConfig, SolverReport, Termination, TrajectoryPoint};

/// Riemannian subgradient descent over `SO(d)` with a backtracking line
/// search along geodesics: `R_k = R_{k-1} exp(-a_k G_k)` with
/// `G_k = skew(R_{k-1}^T grad)`, accepting the first step that strictly
/// lowers the cost.
pub fn solve_lud_so(inst: &RegistrationInstance, init: &Rotation, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let mut r = init.clone();
    let mut cost = lud_cost(r.matrix(), inst);
    let mut cost_trace = vec![cost];
    let mut flow_time = 0.0;
    let mut trajectory = Vec::new();
    if cfg.record_trajectory {
        trajectory.push(TrajectoryPoint { flow_time, iterate: r.matrix().clone() });
    }
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let (grad, _) = riemannian_subgradient_with(&r, inst, cfg.degeneracy_tol, cfg.selection);
        if grad.frobenius_norm() == 0.0 {
            termination = Termination::Converged;
            break;
        }
        let path = ExpPath::new(&grad.scaled(-1.0));
        let mut alpha = cfg.alpha_max;
        let mut accepted = None;
        for _ in 0..cfg.line_search.max_probes {
            let candidate = &r * &path.at(alpha);
            let c = lud_cost(candidate.matrix(), inst);
            if c < cost {
                accepted = Some((candidate, c));
                break;
            }
            alpha *= cfg.line_search.shrink;
        }
        let Some((next, next_cost)) = accepted else {
            termination = Termination::Stalled;
            break;
        };
        iterations += 1;
        let change = (next.matrix() - r.matrix()).norm();
        r = next;
        cost = next_cost;
        flow_time += alpha;
        cost_trace.push(cost);
        if cfg.record_trajectory {
            trajectory.push(TrajectoryPoint { flow_time, iterate: r.matrix().clone() });
        }
        if change < cfg.stop_tol {
            termination = Termination::Converged;
            break;
        }
    }

    let recovery_error = (r.matrix() - inst.ground_truth().matrix()).norm();
    Ok(SolverReport {
        final_iterate: r.into_matrix(),
        cost_trace,
        flow_time,
        iterations,
        termination,
        recovery_error,
        degenerate: false,
        membership_slack: None,
        trajectory,
    })
}
