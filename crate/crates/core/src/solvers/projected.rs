use crate::cost::{lud_cost, lud_subgradient};
use crate::datamodel::RegistrationInstance;
use crate::{Matrix, Result};

use super::config::{SolverConfig, SolverReport, Termination};
use super::convhull::{membership_conv_so, project_conv_so, MAX_MEMBERSHIP_DIM};

/// Projected subgradient method over `conv SO(d)` with steps from
/// `cfg.step_schedule`; returns the best iterate seen. The initial point is
/// projected first.
pub fn solve_lud_conv_so(inst: &RegistrationInstance, init: &Matrix, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let schedule = cfg.step_schedule;
    let mut a = project_conv_so(init);
    let mut cost = lud_cost(&a, inst);
    let mut best = (a.clone(), cost);
    let mut cost_trace = vec![cost];
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    let mut flow_time = 0.0;

    while iterations < schedule.max_iters {
        let grad = lud_subgradient(&a, inst, cfg.degeneracy_tol).euclid_grad;
        if grad.iter().all(|&v| v == 0.0) {
            termination = Termination::Converged;
            break;
        }
        iterations += 1;
        let step = schedule.step(iterations);
        a = project_conv_so(&(&a - grad * step));
        cost = lud_cost(&a, inst);
        flow_time += step;
        if cost < best.1 {
            best = (a.clone(), cost);
        }
        cost_trace.push(best.1);
    }

    let (final_iterate, _) = best;
    let membership_slack = if inst.dim() <= MAX_MEMBERSHIP_DIM {
        Some(membership_conv_so(&final_iterate, 1e-6)?.min_slack())
    } else {
        None
    };
    let recovery_error = (&final_iterate - inst.ground_truth().matrix()).norm();
    Ok(SolverReport {
        final_iterate,
        cost_trace,
        flow_time,
        iterations,
        termination,
        recovery_error,
        degenerate: false,
        membership_slack,
        trajectory: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::datamodel::{generate_instance, PointSource};
    use crate::sogeom::{random_rotation, Rotation};
    use crate::solvers::solve_wahba_ls;

    #[test]
    fn clean_data_converges_to_truth() {
        let mut g = ChaCha8Rng::seed_from_u64(1);
        let r0 = random_rotation(3, &mut g);
        let inst = generate_instance(100, 0.0, &r0, &PointSource::Sphere, &mut g).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.step_schedule.max_iters = 100_000;
        let rep = solve_lud_conv_so(&inst, &Matrix::zeros(3, 3), &cfg).unwrap();
        assert!(rep.recovery_error < 1e-3, "error {}", rep.recovery_error);
        let warm = solve_wahba_ls(&inst).value.into_matrix();
        let rep = solve_lud_conv_so(&inst, &warm, &cfg).unwrap();
        assert_eq!(rep.termination, Termination::Converged);
        assert!(rep.recovery_error < 1e-9);
        assert!(rep.membership_slack.unwrap() >= -1e-6);
        assert!(rep.cost_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn best_cost_never_exceeds_initial() {
        let mut g = ChaCha8Rng::seed_from_u64(2);
        let inst = generate_instance(300, 0.7, &Rotation::identity(3), &PointSource::Sphere, &mut g).unwrap();
        let init = solve_wahba_ls(&inst).value.into_matrix();
        let mut cfg = SolverConfig::default();
        cfg.step_schedule.max_iters = 2000;
        let rep = solve_lud_conv_so(&inst, &init, &cfg).unwrap();
        assert!(rep.final_cost() <= lud_cost(&init, &inst));
        assert!(rep.membership_slack.unwrap() >= -1e-6);
    }
}
