//! Estimators of the ground-truth rotation.

mod config;
mod convhull;
mod irls;
mod projected;
mod riemannian;
mod wahba;

pub use config::{LineSearch, SolverConfig, SolverReport, StepSchedule, Termination, TrajectoryPoint};
pub use convhull::{
    membership_conv_so, project_conv_so, project_even_parity, signed_svd, Membership, MembershipStatus,
    SignedSpectrum, MAX_MEMBERSHIP_DIM,
};
pub use irls::solve_lud_unconstrained;
pub use projected::solve_lud_conv_so;
pub use riemannian::solve_lud_so;
pub use wahba::solve_wahba_ls;
