//! Monte Carlo experiments: recovery phase grids, initialization envelopes
//! and single runs, with CSV, manifest and SVG output.

mod envelope;
mod grid;
mod output;
mod spec;
mod stats;
mod svg;
mod verify;

pub use envelope::{run_init_envelope, EnvelopeFit, EnvelopeRecord, EnvelopeResult, TrajectorySample};
pub use grid::{run_phase_grid, run_single, GridCell, GridResult, SingleResult, SolverOutcome};
pub use output::{emit_outputs, grid_csv, load_manifest, ExperimentOutput, Manifest, OutputFiles};
pub use spec::{parse_n_grid, parse_p_grid, ExperimentKind, ExperimentSpec, SolverKind, SourceSpec};
pub use stats::{median, spearman};
pub use verify::{verify_sphere, MeanCheck, SmallBallCheck, SphereCheck};
