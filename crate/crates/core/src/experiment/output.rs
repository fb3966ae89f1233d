use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{finite_time_bound, p_tilde};
use crate::numeric::format_sig;
use crate::{Error, Result};

use super::envelope::EnvelopeResult;
use super::grid::{GridResult, SingleResult};
use super::spec::{ExperimentKind, ExperimentSpec};
use super::svg::{envelope_svg, phase_grid_svg};

const DIGITS: usize = 12;

pub enum ExperimentOutput {
    Grid(GridResult),
    Envelope(EnvelopeResult),
    Single(SingleResult),
}

impl ExperimentOutput {
    pub fn spec_kind(&self) -> ExperimentKind {
        match self {
            ExperimentOutput::Grid(_) => ExperimentKind::PhaseGrid,
            ExperimentOutput::Envelope(_) => ExperimentKind::InitEnvelope,
            ExperimentOutput::Single(_) => ExperimentKind::SingleRun,
        }
    }
}

/// Reproducibility record written next to the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub spec: ExperimentSpec,
    /// How per-trial generator seeds derive from the base seed.
    pub seed_scheme: String,
    pub p_tilde: f64,
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec: spec.clone(),
            seed_scheme: "chacha8(splitmix64(base_seed, N, bits(p), trial))".to_string(),
            p_tilde: if spec.dim >= 2 { p_tilde(spec.dim) } else { f64::NAN },
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, Default)]
pub struct OutputFiles {
    pub csv: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub figure: Option<PathBuf>,
}

fn num(x: f64) -> String {
    format_sig(x, DIGITS)
}

/// `solver,N,p,trials,recoveries,mean_error,mean_iters,mean_flow_time`.
pub fn grid_csv(result: &GridResult) -> String {
    let mut out = String::from("solver,N,p,trials,recoveries,mean_error,mean_iters,mean_flow_time\n");
    for c in &result.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.solver,
            c.n,
            num(c.p),
            c.trials,
            c.recoveries,
            num(c.mean_error),
            num(c.mean_iters),
            num(c.mean_flow_time)
        ));
    }
    out
}

fn envelope_csv(result: &EnvelopeResult) -> (String, String) {
    let (d, p) = (result.spec.dim, result.spec.p_values[0]);
    let mut records = String::from("N,start,initial_angle,converged,t_cvg,final_angle,iterations,time_bound\n");
    for r in &result.records {
        records.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.start,
            num(r.initial_angle),
            r.converged,
            r.t_cvg.map(num).unwrap_or_default(),
            num(r.final_angle),
            r.iterations,
            num(finite_time_bound(d, p, r.initial_angle).unwrap_or(f64::INFINITY))
        ));
    }
    let mut traj = String::from("N,start,angle,remaining_time\n");
    for s in &result.samples {
        traj.push_str(&format!("{},{},{},{}\n", s.n, s.start, num(s.angle), num(s.remaining_time)));
    }
    (records, traj)
}

fn single_csv(result: &SingleResult) -> String {
    let mut out = String::from("solver,N,p,error,iterations,flow_time,failed\n");
    for o in &result.outcomes {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            o.solver,
            result.n,
            num(result.p),
            num(o.error),
            o.iterations,
            num(o.flow_time),
            o.failed
        ));
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `results.csv`, `manifest.json` and a figure into `out_dir`
/// (created if missing). Outputs depend only on the result, never on timing.
pub fn emit_outputs(result: &ExperimentOutput, spec: &ExperimentSpec, out_dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = OutputFiles::default();
    match result {
        ExperimentOutput::Grid(g) => {
            files.csv.push(write(out_dir.join("results.csv"), &grid_csv(g))?);
            files.figure = Some(write(out_dir.join("phase_grid.svg"), &phase_grid_svg(g))?);
        }
        ExperimentOutput::Envelope(e) => {
            let (records, traj) = envelope_csv(e);
            files.csv.push(write(out_dir.join("results.csv"), &records)?);
            files.csv.push(write(out_dir.join("trajectory.csv"), &traj)?);
            files.figure = Some(write(out_dir.join("envelope.svg"), &envelope_svg(e))?);
        }
        ExperimentOutput::Single(s) => {
            files.csv.push(write(out_dir.join("results.csv"), &single_csv(s))?);
        }
    }
    let manifest = serde_json::to_string_pretty(&Manifest::new(spec))?;
    files.manifest = write(out_dir.join("manifest.json"), &manifest)?;
    Ok(files)
}
