use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use rotreg::analysis::{lambda_star, ThresholdTable};
use rotreg::experiment::{
    emit_outputs, load_manifest, parse_n_grid, parse_p_grid, run_init_envelope, run_phase_grid, run_single,
    verify_sphere, ExperimentKind, ExperimentOutput, ExperimentSpec, SolverKind, SourceSpec,
};
use rotreg::numeric::format_sig;

/// Robust rotation registration experiments.
#[derive(Parser, Debug)]
#[command(name = "rotreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Empirical recovery probability over a grid of sample sizes and
    /// corruption levels.
    PhaseGrid(RunArgs),
    /// Convergence time of the Riemannian method against the initial angle.
    InitEnvelope(RunArgs),
    /// All selected solvers on one instance.
    Single(RunArgs),
    /// Corruption thresholds and witness scales.
    Analyze(AnalyzeArgs),
    /// Monte Carlo check of the sphere expectations.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat TOML file with any of the flags below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run exactly the experiment recorded in a manifest.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// Comma list or `a:b:geometric`.
    #[arg(long)]
    n_grid: Option<String>,
    /// Comma list or `a:b:k`.
    #[arg(long)]
    p_grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma list of so, conv, unconstrained, ls.
    #[arg(long)]
    solvers: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Point cloud (xyz/csv or ASCII PLY) to draw points from instead of
    /// the sphere.
    #[arg(long)]
    cloud: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    recovery_tol: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Iterations of the convex solver.
    #[arg(long)]
    conv_iters: Option<usize>,
    /// Constant of the boundary curves drawn over the heatmaps.
    #[arg(long)]
    overlay_c: Option<f64>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    dim: Option<usize>,
    n_grid: Option<String>,
    p_grid: Option<String>,
    trials: Option<usize>,
    solvers: Option<String>,
    seed: Option<u64>,
    cloud: Option<PathBuf>,
    out: Option<PathBuf>,
    recovery_tol: Option<f64>,
    alpha_max: Option<f64>,
    max_iters: Option<usize>,
    conv_iters: Option<usize>,
    overlay_c: Option<f64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Dimensions to tabulate, `a:b` or a comma list.
    #[arg(long, default_value = "2:12")]
    dims: String,
    /// Corruption level for the witness scale.
    #[arg(long, default_value_t = 0.8)]
    p: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "3,4,6")]
    dims: String,
    #[arg(long, default_value_t = 1_000_000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::PhaseGrid(args) => experiment(ExperimentKind::PhaseGrid, args),
        Command::InitEnvelope(args) => experiment(ExperimentKind::InitEnvelope, args),
        Command::Single(args) => experiment(ExperimentKind::SingleRun, args),
        Command::Analyze(args) => analyze(args),
        Command::Verify(args) => verify(args),
    }
}

fn read_config(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn base_spec(kind: ExperimentKind) -> ExperimentSpec {
    match kind {
        ExperimentKind::PhaseGrid => ExperimentSpec::phase_grid(3),
        ExperimentKind::InitEnvelope => ExperimentSpec::init_envelope(),
        ExperimentKind::SingleRun => ExperimentSpec::single_run(3, 1024, 0.5),
    }
}

fn build_spec(kind: ExperimentKind, args: &RunArgs) -> Result<(ExperimentSpec, PathBuf), Failure> {
    let file = match &args.config {
        Some(path) => read_config(path)?,
        None => FileConfig::default(),
    };
    let mut spec = base_spec(kind);
    if let Some(d) = args.dim.or(file.dim) {
        spec.dim = d;
    }
    if let Some(g) = args.n_grid.as_ref().or(file.n_grid.as_ref()) {
        spec.n_values = parse_n_grid(g).map_err(usage)?;
    }
    if let Some(g) = args.p_grid.as_ref().or(file.p_grid.as_ref()) {
        spec.p_values = parse_p_grid(g).map_err(usage)?;
    }
    if let Some(t) = args.trials.or(file.trials) {
        spec.trials = t;
    }
    if let Some(s) = args.solvers.as_ref().or(file.solvers.as_ref()) {
        spec.solvers = SolverKind::parse_list(s).map_err(usage)?;
    }
    if let Some(s) = args.seed.or(file.seed) {
        spec.base_seed = s;
    }
    if let Some(c) = args.cloud.clone().or(file.cloud) {
        spec.source = SourceSpec::Cloud(c);
    }
    if let Some(t) = args.recovery_tol.or(file.recovery_tol) {
        spec.recovery_tol = t;
    }
    if let Some(a) = args.alpha_max.or(file.alpha_max) {
        spec.solver.alpha_max = a;
    }
    if let Some(m) = args.max_iters.or(file.max_iters) {
        spec.solver.max_iters = m;
    }
    if let Some(m) = args.conv_iters.or(file.conv_iters) {
        spec.solver.step_schedule.max_iters = m;
    }
    if let Some(c) = args.overlay_c.or(file.overlay_c) {
        spec.overlay_c = c;
    }
    spec.validate().map_err(usage)?;
    let out = args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("results"));
    Ok((spec, out))
}

fn experiment(kind: ExperimentKind, args: RunArgs) -> Result<(), Failure> {
    let (spec, out) = match &args.manifest {
        Some(path) => {
            let manifest = load_manifest(path).map_err(runtime)?;
            if manifest.spec.kind != kind {
                return Err(usage(format!(
                    "manifest {} records a {:?} experiment",
                    path.display(),
                    manifest.spec.kind
                )));
            }
            (manifest.spec, args.out.clone().unwrap_or_else(|| PathBuf::from("results")))
        }
        None => build_spec(kind, &args)?,
    };

    let result = match kind {
        ExperimentKind::PhaseGrid => ExperimentOutput::Grid(run_phase_grid(&spec).map_err(runtime)?),
        ExperimentKind::InitEnvelope => ExperimentOutput::Envelope(run_init_envelope(&spec).map_err(runtime)?),
        ExperimentKind::SingleRun => ExperimentOutput::Single(run_single(&spec).map_err(runtime)?),
    };
    summarize(&result);
    let files = emit_outputs(&result, &spec, &out).map_err(runtime)?;
    for f in files.csv.iter().chain(std::iter::once(&files.manifest)).chain(files.figure.iter()) {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn summarize(result: &ExperimentOutput) {
    match result {
        ExperimentOutput::Grid(g) => {
            println!("{:<16} {:>6} {:>6} {:>10}", "solver", "N", "p", "recovered");
            for c in &g.cells {
                println!("{:<16} {:>6} {:>6} {:>6}/{:<3}", c.solver, c.n, format_sig(c.p, 4), c.recoveries, c.trials);
            }
            println!("wall time {:.1}s", g.wall_time_secs);
        }
        ExperimentOutput::Envelope(e) => {
            for &n in &e.spec.n_values {
                let fit = e.fit(n, 2.0);
                println!(
                    "N={n:<5} converged {}/{}  offset {}  within 2T(s)+offset {}  spearman {}",
                    fit.converged,
                    e.spec.trials,
                    format_sig(fit.offset, 4),
                    format_sig(fit.fraction_within, 4),
                    fit.spearman.map_or("n/a".to_string(), |r| format_sig(r, 4))
                );
            }
        }
        ExperimentOutput::Single(s) => {
            println!("N={} p={} seed={}", s.n, s.p, s.seed);
            for o in &s.outcomes {
                println!("{:<16} error {:<14} iterations {}", o.solver, format_sig(o.error, 6), o.iterations);
            }
        }
    }
}

fn parse_dims(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || usage(format!("invalid dimension list `{s}`"));
    let dims: Vec<usize> = match s.split_once(':') {
        Some((a, b)) => {
            let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            (a..=b).collect()
        }
        None => s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?,
    };
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(bad());
    }
    Ok(dims)
}

fn analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let dims = parse_dims(&args.dims)?;
    println!("d,p_tilde,beta_ratio,lambda_star,failure_bound");
    for t in ThresholdTable::range(dims) {
        let l = lambda_star(t.dim, args.p).ok();
        println!(
            "{},{},{},{},{}",
            t.dim,
            format_sig(t.p_tilde, 12),
            format_sig(t.beta_ratio, 12),
            l.map(|v| format_sig(v, 12)).unwrap_or_default(),
            l.map(|v| format_sig(v * (t.dim as f64).sqrt() / 4.0, 12)).unwrap_or_default()
        );
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let dims = parse_dims(&args.dims)?;
    if args.pairs < 2 {
        return Err(usage("at least two pairs are needed"));
    }
    println!("d,quantity,estimate,std_error,closed_form,z");
    let mut small = Vec::new();
    for d in dims {
        let c = verify_sphere(d, args.pairs, args.seed, &[0.1, 0.5, 1.0]).map_err(usage)?;
        for (name, m) in [("mean_dist", c.mean_dist), ("inv_prod", c.inv_prod)] {
            println!(
                "{d},{name},{},{},{},{}",
                format_sig(m.estimate, 8),
                format_sig(m.std_error, 4),
                format_sig(m.closed_form, 8),
                format_sig(m.z_score(), 3)
            );
        }
        small.push((d, c.small_ball));
    }
    println!();
    println!("d,delta,empirical,exact,published_bound,bound_holds");
    for (d, checks) in small {
        for s in checks {
            println!(
                "{d},{},{},{},{},{}",
                s.delta,
                format_sig(s.empirical, 6),
                format_sig(s.exact, 6),
                format_sig(s.bound, 6),
                s.bound_holds()
            );
        }
    }
    Ok(())
}
