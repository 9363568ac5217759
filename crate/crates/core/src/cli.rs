//! Command-line front end. Exit codes: 0 success, 1 verdict failure or
//! non-convergence, 2 usage or parse error.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::load_operator;
use crate::error::{Error, Result};
use crate::evolve::{load_field, propagate, save_field, write_trajectory_csv, DensityMatrix};
use crate::landscape::{
    central_difference_gradient, gradient, kinematic_residual, spanning_rank_with_tol,
    write_span_report, write_visit_csv, RANK_TOL,
};
use crate::matspace::{unitarity_defect, CMatrix};
use crate::model::{check_hypotheses, default_offdiag_tol, load_system, QuantumSystem};
use crate::reachability::lie_closure;
use crate::steer::{synthesize_through_waypoints, SteerOptions};
use crate::waypoints::{
    default_theta_grid, load_waypoints, save_waypoints, theorem1_waypoints, theorem3_waypoints,
    Provenance, WaypointSet,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qwaypoint", version, about = "Way-point non-singularity checks for bilinear quantum control")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the standing hypotheses of one or more system files.
    Validate(ValidateArgs),
    /// Lie-closure dimension and controllability verdict.
    Controllability(ControllabilityArgs),
    /// Build a way-point set and report the span of its conjugated dipoles.
    Waypoints(WaypointsArgs),
    /// Propagate a control field and optionally export the trajectory.
    Propagate(PropagateArgs),
    /// Trajectory independence, gradient and kinematic residual for a field.
    Check(CheckArgs),
    /// Compare the analytic gradient with central differences.
    GradientCheck(GradientCheckArgs),
    /// Synthesize a field whose propagator visits a way-point list.
    Steer(SteerArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long = "system", required = true, num_args = 1..)]
    pub systems: Vec<PathBuf>,
    /// Off-diagonal tolerance (default 1e-12·‖μ‖_F).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also require every off-diagonal dipole entry to be nonzero.
    #[arg(long)]
    pub require_offdiag: bool,
    /// Directory for `<stem>.hypotheses.json` reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ControllabilityArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Write the closure basis as CSV to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WaypointsArgs {
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Dimension, for the dipole-independent set without a system file.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "theorem1")]
    pub provenance: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative singular-value tolerance for the rank.
    #[arg(long, default_value_t = RANK_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    /// Write `trajectory.csv` (t, Re/Im of U) into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    /// Initial density matrix (operator file).
    #[arg(long)]
    pub rho0: Option<PathBuf>,
    /// Observable (operator file).
    #[arg(long)]
    pub obs: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = RANK_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct GradientCheckArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    /// Default: ground-state projector.
    #[arg(long)]
    pub rho0: Option<PathBuf>,
    /// Default: projector on the highest level.
    #[arg(long)]
    pub obs: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    /// Relative max-norm tolerance.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SteerArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Way-point file; overrides --provenance.
    #[arg(long)]
    pub waypoints: Option<PathBuf>,
    #[arg(long, default_value = "theorem1")]
    pub provenance: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub segment_t: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub fid_target: Option<f64>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    pool.install(|| match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation { .. }
        | Error::NotControllable { .. }
        | Error::NoWitness { .. }
        | Error::Postcondition(_) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Validate(a) => cmd_validate(&a),
        Command::Controllability(a) => cmd_controllability(&a),
        Command::Waypoints(a) => cmd_waypoints(&a),
        Command::Propagate(a) => cmd_propagate(&a),
        Command::Check(a) => cmd_check(&a),
        Command::GradientCheck(a) => cmd_gradient_check(&a),
        Command::Steer(a) => cmd_steer(&a),
    }
}

fn read_system(path: &Path) -> Result<QuantumSystem> {
    load_system(BufReader::new(File::open(path)?))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_operator(path: &Path, n: usize) -> Result<CMatrix> {
    let m = load_operator(BufReader::new(File::open(path)?))?;
    crate::matspace::ensure_same_dim(n, m.nrows())?;
    Ok(m)
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let outcomes: Vec<(PathBuf, std::result::Result<crate::model::HypothesisReport, Error>)> = a
        .systems
        .par_iter()
        .map(|p| {
            let r = read_system(p).map(|sys| {
                let tol = a.tol.unwrap_or_else(|| default_offdiag_tol(&sys));
                check_hypotheses(&sys, tol)
            });
            (p.clone(), r)
        })
        .collect();

    let mut code = EXIT_OK;
    for (path, outcome) in outcomes {
        match outcome {
            Ok(report) => {
                let failed = report.failures(a.require_offdiag);
                println!(
                    "{}: zero_trace={} symmetric={} offdiag_nonzero={} controllable={} (dim {}) -> {}",
                    path.display(),
                    report.zero_trace,
                    report.symmetric,
                    report.offdiag_nonzero,
                    report.controllable,
                    report.closure_dimension,
                    if failed.is_empty() { "OK".to_string() } else { format!("FAILED: {}", failed.join(", ")) }
                );
                if let Some(dir) = &a.out {
                    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
                    write_json(dir, &format!("{stem}.hypotheses.json"), &report)?;
                }
                if !failed.is_empty() {
                    code = code.max(EXIT_FAIL);
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = code.max(exit_code(&e));
            }
        }
    }
    Ok(code)
}

fn cmd_controllability(a: &ControllabilityArgs) -> Result<i32> {
    let sys = read_system(&a.system)?;
    let cl = lie_closure(sys.h0(), sys.mu());
    println!("dimension {}", cl.dimension);
    println!("verdict {}", cl.verdict);
    if let Some(dir) = &a.out {
        let n = sys.dim();
        let mut w = csv::Writer::from_writer(create(dir, "lie_basis.csv")?);
        let mut header = vec!["element".to_string()];
        for i in 1..=n {
            for j in 1..=n {
                header.push(format!("m{i}_{j}_re"));
                header.push(format!("m{i}_{j}_im"));
            }
        }
        w.write_record(&header)?;
        for (k, b) in cl.basis.iter().enumerate() {
            let mut rec = vec![(k + 1).to_string()];
            for i in 0..n {
                for j in 0..n {
                    rec.push(b[(i, j)].re.to_string());
                    rec.push(b[(i, j)].im.to_string());
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(if cl.verdict.is_controllable() { EXIT_OK } else { EXIT_FAIL })
}

fn build_set(provenance: Provenance, sys: Option<&QuantumSystem>, n: Option<usize>) -> Result<WaypointSet> {
    match provenance {
        Provenance::Theorem1 => {
            let sys = sys.ok_or_else(|| Error::InvalidArgument("theorem1 way-points need --system".into()))?;
            theorem1_waypoints(&sys.dipole())
        }
        Provenance::Theorem3 => {
            let n = match (sys, n) {
                (Some(s), Some(n)) if s.dim() != n => {
                    return Err(Error::DimensionMismatch { expected: s.dim(), got: n })
                }
                (Some(s), _) => s.dim(),
                (None, Some(n)) => n,
                (None, None) => return Err(Error::InvalidArgument("theorem3 way-points need --n or --system".into())),
            };
            theorem3_waypoints(n, &default_theta_grid())
        }
        Provenance::Custom => Err(Error::InvalidArgument("custom sets are loaded from a file".into())),
    }
}

fn cmd_waypoints(a: &WaypointsArgs) -> Result<i32> {
    let provenance: Provenance = a.provenance.parse()?;
    let sys = a.system.as_deref().map(read_system).transpose()?;
    let set = build_set(provenance, sys.as_ref(), a.n)?;
    println!("{} way-points, N = {}", set.len(), set.dim());
    if let Some(dir) = &a.out {
        let mut w = create(dir, "waypoints.json")?;
        save_waypoints(&set, &mut w)?;
        w.flush()?;
    }
    let Some(sys) = sys else {
        println!("no system given: span not evaluated");
        return Ok(EXIT_OK);
    };
    let report = spanning_rank_with_tol(&set.conjugated_dipoles(&sys.dipole())?, a.tol)?;
    println!("span {} (σ_min/σ_max = {:e})", report.verdict(), report.condition_ratio());
    if let Some(dir) = &a.out {
        let mut w = create(dir, "span.csv")?;
        write_span_report(&report, &mut w)?;
        w.flush()?;
    }
    Ok(if report.full { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_propagate(a: &PropagateArgs) -> Result<i32> {
    let sys = read_system(&a.system)?;
    let field = load_field(BufReader::new(File::open(&a.field)?))?;
    let traj = propagate(&sys, &field);
    let u = traj.final_unitary().matrix();
    println!("steps {} horizon {}", field.steps(), field.horizon());
    println!("||U*U - I||_F = {:e}", unitarity_defect(u));
    for i in 0..sys.dim() {
        let row: Vec<String> = (0..sys.dim()).map(|j| format!("{:+.6}{:+.6}i", u[(i, j)].re, u[(i, j)].im)).collect();
        println!("  {}", row.join("  "));
    }
    if let Some(dir) = &a.out {
        let mut w = create(dir, "trajectory.csv")?;
        write_trajectory_csv(&traj, &mut w)?;
        w.flush()?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckSummary {
    verdict: String,
    rank: usize,
    samples: usize,
    kinematic_residual: Option<f64>,
    gradient_max_abs: Option<f64>,
    gradient: Option<Vec<f64>>,
}

fn cmd_check(a: &CheckArgs) -> Result<i32> {
    let sys = read_system(&a.system)?;
    let field = load_field(BufReader::new(File::open(&a.field)?))?;
    let operators = match (&a.rho0, &a.obs) {
        (Some(r), Some(o)) => {
            let rho0 = DensityMatrix::new(read_operator(r, sys.dim())?)?;
            Some((rho0, read_operator(o, sys.dim())?))
        }
        (None, None) => None,
        _ => return Err(Error::InvalidArgument("--rho0 and --obs go together".into())),
    };

    let traj = propagate(&sys, &field);
    let dipoles = traj.dipoles();
    let report = spanning_rank_with_tol(dipoles, a.tol)?;
    println!("trajectory span {} over {} samples", report.verdict(), dipoles.len());

    let mut summary = CheckSummary {
        verdict: report.verdict(),
        rank: report.rank,
        samples: dipoles.len(),
        kinematic_residual: None,
        gradient_max_abs: None,
        gradient: None,
    };
    if let Some((rho0, obs)) = &operators {
        let res = kinematic_residual(traj.final_unitary(), rho0, obs)?;
        let g = gradient(&sys, &field, rho0, obs)?;
        println!("kinematic residual {res:e}");
        println!("gradient max |g_m| {:e}", g.max_abs());
        summary.kinematic_residual = Some(res);
        summary.gradient_max_abs = Some(g.max_abs());
        summary.gradient = Some(g.into_vec());
    }
    if let Some(dir) = &a.out {
        let mut w = create(dir, "span.csv")?;
        write_span_report(&report, &mut w)?;
        w.flush()?;
        write_json(dir, "check.json", &summary)?;
    }
    Ok(if report.full { EXIT_OK } else { EXIT_FAIL })
}

fn projector(n: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(k, k)] = crate::matspace::c(1.0, 0.0);
    m
}

fn cmd_gradient_check(a: &GradientCheckArgs) -> Result<i32> {
    let sys = read_system(&a.system)?;
    let n = sys.dim();
    let field = load_field(BufReader::new(File::open(&a.field)?))?;
    let rho0 = match &a.rho0 {
        Some(p) => DensityMatrix::new(read_operator(p, n)?)?,
        None => DensityMatrix::basis_state(n, 0)?,
    };
    let obs = match &a.obs {
        Some(p) => read_operator(p, n)?,
        None => projector(n, n - 1),
    };
    let g = gradient(&sys, &field, &rho0, &obs)?;
    let fd = central_difference_gradient(&sys, &field, &rho0, &obs, a.h)?;
    let err = g.values().iter().zip(fd.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = g.max_abs();
    let rel = if scale > 0.0 { err / scale } else { err };
    println!("max |g| {scale:e}, max |g - fd| {err:e}, relative {rel:e}");
    Ok(if rel < a.tol { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_steer(a: &SteerArgs) -> Result<i32> {
    let sys = read_system(&a.system)?;
    let set = match &a.waypoints {
        Some(p) => load_waypoints(BufReader::new(File::open(p)?))?,
        None => build_set(a.provenance.parse()?, Some(&sys), None)?,
    };
    let mut opts = SteerOptions::for_system(&sys);
    opts.seed = a.seed;
    if let Some(v) = a.segment_t {
        opts.segment_t = v;
    }
    if let Some(v) = a.steps {
        opts.steps_per_segment = v;
    }
    if let Some(v) = a.max_iters {
        opts.max_iters = v;
    }
    if let Some(v) = a.fid_target {
        opts.fid_target = v;
    }
    if let Some(v) = a.step_size {
        opts.step_size = v;
    }

    let out = synthesize_through_waypoints(&sys, &set, &opts)?;
    for v in &out.visits {
        println!("way-point {:>3}: fidelity {:.6} at t = {:.4}{}", v.index, v.fidelity, v.time, if v.visited { "" } else { "  (missed)" });
    }
    println!("trajectory span {}", out.span.verdict());
    if let Some(dir) = &a.out {
        let mut w = create(dir, "field.json")?;
        save_field(&out.field, &mut w)?;
        w.flush()?;
        let mut w = create(dir, "visits.csv")?;
        write_visit_csv(&out.visits, &mut w)?;
        w.flush()?;
    }
    if out.success() {
        Ok(EXIT_OK)
    } else {
        if !out.all_visited() {
            eprintln!("not all way-points reached fidelity {}", opts.fid_target);
        }
        Ok(EXIT_FAIL)
    }
}
