use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hllk_core::galilean::{integrate_eom, TrajectoryParams};
use hllk_core::maxwell::write_field_csv;
use hllk_core::{Constants, Vec3};
use hllk_cli::config::{parse_tolerance, parse_triple, RunConfig};
use hllk_cli::suites::{reference_field, run_suite, Suite};

#[derive(Parser)]
#[command(name = "hllk", version, about = "Verification suites for the helix, canonical, SO(3) and field modules")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", global = true, value_parser = parse_tolerance)]
    tol: Vec<(String, f64)>,
    /// Report path (CSV path for trajectory export). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// SO(3) quadrature nodes per axis, `n1,n2,n3`.
    #[arg(long, global = true, value_parser = parse_triple::<usize>)]
    grid: Option<[usize; 3]>,
    /// Periodic box side for field checks.
    #[arg(long = "box", global = true)]
    box_side: Option<f64>,
    /// Record wall time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Helix checks, or CSV export when parameters are given.
    Trajectory(TrajectoryArgs),
    /// Rate-matrix identities, canonical flow and Poisson brackets.
    Canonical,
    /// Flow-map experiment and phase-space equation convergence.
    Flow,
    /// SO(3) quadrature, operator matrices, ordering and dispersion.
    So3,
    /// Basis change, helicity eigensystem, field equations and energy.
    Maxwell(MaxwellArgs),
    /// Every acceptance criterion.
    VerifyAll,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[arg(long, value_parser = parse_triple::<f64>, allow_hyphen_values = true)]
    omega: Option<[f64; 3]>,
    #[arg(long, value_parser = parse_triple::<f64>, allow_hyphen_values = true)]
    v0: Option<[f64; 3]>,
    #[arg(long, value_parser = parse_triple::<f64>, allow_hyphen_values = true)]
    x0: Option<[f64; 3]>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Extra sample times added to the `k·dt` grid; repeatable.
    #[arg(long)]
    at: Vec<f64>,
}

#[derive(Args)]
struct MaxwellArgs {
    /// Write the reference superposition as mode JSON.
    #[arg(long)]
    modes_out: Option<PathBuf>,
    /// Write the reference superposition sampled on a 4³ lattice as CSV.
    #[arg(long)]
    field_csv: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Checks,
}

fn build_config(common: &CommonArgs) -> Result<RunConfig, String> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_file(path).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    for (name, value) in &common.tol {
        config.tolerances.insert(name.clone(), *value);
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    if let Some(grid) = common.grid {
        config.grid = grid;
    }
    if let Some(l) = common.box_side {
        config.box_side = l;
    }
    config.timing |= common.timing;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_failure(what: &str, path: Option<&Path>, e: io::Error) -> Failure {
    let target = path.map_or_else(|| "stdout".to_string(), |p| p.display().to_string());
    Failure::Usage(format!("cannot write {what} to {target}: {e}"))
}

fn trajectory_export(args: &TrajectoryArgs, config: &RunConfig) -> Result<(), Failure> {
    let need = |v: Option<[f64; 3]>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("trajectory export needs --{flag}")));
    let omega = need(args.omega, "omega")?;
    let v0 = need(args.v0, "v0")?;
    let x0 = args.x0.unwrap_or([0.0; 3]);
    let t_max = args.t_max.ok_or_else(|| Failure::Usage("trajectory export needs --t-max".into()))?;
    if !(t_max >= 0.0 && t_max.is_finite()) || !(args.dt > 0.0 && args.dt.is_finite()) {
        return Err(Failure::Usage("--t-max must be >= 0 and --dt > 0".into()));
    }
    if let Some(t) = args.at.iter().find(|t| !(**t >= 0.0 && **t <= t_max)) {
        return Err(Failure::Usage(format!("--at {t} lies outside [0, t-max]")));
    }
    let params = TrajectoryParams::new(Vec3::from(x0), Vec3::from(v0), Vec3::from(omega))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let steps = (t_max / args.dt).round() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| (k as f64 * args.dt).min(t_max)).collect();
    times.push(t_max);
    times.extend(&args.at);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let trajectory = integrate_eom(&params, &times, args.dt).map_err(|e| Failure::Usage(e.to_string()))?;
    let path = config.out.as_deref();
    let mut out = open_output(path).map_err(|e| io_failure("trajectory", path, e))?;
    trajectory.write_csv(&mut out).and_then(|_| out.flush()).map_err(|e| io_failure("trajectory", path, e))
}

fn maxwell_artifacts(args: &MaxwellArgs, config: &RunConfig) -> Result<(), Failure> {
    if args.modes_out.is_none() && args.field_csv.is_none() {
        return Ok(());
    }
    let field = reference_field(config).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(path) = &args.modes_out {
        std::fs::write(path, field.to_json() + "\n").map_err(|e| io_failure("modes", Some(path), e))?;
    }
    if let Some(path) = &args.field_csv {
        let h = config.box_side / 4.0;
        let mut points = Vec::with_capacity(64);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    points.push((Vec3::new(i as f64, j as f64, k as f64) * h, field.t0()));
                }
            }
        }
        let file = File::create(path).map_err(|e| io_failure("field", Some(path), e))?;
        let mut out = BufWriter::new(file);
        write_field_csv(&field, &points, &Constants::default(), &mut out)
            .and_then(|_| out.flush())
            .map_err(|e| io_failure("field", Some(path), e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = build_config(&cli.common).map_err(Failure::Usage)?;
    let suite = match &cli.command {
        Command::Trajectory(args) if args.omega.is_some() || args.v0.is_some() || args.t_max.is_some() => {
            return trajectory_export(args, &config);
        }
        Command::Trajectory(_) => Suite::Trajectory,
        Command::Canonical => Suite::Canonical,
        Command::Flow => Suite::Flow,
        Command::So3 => Suite::So3,
        Command::Maxwell(args) => {
            maxwell_artifacts(args, &config)?;
            Suite::Maxwell
        }
        Command::VerifyAll => Suite::VerifyAll,
    };
    let report = run_suite(suite, &config);
    let path = config.out.as_deref();
    let mut out = open_output(path).map_err(|e| io_failure("report", path, e))?;
    out.write_all(report.to_json().as_bytes()).and_then(|_| out.flush()).map_err(|e| io_failure("report", path, e))?;
    for check in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {} value={:?} tolerance={:e}", check.name, check.value, check.tolerance);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("hllk: {msg}");
            ExitCode::from(2)
        }
    }
}
