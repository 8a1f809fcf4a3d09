use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperest::experiments::{
    matched_recon, matched_stepper, read_csv, recompute_eoc, run_ode_study, run_study, write_csv,
    write_plot_data, OdeProblem, OdeStudyConfig, RunConfig,
};
use hyperest::flux::FluxKind;
use hyperest::ode_recon::{DerivativeMode, ReconSpec};
use hyperest::time_integration::Stepper;
use hyperest::Error;

#[derive(Parser)]
#[command(
    name = "hyperest",
    version,
    about = "DG convergence studies with a posteriori error bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linear advection of a cosine profile.
    Advection(StudyArgs),
    /// Euler pressure wave, errors against a refined reference run.
    Euler(StudyArgs),
    /// Burgers run past shock formation.
    Burgers(StudyArgs),
    /// Scalar ODE residual study.
    Ode(OdeArgs),
    /// Recompute the EOC columns of an existing CSV.
    Eoc(EocArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// TOML run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Polynomial degree; also re-pairs stepper and reconstruction unless given.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_parser = parse_flux)]
    flux: Option<FluxKind>,
    #[arg(long)]
    mu: Option<f64>,
    /// CFL cap checked before any computation.
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long, value_parser = parse_stepper)]
    stepper: Option<Stepper>,
    /// Temporal reconstruction, e.g. `H(0,0,-1)`.
    #[arg(long, value_parser = parse_recon, allow_hyphen_values = true)]
    recon: Option<ReconSpec>,
    /// Report the bound even when the solution leaves the compact box.
    #[arg(long)]
    force: bool,
    /// Directory for two-column plot files.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run levels one after another.
    #[arg(long)]
    serial: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct OdeArgs {
    #[arg(long, value_parser = parse_problem, default_value = "decay")]
    problem: OdeProblem,
    #[arg(long, value_parser = parse_stepper, default_value = "rk3_ssp")]
    stepper: Stepper,
    /// Defaults to the reconstruction matched to the stepper order.
    #[arg(long, value_parser = parse_recon, allow_hyphen_values = true)]
    recon: Option<ReconSpec>,
    /// How second derivatives are obtained: exact, directional or backward_fd.
    #[arg(long, value_parser = parse_mode, default_value = "directional")]
    mode: DerivativeMode,
    #[arg(long, default_value_t = 6)]
    levels: usize,
    #[arg(long, default_value_t = 0.1)]
    tau0: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EocArgs {
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_flux(s: &str) -> Result<FluxKind, String> {
    FluxKind::parse(s).ok_or_else(|| format!("unknown flux {s:?}"))
}

fn parse_stepper(s: &str) -> Result<Stepper, String> {
    Stepper::parse(s).ok_or_else(|| format!("unknown stepper {s:?}"))
}

fn parse_recon(s: &str) -> Result<ReconSpec, String> {
    ReconSpec::parse(s).ok_or_else(|| format!("expected H(p,d,r), got {s:?}"))
}

fn parse_mode(s: &str) -> Result<DerivativeMode, String> {
    DerivativeMode::parse(s).ok_or_else(|| format!("unknown derivative mode {s:?}"))
}

fn parse_problem(s: &str) -> Result<OdeProblem, String> {
    OdeProblem::parse(s).ok_or_else(|| format!("unknown problem {s:?}"))
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn build_config(preset: fn(usize) -> RunConfig, args: &StudyArgs) -> hyperest::Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => preset(args.q.unwrap_or(1)),
    };
    if let Some(q) = args.q {
        config.q = q;
        config.stepper = matched_stepper(q);
        config.recon = matched_recon(config.stepper.order());
    }
    if let Some(s) = args.stepper {
        config.stepper = s;
        if args.recon.is_none() {
            config.recon = matched_recon(s.order());
        }
    }
    if let Some(r) = args.recon {
        config.recon = r;
    }
    if let Some(l) = args.levels {
        config.levels = l;
    }
    if let Some(f) = args.flux {
        config.flux.kind = f;
    }
    if let Some(mu) = args.mu {
        config.flux.mu = mu;
    }
    if let Some(c) = args.cfl {
        config.cfl_cap = c;
    }
    if args.force {
        config.estimator.force = true;
    }
    if args.serial {
        config.parallel = false;
    }
    Ok(config)
}

fn study(preset: fn(usize) -> RunConfig, args: &StudyArgs) -> hyperest::Result<ExitCode> {
    let config = build_config(preset, args)?;
    if args.dump_config {
        print!("{}", config.to_toml()?);
        return Ok(ExitCode::SUCCESS);
    }
    let report = run_study(&config)?;
    for (level, msg) in report.failures() {
        eprintln!("level {level}: {msg}");
    }
    write_csv(&report.csv_rows(), output(&args.out)?)?;
    if let Some(dir) = &args.plot_data {
        write_plot_data(&report, dir)?;
    }
    if report.assumption_violated() && !config.estimator.force {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn ode(args: &OdeArgs) -> hyperest::Result<ExitCode> {
    let recon = args
        .recon
        .unwrap_or_else(|| matched_recon(args.stepper.order()))
        .with_mode(args.mode);
    let mut config = OdeStudyConfig::new(args.problem, args.stepper, recon);
    config.levels = args.levels;
    config.tau0 = args.tau0;
    config.t_end = args.t_end;
    let report = run_ode_study(&config)?;
    let mut out = output(&args.out)?;
    writeln!(
        out,
        "level,tau,residual_linf,residual_l2,error_linf,bound_linf,bound_l2,eoc_residual_linf,eoc_error"
    )?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for (k, l) in report.levels.iter().enumerate() {
        writeln!(
            out,
            "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            l.tau,
            l.residual.linf,
            l.residual.l2,
            l.error_linf,
            l.bound.bound_linf,
            l.bound.bound_l2,
            opt(l.eoc_residual_linf),
            opt(l.eoc_error)
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn eoc(args: &EocArgs) -> hyperest::Result<ExitCode> {
    let mut rows = read_csv(&args.input)?;
    recompute_eoc(&mut rows);
    write_csv(&rows, output(&args.out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Advection(a) => study(RunConfig::advection, a),
        Command::Euler(a) => study(RunConfig::euler, a),
        Command::Burgers(a) => study(|_| RunConfig::burgers(), a),
        Command::Ode(a) => ode(a),
        Command::Eoc(a) => eoc(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                Error::AssumptionViolated { .. } => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
