//! The `mdsolve` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a mathematical check or solver
//! invariant fails, 2 on usage, parse or I/O errors.

mod bench;
mod verify;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::error::{MdError, Result};
use crate::instances::{
    generate_max_quadratic, load_instance, make_known_solution_instance, save_instance,
    to_json_string, FixtureKind, ProblemInstance,
};
use crate::solvers::{
    adaptive_cap, run_adaptive_with, run_partial_adaptive_with, run_restarted, RestartReport,
    SolveOptions, SolveTrace, StepKind,
};

pub use bench::{bench_rows, BenchRow};
pub use verify::verify_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const TRACE_HEADER: &str = "k,kind,h,f,g,grad_dual_norm,vf_if_known";

type TraceWriter = Box<dyn Fn(&mut dyn Write) -> io::Result<()>>;

#[derive(Parser, Debug)]
#[command(
    name = "mdsolve",
    version,
    about = "Mirror Descent for convex problems with a functional constraint"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a problem instance as JSON.
    Generate(GenerateArgs),
    /// Run one solver and write its trace.
    Solve(SolveArgs),
    /// Run the solvers and check every bound that applies.
    Verify(VerifyArgs),
    /// Sweep ε and tabulate theoretical against observed iteration counts.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Adaptive,
    Partial,
    Restart,
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Instance JSON file.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "fixture",
        required_unless_present = "fixture"
    )]
    pub instance: Option<PathBuf>,
    /// Built-in fixture instead of a file: active-linear,
    /// strongly-convex-ball or max-quadratic-linear.
    #[arg(long, value_name = "NAME")]
    pub fixture: Option<String>,
}

impl InstanceArgs {
    pub fn load(&self) -> Result<ProblemInstance> {
        match (&self.instance, &self.fixture) {
            (Some(path), _) => load_instance(path),
            (None, Some(name)) => Ok(make_known_solution_instance(FixtureKind::from_name(name)?)),
            (None, None) => Err(MdError::input("either --instance or --fixture is required")),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Iteration cap of the adaptive method as a multiple of its bound.
    #[arg(long, default_value_t = crate::solvers::DEFAULT_CAP_MULTIPLIER)]
    pub cap_multiplier: f64,
    /// Initial squared radius for restarts; defaults to the largest squared
    /// distance from the start point to the feasible set.
    #[arg(long = "r0-sq", value_name = "R")]
    pub r0_sq: Option<f64>,
    /// Seed for the reference solver used when no known optimum is stored.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// `max-quadratic` for a random instance, or a fixture name.
    #[arg(long, default_value = "max-quadratic")]
    pub kind: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub pieces: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Partial)]
    pub algorithm: AlgorithmArg,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Trace CSV (per iteration; per restart for `restart`).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Summary file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Verify a single method; by default adaptive and partial, plus
    /// restart when μ > 0.
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the table here as well as to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Partial)]
    pub algorithm: AlgorithmArg,
    /// Comma-separated accuracies.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub epsilon_list: Vec<f64>,
    /// Whitespace-separated data file for plotting.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn init_logging() {
    let level = match std::env::var("MD_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

/// Exit code for a library error.
pub fn exit_code(err: &MdError) -> i32 {
    match err {
        MdError::InvariantViolation(_) | MdError::MissingSolution(_) => EXIT_CHECK_FAILED,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing regular output to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// `{:.16e}`: 17 significant digits with a `.` separator.
pub(crate) fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| MdError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = if args.kind == "max-quadratic" {
        generate_max_quadratic(args.dim, args.pieces, args.seed)?
    } else {
        make_known_solution_instance(FixtureKind::from_name(&args.kind).map_err(|_| {
            MdError::input(format!(
                "unknown kind `{}`; expected max-quadratic, {}",
                args.kind,
                FixtureKind::ALL.map(|k| k.name()).join(", ")
            ))
        })?)
    };
    match &args.out {
        Some(path) => {
            save_instance(&inst, path)?;
            info!("wrote {}", path.display());
        }
        None => out.write_all(to_json_string(&inst).as_bytes())?,
    }
    Ok(EXIT_OK)
}

/// Writes the per-iteration trace CSV.
pub fn write_trace_csv(trace: &SolveTrace, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.iterations {
        let kind = match r.kind {
            StepKind::Productive => "productive",
            StepKind::NonProductive => "nonproductive",
        };
        let vf = r.vf.map(real).unwrap_or_default();
        writeln!(
            w,
            "{},{kind},{},{},{},{},{vf}",
            r.k,
            real(r.step_size),
            real(r.f_value),
            real(r.g_value),
            real(r.grad_dual_norm)
        )?;
    }
    Ok(())
}

/// Writes one CSV row per restart.
pub fn write_restart_csv(report: &RestartReport, w: &mut dyn Write) -> io::Result<()> {
    let dim = report.final_point.dim();
    let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    writeln!(
        w,
        "p,r_p_sq,eps_p,inner_accuracy,inner_iterations,productive,dist_sq_if_known,{}",
        coords.join(",")
    )?;
    for r in &report.restarts {
        let dist = r.dist_sq_to_solution.map(real).unwrap_or_default();
        let x: Vec<String> = r.x_p.iter().map(|v| real(*v)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{dist},{}",
            r.p,
            real(r.r_p_sq),
            real(r.eps_p),
            real(r.inner_accuracy),
            r.inner_iterations,
            r.productive_count,
            x.join(",")
        )?;
    }
    Ok(())
}

/// Start point and squared radius for the restart scheme.
pub(crate) fn restart_start(
    inst: &ProblemInstance,
    r0_sq: Option<f64>,
) -> (crate::geometry::Point, f64) {
    let x0 = inst.setup().center().clone();
    let r0_sq = r0_sq.unwrap_or_else(|| inst.setup().max_dist_sq_from(&x0));
    (x0, r0_sq)
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = args.instance.load()?;
    let started = Instant::now();
    let options = SolveOptions {
        retain_iterates: false,
        ..SolveOptions::for_instance(&inst)
    };
    let (summary, trace_writer): (String, TraceWriter) = match args.algorithm {
        AlgorithmArg::Adaptive | AlgorithmArg::Partial => {
            let trace = if args.algorithm == AlgorithmArg::Adaptive {
                let cap = adaptive_cap(&inst, args.epsilon, args.solver.cap_multiplier)?;
                run_adaptive_with(&inst, args.epsilon, Some(cap), &options)?
            } else {
                run_partial_adaptive_with(&inst, args.epsilon, &options)?
            };
            let elapsed = started.elapsed().as_secs_f64();
            let summary = format!(
                "algorithm={} N={} |I|={} |J|={} f(x_bar)={} g(x_bar)={} stop={} time={elapsed:.6}s",
                format!("{:?}", trace.algorithm).to_lowercase(),
                trace.total_iterations,
                trace.productive_count,
                trace.nonproductive_count,
                real(trace.output_f),
                real(trace.output_g),
                format!("{:?}", trace.stop_reason).to_lowercase(),
            );
            (summary, Box::new(move |w| write_trace_csv(&trace, w)))
        }
        AlgorithmArg::Restart => {
            let (x0, r0_sq) = restart_start(&inst, args.solver.r0_sq);
            let report = run_restarted(&inst, args.epsilon, &x0, r0_sq)?;
            let elapsed = started.elapsed().as_secs_f64();
            let productive: usize = report.restarts.iter().map(|r| r.productive_count).sum();
            let x = report.final_point.coords();
            let summary = format!(
                "algorithm=restart p_hat={} N={} |I|={} |J|={} f(x_bar)={} g(x_bar)={} bound={} time={elapsed:.6}s",
                report.p_hat,
                report.total_inner_iterations,
                productive,
                report.total_inner_iterations - productive,
                real(inst.objective().value(x)?),
                real(inst.constraint().value(x)?),
                report.iteration_bound,
            );
            (summary, Box::new(move |w| write_restart_csv(&report, w)))
        }
    };
    if let Some(path) = &args.trace {
        let mut w = create(path)?;
        trace_writer(&mut w)?;
        w.flush()?;
    }
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{summary}")?;
            w.flush()?;
        }
        None => writeln!(out, "{summary}")?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = args.instance.load()?;
    let reports = verify_suite(&inst, args.epsilon, args.algorithm, &args.solver)?;
    let mut table = String::new();
    for r in &reports {
        table.push_str(&format!("{r}\n"));
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    table.push_str(&format!(
        "{} checks, {} passed, {failed} failed or not run\n",
        reports.len(),
        reports.len() - failed
    ));
    out.write_all(table.as_bytes())?;
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        w.write_all(table.as_bytes())?;
        w.flush()?;
    }
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    if args.epsilon_list.is_empty() {
        return Err(MdError::input("--epsilon-list is empty"));
    }
    let inst = args.instance.load()?;
    let rows = bench_rows(&inst, args.algorithm, &args.epsilon_list, &args.solver)?;
    let header = "eps theoretical_N iterations f_gap g_violation time_s";
    writeln!(out, "algorithm={:?}", args.algorithm)?;
    writeln!(
        out,
        "{:>24} {:>12} {:>12} {:>24} {:>24} {:>10}",
        "eps", "theory_N", "actual_N", "f_gap", "g_violation", "time_s"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>24} {:>12} {:>12} {:>24} {:>24} {:>10.4}",
            real(r.epsilon),
            r.theoretical_n,
            r.iterations,
            real(r.f_gap),
            real(r.g_violation),
            r.seconds
        )?;
    }
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        writeln!(w, "# {header}")?;
        for r in &rows {
            writeln!(
                w,
                "{} {} {} {} {} {:.6}",
                real(r.epsilon),
                r.theoretical_n,
                r.iterations,
                real(r.f_gap),
                real(r.g_violation),
                r.seconds
            )?;
        }
        w.flush()?;
    }
    Ok(EXIT_OK)
}
