use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use vi_kit::harness::{self, ExperimentSpec, Generator, Scale};
use vi_kit::{
    load_problem, save_problem, solve, validate_params, Error, RunReport, SolverConfig,
    Termination, VIProblem,
};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_MAX_ITER: u8 = 2;
const EXIT_PARAMS: u8 = 3;
const EXIT_INVARIANTS: u8 = 4;

const THREADS_VAR: &str = "VI_KIT_THREADS";

#[derive(Parser)]
#[command(
    name = "vi-kit",
    version,
    about = "Projection-type solvers for variational inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem instance with one solver configuration.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a canned experiment and write its tables and histories.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check (alpha, sigma, delta, beta) against the convergence conditions.
    ValidateParams {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
    },
    /// Generate a problem instance file.
    GenInstance {
        #[arg(long, value_enum)]
        generator: GeneratorArg,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve with per-iteration invariant checks and summarize violations.
    CheckInvariants {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Example1,
    Example2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Antidiagonal,
    Hp,
    PseudomonotoneHp,
}

impl From<GeneratorArg> for Generator {
    fn from(g: GeneratorArg) -> Self {
        match g {
            GeneratorArg::Antidiagonal => Generator::Antidiagonal,
            GeneratorArg::Hp => Generator::Hp,
            GeneratorArg::PseudomonotoneHp => Generator::PseudomonotoneHp,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ParametersRejected { .. } => EXIT_PARAMS,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(context: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", context.display()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::from(EXIT_OK),
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve {
            problem,
            config,
            out,
        } => cmd_solve(&problem, &config, &out),
        Command::Reproduce {
            example,
            scale,
            out,
        } => cmd_reproduce(example, scale, out),
        Command::ValidateParams {
            alpha,
            sigma,
            delta,
            beta,
        } => Ok(cmd_validate(alpha, sigma, delta, beta)),
        Command::GenInstance {
            generator,
            m,
            k,
            seed,
            out,
        } => {
            let problem = Generator::from(generator).generate(m, k, seed)?;
            write_parent(&out)?;
            save_problem(&problem, &out)?;
            println!("wrote {}", out.display());
            Ok(EXIT_OK)
        }
        Command::CheckInvariants { problem, config } => cmd_check(&problem, &config),
    }
}

fn read_inputs(problem: &Path, config: &Path) -> Result<(VIProblem, SolverConfig), Failure> {
    let p = load_problem(problem).map_err(|e| input_error(problem, e))?;
    let text = fs::read_to_string(config).map_err(|e| input_error(config, e))?;
    let cfg: SolverConfig = serde_json::from_str(&text).map_err(|e| input_error(config, e))?;
    Ok((p, cfg))
}

fn write_parent(path: &Path) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| input_error(dir, e))?;
    }
    Ok(())
}

fn cmd_solve(problem: &Path, config: &Path, out: &Path) -> Result<u8, Failure> {
    let (p, cfg) = read_inputs(problem, config)?;
    let report = solve(&p, &cfg)?;
    fs::create_dir_all(out).map_err(|e| input_error(out, e))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| input_error(out, e))?;
    fs::write(out.join("report.json"), json).map_err(|e| input_error(out, e))?;
    let run_id = format!("{}-{}", p.meta.generator, report.algorithm.label());
    harness::write_history(&out.join("history.csv"), &run_id, &report)?;
    print_summary(&report);
    Ok(if report.termination == Termination::MaxIter {
        EXIT_MAX_ITER
    } else {
        EXIT_OK
    })
}

fn print_summary(report: &RunReport) {
    println!(
        "{}: {:?} after {} iterations, {} inner evaluations, {:.3} s, |x| = {:.3e}",
        report.algorithm.label(),
        report.termination,
        report.iterations,
        report.inner_evals,
        report.wall_seconds,
        report.final_x.norm_sq().sqrt()
    );
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure {
                code: EXIT_INPUT,
                message: format!("{THREADS_VAR} must be a positive integer, got {v:?}"),
            }),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_reproduce(example: Example, scale: ScaleArg, out: PathBuf) -> Result<u8, Failure> {
    let mut spec: ExperimentSpec = match (example, scale) {
        (Example::Example1, _) => harness::example1_spec(Some(out.clone())),
        (Example::Example2, ScaleArg::Desk) => {
            harness::example2_spec(Scale::Desk, Some(out.clone()))
        }
        (Example::Example2, ScaleArg::Paper) => {
            harness::example2_spec(Scale::Paper, Some(out.clone()))
        }
    };
    spec.threads = threads_from_env()?;
    let table = harness::run_experiment(&spec)?;
    println!(
        "{:>5} {:>5} {:>12} {:>6} {:>12} {:>9} {:>9}",
        "m", "k", "algorithm", "runs", "converged", "med_iter", "med_init"
    );
    for s in &table.summary {
        println!(
            "{:>5} {:>5} {:>12} {:>6} {:>12} {:>9} {:>9}",
            s.m,
            s.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            s.algorithm,
            s.runs,
            s.converged,
            s.median_iter,
            s.median_init
        );
    }
    for row in table.rows.iter().filter(|r| r.error.is_some()) {
        println!(
            "run {} failed: {}",
            row.run_id,
            row.error.as_deref().unwrap_or_default()
        );
    }
    println!("wrote {}", out.display());
    Ok(EXIT_OK)
}

fn cmd_validate(alpha: f64, sigma: f64, delta: f64, beta: f64) -> u8 {
    let c = validate_params(alpha, sigma, delta, beta);
    println!("alpha={alpha} sigma={sigma} delta={delta} beta={beta}");
    println!(
        "delta must exceed {:.6} (slack {:.6})",
        c.delta_bound,
        delta - c.delta_bound
    );
    println!(
        "beta must stay below {:.6} (slack {:.6})",
        c.beta_bound,
        c.beta_bound - beta
    );
    println!(
        "margin {:.6}: {}",
        c.margin,
        if c.valid { "valid" } else { "invalid" }
    );
    if c.valid {
        EXIT_OK
    } else {
        EXIT_PARAMS
    }
}

fn cmd_check(problem: &Path, config: &Path) -> Result<u8, Failure> {
    let (p, mut cfg) = read_inputs(problem, config)?;
    if p.known_solution.is_none() {
        return Err(input_error(
            problem,
            "invariant checks need a known solution",
        ));
    }
    if !cfg.algorithm.is_projection_type() {
        return Err(input_error(
            config,
            "invariant checks apply to ALG1 and OPM only",
        ));
    }
    cfg.check_invariants = true;
    let report = solve(&p, &cfg)?;
    print_summary(&report);
    match report.rate_constant {
        Some(c) => println!("rate bound checked with C = {c:.6}"),
        None => println!("rate bound not checked (parameters not validated)"),
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in &report.violations {
        *counts.entry(format!("{:?}", v.invariant)).or_default() += 1;
    }
    if counts.is_empty() {
        println!("no invariant violations");
        return Ok(EXIT_OK);
    }
    for (name, count) in &counts {
        println!("{name}: {count} violations");
    }
    if let Some(first) = report.violations.first() {
        println!(
            "first at n={}: {:?} lhs={:e} rhs={:e}",
            first.n, first.invariant, first.lhs, first.rhs
        );
    }
    Ok(EXIT_INVARIANTS)
}
