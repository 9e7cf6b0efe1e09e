//! Seeded experiment sweeps comparing the solvers.
//!
//! A sweep generates one instance per `(dims, seed)` pair, runs every
//! configured algorithm on it, and optionally writes the instances, one
//! history CSV per run and the comparison table (CSV and JSON) to disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::save_problem;
use crate::operators::{
    make_antidiagonal, make_hp_instance, make_pseudomonotone_scaled, VIProblem,
};
use crate::solvers::{
    solve, Algorithm, AlphaSchedule, IterationRecord, RunReport, SolverConfig, DECREASE_TOL,
};

pub const HISTORY_HEADER: [&str; 9] = [
    "run_id",
    "algorithm",
    "n",
    "x_norm",
    "residual_norm",
    "eta",
    "inner_F_evals",
    "gap",
    "elapsed_ns",
];

pub const TABLE_HEADER: [&str; 8] = [
    "m",
    "k",
    "seed",
    "algorithm",
    "iter",
    "init",
    "wall_seconds",
    "converged",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Antidiagonal,
    Hp,
    PseudomonotoneHp,
}

impl Generator {
    pub fn generate(self, m: usize, k: Option<usize>, seed: u64) -> Result<VIProblem> {
        let constraints = || k.ok_or_else(|| Error::config("dims.k", "required for hp instances"));
        match self {
            Generator::Antidiagonal => make_antidiagonal(m),
            Generator::Hp => make_hp_instance(m, constraints()?, seed),
            Generator::PseudomonotoneHp => {
                make_pseudomonotone_scaled(make_hp_instance(m, constraints()?, seed)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimSpec {
    pub m: usize,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmEntry {
    pub label: String,
    pub config: SolverConfig,
}

impl AlgorithmEntry {
    pub fn new(config: SolverConfig) -> Self {
        AlgorithmEntry {
            label: config.algorithm.label().to_string(),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub generator: Generator,
    pub dims: Vec<DimSpec>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmEntry>,
    /// Overrides every algorithm's `‖x‖` stopping tolerance when set.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; all available processors when unset.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::config("seeds", "must be distinct"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        if self.dims.iter().any(|d| d.m == 0 || d.k == Some(0)) {
            return Err(Error::config("dims", "must be positive"));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(Error::config("eps", "must be positive"));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        Ok(())
    }

    fn effective_config(&self, entry: &AlgorithmEntry) -> SolverConfig {
        let mut cfg = entry.config.clone();
        if let Some(eps) = self.eps {
            cfg.stopping.eps_x_norm = Some(eps);
            cfg.stopping.eps_residual = None;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub run_id: String,
    pub m: usize,
    pub k: Option<usize>,
    pub seed: u64,
    pub algorithm: String,
    pub iter: usize,
    pub init: usize,
    pub wall_seconds: f64,
    pub converged: bool,
    pub final_x_norm: f64,
    pub final_violation: f64,
    pub invariant_violations: usize,
    pub error: Option<String>,
}

impl TableRow {
    /// Equality of every field except the wall-clock time.
    pub fn same_outcome(&self, other: &TableRow) -> bool {
        let bits = |r: &TableRow| [r.final_x_norm.to_bits(), r.final_violation.to_bits()];
        let mut a = self.clone();
        a.wall_seconds = other.wall_seconds;
        a.final_x_norm = other.final_x_norm;
        a.final_violation = other.final_violation;
        a == *other && bits(self) == bits(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub m: usize,
    pub k: Option<usize>,
    pub algorithm: String,
    pub runs: usize,
    pub converged: usize,
    pub median_iter: f64,
    pub median_init: f64,
    pub median_wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub name: String,
    pub rows: Vec<TableRow>,
    pub summary: Vec<SummaryRow>,
}

impl ComparisonTable {
    pub fn same_outcomes(&self, other: &ComparisonTable) -> bool {
        self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.same_outcome(b))
    }

    pub fn summary_for(&self, m: usize, k: Option<usize>, algorithm: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.m == m && s.k == k && s.algorithm == algorithm)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(TABLE_HEADER)?;
        for row in &self.rows {
            w.write_record([
                row.m.to_string(),
                row.k.map(|k| k.to_string()).unwrap_or_default(),
                row.seed.to_string(),
                row.algorithm.clone(),
                row.iter.to_string(),
                row.init.to_string(),
                row.wall_seconds.to_string(),
                row.converged.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

struct Job<'a> {
    instance: usize,
    entry: &'a AlgorithmEntry,
}

/// Runs every `(instance, algorithm)` pair of `spec`.
///
/// Results are ordered by dims, then seed, then algorithm, independent of
/// scheduling. A failing run is recorded in its row and does not stop the
/// sweep. Nothing is written when the algorithm list is empty.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ComparisonTable> {
    spec.validate()?;
    let mut table = ComparisonTable {
        name: spec.name.clone(),
        rows: Vec::new(),
        summary: Vec::new(),
    };
    if spec.algorithms.is_empty() {
        return Ok(table);
    }

    let mut instances = Vec::new();
    for d in &spec.dims {
        for &seed in &spec.seeds {
            instances.push((d, seed, spec.generator.generate(d.m, d.k, seed)?));
        }
    }

    let out = spec.output_dir.as_deref();
    if let Some(dir) = out {
        fs::create_dir_all(dir.join("instances"))?;
        fs::create_dir_all(dir.join("histories"))?;
        for (d, seed, problem) in &instances {
            save_problem(
                problem,
                &dir.join("instances").join(instance_file_name(d, *seed)),
            )?;
        }
    }

    let jobs: Vec<Job> = (0..instances.len())
        .flat_map(|instance| {
            spec.algorithms
                .iter()
                .map(move |entry| Job { instance, entry })
        })
        .collect();

    let run = |job: &Job| -> Result<TableRow> {
        let (d, seed, problem) = &instances[job.instance];
        let run_id = run_id(&spec.name, d, *seed, &job.entry.label);
        let cfg = spec.effective_config(job.entry);
        let outcome = solve(problem, &cfg);
        if let (Some(dir), Ok(report)) = (out, &outcome) {
            write_history(
                &dir.join("histories").join(format!("{run_id}.csv")),
                &run_id,
                report,
            )?;
        }
        Ok(table_row(
            run_id,
            d,
            *seed,
            &job.entry.label,
            problem,
            outcome,
        ))
    };

    let rows: Vec<Result<TableRow>> = match spec.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(|| jobs.par_iter().map(run).collect()),
        None => jobs.par_iter().map(run).collect(),
    };
    table.rows = rows.into_iter().collect::<Result<_>>()?;
    table.summary = summarize(spec, &table.rows);

    if let Some(dir) = out {
        table.write_csv(&dir.join("table.csv"))?;
        let mut f = fs::File::create(dir.join("table.json"))?;
        f.write_all(serde_json::to_string_pretty(&table)?.as_bytes())?;
    }
    Ok(table)
}

fn instance_file_name(d: &DimSpec, seed: u64) -> String {
    match d.k {
        Some(k) => format!("m{}_k{k}_s{seed}.json", d.m),
        None => format!("m{}_s{seed}.json", d.m),
    }
}

fn run_id(name: &str, d: &DimSpec, seed: u64, label: &str) -> String {
    match d.k {
        Some(k) => format!("{name}-m{}-k{k}-s{seed}-{label}", d.m),
        None => format!("{name}-m{}-s{seed}-{label}", d.m),
    }
}

fn table_row(
    run_id: String,
    d: &DimSpec,
    seed: u64,
    label: &str,
    problem: &VIProblem,
    outcome: Result<RunReport>,
) -> TableRow {
    let mut row = TableRow {
        run_id,
        m: d.m,
        k: d.k,
        seed,
        algorithm: label.to_string(),
        iter: 0,
        init: 0,
        wall_seconds: 0.0,
        converged: false,
        final_x_norm: f64::NAN,
        final_violation: f64::NAN,
        invariant_violations: 0,
        error: None,
    };
    match outcome {
        Ok(report) => {
            row.iter = report.iterations;
            row.init = report.inner_evals;
            row.wall_seconds = report.wall_seconds;
            row.converged = report.converged();
            row.final_x_norm = report.final_x.norm_sq().sqrt();
            row.final_violation = problem
                .feasible_set
                .violation(&report.final_x)
                .unwrap_or(f64::NAN);
            row.invariant_violations = report.violations.len();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn summarize(spec: &ExperimentSpec, rows: &[TableRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for d in &spec.dims {
        for entry in &spec.algorithms {
            let group: Vec<&TableRow> = rows
                .iter()
                .filter(|r| r.m == d.m && r.k == d.k && r.algorithm == entry.label)
                .collect();
            let collect =
                |f: fn(&TableRow) -> f64| -> Vec<f64> { group.iter().map(|r| f(r)).collect() };
            out.push(SummaryRow {
                m: d.m,
                k: d.k,
                algorithm: entry.label.clone(),
                runs: group.len(),
                converged: group.iter().filter(|r| r.converged).count(),
                median_iter: median(&mut collect(|r| r.iter as f64)),
                median_init: median(&mut collect(|r| r.init as f64)),
                median_wall_seconds: median(&mut collect(|r| r.wall_seconds)),
            });
        }
    }
    out
}

pub fn write_history(path: &Path, run_id: &str, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HISTORY_HEADER)?;
    let label = report.algorithm.label();
    for r in &report.history {
        w.write_record([
            run_id.to_string(),
            label.to_string(),
            r.n.to_string(),
            r.x_norm.to_string(),
            r.residual_norm.to_string(),
            r.eta.to_string(),
            r.inner_f_evals.to_string(),
            r.gap.to_string(),
            r.elapsed_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCurve {
    /// `min_{i ≤ n} gap_i ≤ C/n`.
    RunningMin,
    /// `gap_n ≤ C/n`; stated for runs without inertia.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateCheck {
    pub checked: usize,
    pub violations: usize,
}

/// Checks a recorded history against `gap ≤ c_alpha / n`, where `c_alpha`
/// already includes the factor `‖x₀ − x*‖²`.
pub fn check_rate_curve(history: &[IterationRecord], c_alpha: f64, mode: RateCurve) -> RateCheck {
    let mut running = f64::INFINITY;
    let mut violations = 0;
    for r in history {
        running = running.min(r.gap);
        let lhs = match mode {
            RateCurve::RunningMin => running,
            RateCurve::Pointwise => r.gap,
        };
        if !(lhs <= c_alpha / r.n as f64 + DECREASE_TOL) {
            violations += 1;
        }
    }
    RateCheck {
        checked: history.len(),
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

/// ALG1 with the validated parameters `α = 0.1, σ = 0.8, γ = 0.1, δ = 1, β = 0.5`.
pub fn alg1_validated() -> SolverConfig {
    SolverConfig {
        algorithm: Algorithm::Alg1,
        gamma: 0.1,
        sigma: 0.8,
        alpha: AlphaSchedule::Constant(0.1),
        delta: 1.0,
        beta: 0.5,
        ..SolverConfig::default()
    }
}

/// Skew antidiagonal problem at `m = 500`: ALG1 with `α = 0.6` (outside
/// the validated range) against OPM, `γ = 0.1, σ = 0.8`, stopping at
/// `‖x‖ ≤ 10⁻³`.
/// Iteration cap for the unconstrained rotation example; the inertial run
/// with `α = 0.6` grows geometrically there and stops on this cap.
pub const EXAMPLE1_MAX_ITER: usize = 5_000;

pub fn example1_spec(output_dir: Option<PathBuf>) -> ExperimentSpec {
    let mut base = SolverConfig {
        gamma: 0.1,
        sigma: 0.8,
        record_history: true,
        ..SolverConfig::default()
    };
    base.stopping.max_iter = EXAMPLE1_MAX_ITER;
    let alg1 = SolverConfig {
        algorithm: Algorithm::Alg1,
        alpha: AlphaSchedule::Constant(0.6),
        unvalidated: true,
        ..base.clone()
    };
    let opm = SolverConfig {
        algorithm: Algorithm::Opm,
        alpha: AlphaSchedule::Constant(0.0),
        ..base
    };
    ExperimentSpec {
        name: "example1".into(),
        generator: Generator::Antidiagonal,
        dims: vec![DimSpec { m: 500, k: None }],
        seeds: vec![0],
        algorithms: vec![AlgorithmEntry::new(alg1), AlgorithmEntry::new(opm)],
        eps: Some(1e-3),
        output_dir,
        threads: None,
    }
}

/// The four-way comparison on random polyhedral instances.
pub fn example2_spec(scale: Scale, output_dir: Option<PathBuf>) -> ExperimentSpec {
    let (ms, ks, max_iter): (&[usize], &[usize], usize) = match scale {
        Scale::Desk => (&[10, 20], &[20, 30], 200_000),
        Scale::Paper => (&[20, 50, 80, 100], &[30, 50, 80], 1_000_000),
    };
    let dims = ks
        .iter()
        .flat_map(|&k| ms.iter().map(move |&m| DimSpec { m, k: Some(k) }))
        .collect();
    ExperimentSpec {
        name: "example2".into(),
        generator: Generator::Hp,
        dims,
        seeds: (1..=10).collect(),
        algorithms: example2_algorithms(max_iter),
        eps: Some(1e-3),
        output_dir,
        threads: None,
    }
}

/// ALG1, OPM, backtracked SPM (`σ = 0.8, ρ = 0.1, μ = 0.2`) and ISPM
/// (`α = 0.2`, `λ = τ/‖M‖`).
pub fn example2_algorithms(max_iter: usize) -> Vec<AlgorithmEntry> {
    let mut base = alg1_validated();
    base.stopping.max_iter = max_iter;
    let opm = SolverConfig {
        algorithm: Algorithm::Opm,
        ..base.clone()
    };
    let spm = SolverConfig {
        algorithm: Algorithm::SpmArmijo,
        ..base.clone()
    };
    let ispm = SolverConfig {
        algorithm: Algorithm::Ispm,
        ..base.clone()
    };
    [base, opm, spm, ispm]
        .into_iter()
        .map(AlgorithmEntry::new)
        .collect()
}
