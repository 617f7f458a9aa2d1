//! Running configured solvers over seeded problem instances.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use morozov_core::curve::sample_discrepancy_curve;
use morozov_core::linop::{DifferenceMatrix, LinearOperator, Matrix, Priorconditioned};
use morozov_core::metrics::{ssim, ImageView};
use morozov_core::ntm::ntm_solve;
use morozov_core::pntm::pntm_solve;
use morozov_core::problems::{random_uniform_problem, relative_stats, sine_wave_problem};
use morozov_core::reference::{
    cgls_priorconditioned, gbit_solve, sirt_solve, sirt_weights, CglsConfig, SirtConfig,
};
use morozov_core::{InverseProblem, SolveOutcome};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ProblemSpec, SolverSpec};
use crate::dataset::{read_problem, read_vector, write_problem};
use crate::error::{Error, Result};
use crate::mtx::read_matrix_market;
use crate::output::{create, opt, write_outer_trace, write_trace, TraceLayout};

/// Produces the problem instance for a given seed.
#[derive(Debug, Clone)]
pub enum ProblemSource {
    Random {
        m: usize,
        n: usize,
        noise: f64,
        eta: f64,
    },
    Sine {
        operator: Matrix,
        noise: f64,
        eta: f64,
    },
    Fixed(InverseProblem),
}

impl ProblemSource {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match &cfg.problem {
            ProblemSpec::RandomUniform { m, n, noise, eta } => ProblemSource::Random {
                m: *m,
                n: *n,
                noise: *noise,
                eta: *eta,
            },
            ProblemSpec::MatrixMarket {
                path,
                noise,
                rhs,
                noise_level,
                eta,
            } => {
                let operator = read_matrix_market(&cfg.resolve(path))?;
                match (rhs, noise_level) {
                    (Some(rhs), Some(level)) => {
                        let b = read_vector(&cfg.resolve(rhs))?;
                        ProblemSource::Fixed(
                            InverseProblem::new(operator, b, *level)?.with_eta(*eta)?,
                        )
                    }
                    _ => ProblemSource::Sine {
                        operator,
                        noise: *noise,
                        eta: *eta,
                    },
                }
            }
            ProblemSpec::Directory { path } => {
                ProblemSource::Fixed(read_problem(&cfg.resolve(path))?)
            }
        })
    }

    pub fn instance(&self, seed: u64) -> Result<InverseProblem> {
        let p = match self {
            ProblemSource::Random { m, n, noise, eta } => {
                random_uniform_problem(*m, *n, *noise, seed)?.with_eta(*eta)?
            }
            ProblemSource::Sine {
                operator,
                noise,
                eta,
            } => sine_wave_problem(operator.clone(), *noise, seed)?.with_eta(*eta)?,
            ProblemSource::Fixed(p) => p.clone(),
        };
        Ok(p)
    }
}

fn trace_layout(spec: &SolverSpec) -> TraceLayout {
    match spec {
        SolverSpec::Ntm(_) => TraceLayout::Newton,
        SolverSpec::Pntm(_) => TraceLayout::Projected,
        SolverSpec::Gbit(_) => TraceLayout::Gbit,
        SolverSpec::Sirt(_) | SolverSpec::CglsPc(_) => TraceLayout::Basic,
    }
}

/// Runs `solve` on `Ā = A L⁻¹` and maps the solution back to `x = L⁻¹ z`.
fn priorconditioned<F>(p: &InverseProblem, solve: F) -> morozov_core::Result<SolveOutcome>
where
    F: FnOnce(&Priorconditioned<&Matrix>, &[f64]) -> morozov_core::Result<SolveOutcome>,
{
    let pc = Priorconditioned::unshifted(&p.operator, DifferenceMatrix::new(p.operator.ncols()))?;
    let rhs = pc.effective_rhs(&p.rhs);
    let mut out = solve(&pc, &rhs)?;
    out.x = pc.recover(&out.x);
    Ok(out)
}

/// Solves `p` with the configured method. Solutions are always returned
/// in the original variables.
pub fn run_solver(spec: &SolverSpec, p: &InverseProblem) -> morozov_core::Result<SolveOutcome> {
    let target = p.discrepancy_target();
    match spec {
        SolverSpec::Ntm(s) => {
            let cfg = s.to_config();
            if s.priorcondition {
                priorconditioned(p, |op, b| ntm_solve(op, b, target, &cfg))
            } else {
                ntm_solve(&p.operator, &p.rhs, target, &cfg)
            }
        }
        SolverSpec::Pntm(s) => {
            let cfg = s.to_config();
            if s.priorcondition {
                priorconditioned(p, |op, b| pntm_solve(op, b, target, &cfg))
            } else {
                pntm_solve(&p.operator, &p.rhs, target, &cfg)
            }
        }
        SolverSpec::Gbit(s) => {
            let cfg = s.to_config();
            if s.priorcondition {
                priorconditioned(p, |op, b| gbit_solve(op, b, target, &cfg))
            } else {
                gbit_solve(&p.operator, &p.rhs, target, &cfg)
            }
        }
        SolverSpec::Sirt(s) => {
            let cfg = SirtConfig {
                max_iter: s.max_iter,
                stop_at_discrepancy: s.stop_at_discrepancy,
            };
            sirt_solve(&p.operator, &p.rhs, target, &cfg)
        }
        SolverSpec::CglsPc(s) => {
            let pc = Priorconditioned::unshifted(
                &p.operator,
                DifferenceMatrix::new(p.operator.ncols()),
            )?;
            cgls_priorconditioned(
                &pc,
                &p.rhs,
                target,
                &CglsConfig {
                    max_iter: s.max_iter,
                },
            )
        }
    }
}

/// Scalar results of one successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub converged: bool,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub alpha: Option<f64>,
    pub res_norm: f64,
    pub rel_residual: f64,
    pub rel_discrepancy: f64,
    pub rel_error: Option<f64>,
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub solver: String,
    pub seed: u64,
    /// `Err` holds the solver's error message.
    pub result: std::result::Result<RunStats, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub solver: String,
    pub runs: usize,
    pub failures: usize,
    pub converged: usize,
    pub mean_iters: Option<f64>,
    pub sd_iters: Option<f64>,
    pub mean_inner: Option<f64>,
    pub mean_alpha: Option<f64>,
    pub sd_alpha: Option<f64>,
    pub mean_rel_residual: Option<f64>,
    pub mean_rel_error: Option<f64>,
    pub mean_ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub runs: Vec<RunRecord>,
}

impl Summary {
    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample standard deviation (`n − 1` in the denominator).
fn sample_sd(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    (v.len() > 1)
        .then(|| (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

pub fn summarize(solvers: &[String], runs: &[RunRecord]) -> Vec<SummaryRow> {
    solvers
        .iter()
        .map(|name| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| &r.solver == name).collect();
            let ok: Vec<&RunStats> = mine.iter().filter_map(|r| r.result.as_ref().ok()).collect();
            let collect = |f: &dyn Fn(&RunStats) -> Option<f64>| -> Vec<f64> {
                ok.iter().filter_map(|s| f(s)).collect()
            };
            let iters = collect(&|s| Some(s.iterations as f64));
            let alphas = collect(&|s| s.alpha);
            SummaryRow {
                solver: name.clone(),
                runs: mine.len(),
                failures: mine.len() - ok.len(),
                converged: ok.iter().filter(|s| s.converged).count(),
                mean_iters: mean(&iters),
                sd_iters: sample_sd(&iters),
                mean_inner: mean(&collect(&|s| Some(s.inner_iterations as f64))),
                mean_alpha: mean(&alphas),
                sd_alpha: sample_sd(&alphas),
                mean_rel_residual: mean(&collect(&|s| Some(s.rel_residual))),
                mean_rel_error: mean(&collect(&|s| s.rel_error)),
                mean_ssim: mean(&collect(&|s| s.ssim)),
            }
        })
        .collect()
}

fn run_stats(p: &InverseProblem, out: &SolveOutcome, image: Option<[usize; 2]>) -> RunStats {
    let stats = relative_stats(p, &out.x);
    let ssim = match (image, &p.ground_truth) {
        (Some([w, h]), Some(truth)) => {
            let x = ImageView::new(&out.x, w, h);
            let y = ImageView::new(truth, w, h);
            x.and_then(|x| y.and_then(|y| ssim(&x, &y))).ok()
        }
        _ => None,
    };
    RunStats {
        converged: out.converged,
        iterations: out.iterations,
        inner_iterations: out.inner_iterations,
        alpha: out.alpha,
        res_norm: stats.rel_residual * p.rhs_norm(),
        rel_residual: stats.rel_residual,
        rel_discrepancy: stats.rel_discrepancy,
        rel_error: stats.rel_error,
        ssim,
    }
}

fn write_run_traces(
    dir: &Path,
    label: &str,
    seed: u64,
    spec: &SolverSpec,
    out: &SolveOutcome,
) -> Result<()> {
    let stem = format!("{label}_seed{seed}");
    write_trace(
        create(&dir.join(format!("{stem}.csv")))?,
        trace_layout(spec),
        &out.trace.records,
    )?;
    if !out.trace.outer.is_empty() {
        write_outer_trace(
            create(&dir.join(format!("{stem}_outer.csv")))?,
            &out.trace.outer,
        )?;
    }
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every solver on every repetition and writes traces, `runs.csv`,
/// `summary.csv`, `manifest.txt` and a copy of the config to the output
/// directory. Solver errors are recorded per run and do not abort the
/// experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary> {
    if cfg.solvers.is_empty() {
        return Err(Error::Config("no [[solver]] sections".into()));
    }
    let out_dir = cfg.resolve(&cfg.experiment.output);
    let trace_dir = out_dir.join("traces");
    std::fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
    let started = unix_now();
    let source = ProblemSource::from_config(cfg)?;
    let labels: Vec<String> = cfg.solvers.iter().map(SolverSpec::label).collect();
    let image = cfg.experiment.image_shape;
    let mut notes = Vec::new();
    if cfg.solvers.iter().any(|s| matches!(s, SolverSpec::Sirt(_))) {
        let first = source.instance(cfg.experiment.seed)?;
        let absolute = sirt_weights(&first.operator)
            .map(|w| w.absolute)
            .unwrap_or(false);
        notes.push(format!(
            "sirt_weights={}",
            if absolute {
                "absolute-sums"
            } else {
                "raw-sums"
            }
        ));
    }

    let per_seed: Vec<Result<Vec<RunRecord>>> = pool(cfg.experiment.threads)?.install(|| {
        cfg.seeds()
            .into_par_iter()
            .map(|seed| {
                let p = source.instance(seed)?;
                let mut records = Vec::with_capacity(cfg.solvers.len());
                for (spec, label) in cfg.solvers.iter().zip(&labels) {
                    let result = match run_solver(spec, &p) {
                        Ok(out) => {
                            write_run_traces(&trace_dir, label, seed, spec, &out)?;
                            Ok(run_stats(&p, &out, image))
                        }
                        Err(e) => Err(e.to_string()),
                    };
                    records.push(RunRecord {
                        solver: label.clone(),
                        seed,
                        result,
                    });
                }
                Ok(records)
            })
            .collect()
    });
    let mut runs = Vec::new();
    for r in per_seed {
        runs.extend(r?);
    }
    runs.sort_by(|a, b| (a.seed, &a.solver).cmp(&(b.seed, &b.solver)));

    let rows = summarize(&labels, &runs);
    write_runs_csv(&out_dir.join("runs.csv"), &runs)?;
    write_summary_csv(&out_dir.join("summary.csv"), &rows)?;
    let summary = Summary { rows, runs };
    write_manifest(cfg, &out_dir, &labels, &notes, &summary, started)?;
    Ok(summary)
}

pub fn write_runs_csv(path: &Path, runs: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "solver",
        "seed",
        "status",
        "converged",
        "iterations",
        "inner_iterations",
        "alpha",
        "res_norm",
        "rel_residual",
        "rel_discrepancy",
        "rel_error",
        "ssim",
        "error",
    ])?;
    for r in runs {
        let mut row = vec![r.solver.clone(), r.seed.to_string()];
        match &r.result {
            Ok(s) => row.extend([
                "ok".to_string(),
                u8::from(s.converged).to_string(),
                s.iterations.to_string(),
                s.inner_iterations.to_string(),
                opt(s.alpha),
                s.res_norm.to_string(),
                s.rel_residual.to_string(),
                s.rel_discrepancy.to_string(),
                opt(s.rel_error),
                opt(s.ssim),
                String::new(),
            ]),
            Err(e) => {
                row.push("error".into());
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(e.clone());
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "method",
        "runs",
        "failures",
        "converged",
        "mean_iters",
        "sd_iters",
        "mean_inner_iters",
        "mean_alpha",
        "sd_alpha",
        "mean_rel_residual",
        "mean_rel_error",
        "mean_ssim",
    ])?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            r.runs.to_string(),
            r.failures.to_string(),
            r.converged.to_string(),
            opt(r.mean_iters),
            opt(r.sd_iters),
            opt(r.mean_inner),
            opt(r.mean_alpha),
            opt(r.sd_alpha),
            opt(r.mean_rel_residual),
            opt(r.mean_rel_error),
            opt(r.mean_ssim),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn problem_description(cfg: &ExperimentConfig) -> String {
    match &cfg.problem {
        ProblemSpec::RandomUniform { m, n, noise, eta } => {
            format!("random-uniform m={m} n={n} noise={noise} eta={eta}")
        }
        ProblemSpec::MatrixMarket {
            path, noise, rhs, ..
        } => match rhs {
            Some(rhs) => format!(
                "matrix-market path={} rhs={}",
                path.display(),
                rhs.display()
            ),
            None => format!(
                "matrix-market path={} rhs=sine-wave noise={noise}",
                path.display()
            ),
        },
        ProblemSpec::Directory { path } => format!("directory path={}", path.display()),
    }
}

fn write_manifest(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    labels: &[String],
    notes: &[String],
    summary: &Summary,
    started: u64,
) -> Result<()> {
    let seeds: Vec<String> = cfg.seeds().iter().map(u64::to_string).collect();
    let mut m = String::new();
    let _ = writeln!(m, "tool=morozov");
    let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "problem={}", problem_description(cfg));
    let _ = writeln!(m, "repetitions={}", cfg.experiment.repetitions);
    let _ = writeln!(m, "seeds={}", seeds.join(","));
    let _ = writeln!(m, "solvers={}", labels.join(","));
    let _ = writeln!(m, "runs={}", summary.runs.len());
    let _ = writeln!(m, "failures={}", summary.failures());
    let _ = writeln!(m, "sd_convention=sample");
    let _ = writeln!(m, "ssim=global-window population-variance c1=1e-4 c2=9e-4");
    for note in notes {
        let _ = writeln!(m, "{note}");
    }
    let _ = writeln!(m, "config=config.toml");
    let _ = writeln!(m, "started_unix={started}");
    let _ = writeln!(m, "finished_unix={}", unix_now());
    write_file(&out_dir.join("manifest.txt"), &m)?;
    write_file(&out_dir.join("config.toml"), &cfg.source)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Samples the discrepancy curve of the instance for the first seed and
/// writes `curve.csv` (`alpha,res_norm`) to the output directory.
pub fn run_curve(cfg: &ExperimentConfig) -> Result<(PathBuf, Vec<(f64, f64)>)> {
    let spec = cfg.curve.clone().unwrap_or_default();
    let source = ProblemSource::from_config(cfg)?;
    let p = source.instance(cfg.experiment.seed)?;
    let points = sample_discrepancy_curve(&p.operator, &p.rhs, &spec.grid())?;
    let out_dir = cfg.resolve(&cfg.experiment.output);
    let path = out_dir.join("curve.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["alpha", "res_norm"])?;
    for (a, r) in &points {
        w.write_record([a.to_string(), r.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let meta = format!(
        "tool=morozov\nversion={}\nproblem={}\nseed={}\ndiscrepancy_target={}\nrhs_norm={}\n",
        env!("CARGO_PKG_VERSION"),
        problem_description(cfg),
        cfg.experiment.seed,
        p.discrepancy_target(),
        p.rhs_norm()
    );
    write_file(&out_dir.join("curve_manifest.txt"), &meta)?;
    Ok((path, points))
}

/// Writes one problem directory per repetition under `<output>/problems`.
pub fn generate_problems(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let source = ProblemSource::from_config(cfg)?;
    let root = cfg.resolve(&cfg.experiment.output).join("problems");
    cfg.seeds()
        .into_iter()
        .map(|seed| {
            let dir = root.join(format!("seed{seed}"));
            write_problem(&dir, &source.instance(seed)?)?;
            Ok(dir)
        })
        .collect()
}
