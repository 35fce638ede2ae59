use std::path::Path;

use rayon::prelude::*;

use crate::algorithms::{self, max_step_size, max_step_size_pl_literal, AlgorithmKind, AlgorithmSpec, Regime};
use crate::analysis::{self, theorem1_bound, theorem1_lhs, theorem2_bound, theorem2_floor, BoundInputs, MonitorSet};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::problems::{
    self, LogisticParams, LogisticProblem, Problem, ProblemConstants, QuadraticParams, QuadraticProblem,
    WelschParams, WelschProblem,
};
use crate::rng::{Purpose, RngStream};
use crate::topology::{self, MixingMatrix};
use crate::trace::Trace;

use super::config::{InitialPoint, ProblemSource, RunConfig, TopologyKind};

/// Everything a config resolves to before any run starts.
#[derive(Debug)]
pub struct Setup {
    pub problem: Box<dyn Problem>,
    pub w: MixingMatrix,
    pub x0: Vector,
    pub specs: Vec<AlgorithmSpec>,
    pub monitors: MonitorSet,
    pub warnings: Vec<String>,
}

pub fn build_problem(cfg: &RunConfig) -> Result<Box<dyn Problem>> {
    let n = cfg.agents()?;
    let problem: Box<dyn Problem> = match cfg.problem {
        ProblemSource::Quadratic => Box::new(QuadraticProblem::generate(
            &QuadraticParams {
                n,
                d: cfg.d,
                p: cfg.p,
                c: cfg.divisor()?,
                sigma: cfg.sigma,
                scale: cfg.loss_scale()?,
            },
            cfg.seed,
        )?),
        ProblemSource::Logistic => Box::new(LogisticProblem::generate(
            &LogisticParams {
                n,
                d: cfg.d,
                m: cfg.m,
                sigma_h: cfg.spread()?,
                mu_reg: cfg.mu_reg.expect("validated"),
                sigma_s: cfg.sigma_s,
            },
            cfg.seed,
        )?),
        ProblemSource::Welsch => Box::new(WelschProblem::generate(
            &WelschParams {
                n,
                d: cfg.d,
                m: cfg.m,
                sigma_h: cfg.spread()?,
                sigma_s: cfg.sigma_s,
                response_noise: cfg.response_noise,
            },
            cfg.seed,
        )?),
        ProblemSource::File => {
            let path = cfg.problem_file.as_ref().expect("validated");
            problems::read_problem(&std::fs::read_to_string(path)?)?
        }
    };
    if problem.agents() != n {
        return Err(Error::Config(format!("problem has {} agents but n = {n}", problem.agents())));
    }
    Ok(problem)
}

pub fn build_topology(cfg: &RunConfig) -> Result<MixingMatrix> {
    let n = cfg.agents()?;
    let w = match cfg.topology {
        TopologyKind::Ring => topology::build_ring(n)?,
        TopologyKind::Complete => topology::build_complete(n)?,
        TopologyKind::File => MixingMatrix::load(cfg.topology_file.as_ref().expect("validated"))?,
    };
    let w = if cfg.lazy { topology::lazy_transform(&w)? } else { w };
    if w.agents() != n {
        return Err(Error::Config(format!("topology has {} agents but n = {n}", w.agents())));
    }
    Ok(w)
}

pub fn initial_point(cfg: &RunConfig, d: usize) -> Result<Vector> {
    match cfg.x0 {
        InitialPoint::Zeros => Ok(Vector::zeros(d)),
        InitialPoint::Gaussian => {
            let mut rng = RngStream::new(cfg.seed, Purpose::InitialPoint, 0, 0);
            Ok(Vector::from_fn(d, |_, _| rng.normal()))
        }
        InitialPoint::File => {
            let path = cfg.x0_file.as_ref().expect("validated");
            let text = std::fs::read_to_string(path)?;
            let values = text
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Config(format!("{}: {s:?}: {e}", path.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != d {
                return Err(Error::Config(format!("x0_file has {} entries, expected d = {d}", values.len())));
            }
            Ok(Vector::from_vec(values))
        }
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<Setup> {
    let problem = build_problem(cfg)?;
    let w = build_topology(cfg)?;
    let x0 = initial_point(cfg, problem.dim())?;
    let specs = cfg.specs()?;
    let monitors = cfg.monitor_set()?;
    if monitors.lemmas() && !problem.noise_free() {
        return Err(Error::Config(
            "lemma monitors need a noise-free problem (sigma = 0 / sigma_s = 0)".into(),
        ));
    }
    let c = problem.constants();
    let warnings = specs
        .iter()
        .flat_map(|s| {
            s.admissibility_warnings(w.lambda(), c.l_smooth, c.mu)
                .into_iter()
                .map(move |msg| format!("{}: {msg}", s.kind))
        })
        .collect();
    Ok(Setup { problem, w, x0, specs, monitors, warnings })
}

/// One `(algorithm, rep)` run.
#[derive(Debug, Clone)]
pub struct Cell {
    pub algorithm: AlgorithmKind,
    pub rep: usize,
    pub seed: u64,
    /// Full trace, or the partial trace of a failed run.
    pub trace: Trace,
    pub error: Option<String>,
}

impl Cell {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Per-iteration statistics across reps.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub mean: [f64; 6],
    pub std: [f64; 6],
    pub min: [f64; 6],
    pub max: [f64; 6],
}

/// Bound evaluations for one algorithm's `(α, β)` and the measured constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSummary {
    pub inputs: BoundInputs,
    pub theorem1: f64,
    /// Mean over successful reps of the empirical nonconvex functional.
    pub theorem1_lhs: f64,
    /// `None` when `μ = 0`.
    pub theorem2_final: Option<f64>,
    pub theorem2_floor: Option<f64>,
    pub max_step_nonconvex: f64,
    pub max_step_pl: f64,
    pub max_step_pl_literal: f64,
}

#[derive(Debug, Clone)]
pub struct AggregateReport {
    pub algorithm: AlgorithmKind,
    pub reps_ok: usize,
    pub failed_reps: Vec<usize>,
    pub rows: Vec<AggregateRow>,
    pub bounds: Option<BoundSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub constants: ProblemConstants,
    pub lambda: f64,
    pub zeta0_sq: f64,
    pub f0_gap: f64,
    pub cells: Vec<Cell>,
    pub aggregates: Vec<AggregateReport>,
    pub warnings: Vec<String>,
    /// Portable problem dump, kept when the config asks for it.
    pub problem_dump: Option<String>,
}

impl ExperimentReport {
    pub fn failed(&self) -> bool {
        self.cells.iter().any(|c| !c.ok())
    }

    pub fn aggregate(&self, kind: AlgorithmKind) -> Option<&AggregateReport> {
        self.aggregates.iter().find(|a| a.algorithm == kind)
    }

    pub fn cells_for(&self, kind: AlgorithmKind) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.algorithm == kind)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        super::output::write_report(self, dir)
    }
}

/// Seed of rep `rep` for the algorithm at position `slot` of the config.
pub fn rep_seed(cfg: &RunConfig, rep: usize, slot: usize) -> u64 {
    let base = cfg.seed_base().wrapping_add(rep as u64);
    if cfg.paired_noise {
        base
    } else {
        base.wrapping_add((slot as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

/// Thread pool with `jobs` workers, or rayon's default size for `jobs = 0`.
pub fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Mean, sample standard deviation, min and max per field and iteration.
/// All traces must have the same length.
pub fn aggregate(traces: &[&Trace]) -> Vec<AggregateRow> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let k = traces.len() as f64;
    (0..first.len())
        .map(|idx| {
            let mut row = AggregateRow {
                t: first.rows[idx].t,
                mean: [0.0; 6],
                std: [0.0; 6],
                min: [f64::INFINITY; 6],
                max: [f64::NEG_INFINITY; 6],
            };
            for tr in traces {
                for (j, v) in tr.rows[idx].values().into_iter().enumerate() {
                    row.mean[j] += v / k;
                    row.min[j] = row.min[j].min(v);
                    row.max[j] = row.max[j].max(v);
                }
            }
            if traces.len() > 1 {
                for j in 0..6 {
                    let ss: f64 = traces.iter().map(|tr| (tr.rows[idx].values()[j] - row.mean[j]).powi(2)).sum();
                    row.std[j] = (ss / (k - 1.0)).sqrt();
                }
            }
            for j in 0..6 {
                if traces.iter().any(|tr| tr.rows[idx].values()[j].is_nan()) {
                    row.min[j] = f64::NAN;
                    row.max[j] = f64::NAN;
                }
            }
            row
        })
        .collect()
}

fn f0_gap(problem: &dyn Problem, x0: &Vector) -> Result<f64> {
    Ok(match problem.objective_lower_bound() {
        Some(lb) => problem.objective(x0)? - lb,
        None => f64::NAN,
    })
}

fn bound_summary(
    spec: &AlgorithmSpec,
    c: &ProblemConstants,
    lambda: f64,
    zeta0_sq: f64,
    f0_gap: f64,
    n: usize,
    t_steps: usize,
    traces: &[&Trace],
) -> Option<BoundSummary> {
    let beta = if spec.kind.uses_momentum() { spec.beta } else { 0.0 };
    let inputs = BoundInputs {
        alpha: spec.alpha,
        beta,
        lambda,
        l_smooth: c.l_smooth,
        mu: c.mu,
        sigma_sq: c.sigma_sq,
        zeta0_sq,
        n,
        t_horizon: t_steps,
        f0_gap,
    };
    let theorem1 = theorem1_bound(&inputs).ok()?;
    let lhs = if traces.is_empty() {
        f64::NAN
    } else {
        traces.iter().map(|t| theorem1_lhs(&t.rows)).sum::<f64>() / traces.len() as f64
    };
    Some(BoundSummary {
        inputs,
        theorem1,
        theorem1_lhs: lhs,
        theorem2_final: theorem2_bound(&inputs, t_steps - 1).ok(),
        theorem2_floor: theorem2_floor(&inputs).ok(),
        max_step_nonconvex: max_step_size(beta, lambda, c.l_smooth, Regime::Nonconvex),
        max_step_pl: max_step_size(beta, lambda, c.l_smooth, Regime::Pl),
        max_step_pl_literal: max_step_size_pl_literal(beta, lambda),
    })
}

/// Runs every `(algorithm, rep)` cell of a scalar config on a pool of `jobs`
/// workers. Cells are independent, and results are collected in a fixed
/// order, so the report does not depend on `jobs`.
pub fn run_experiment(cfg: &RunConfig, jobs: usize) -> Result<ExperimentReport> {
    let setup = prepare(cfg)?;
    run_prepared(cfg, &setup, jobs)
}

pub fn run_prepared(cfg: &RunConfig, setup: &Setup, jobs: usize) -> Result<ExperimentReport> {
    let problem = setup.problem.as_ref();
    let n = problem.agents();
    let jobs_list: Vec<(usize, usize)> = (0..cfg.reps)
        .flat_map(|rep| (0..setup.specs.len()).map(move |slot| (rep, slot)))
        .collect();
    let none = MonitorSet::default();
    let cells: Vec<Cell> = pool(jobs)?.install(|| {
        jobs_list
            .par_iter()
            .map(|&(rep, slot)| {
                let spec = &setup.specs[slot];
                let seed = rep_seed(cfg, rep, slot);
                let monitors = if spec.kind == AlgorithmKind::Edm { &setup.monitors } else { &none };
                let (trace, error) = match algorithms::run(spec, problem, &setup.w, cfg.t_steps, &setup.x0, seed, monitors) {
                    Ok(trace) => (trace, None),
                    Err(f) => (f.partial, Some(f.error.to_string())),
                };
                Cell { algorithm: spec.kind, rep, seed, trace, error }
            })
            .collect()
    });

    let x0_rows = linalg::broadcast_rows(n, &setup.x0);
    let zeta0_sq = analysis::zeta0_sq(&setup.w, problem, &x0_rows)?;
    let f0_gap = f0_gap(problem, &setup.x0)?;
    let constants = problem.constants().clone();
    let lambda = setup.w.lambda();
    let aggregates = setup
        .specs
        .iter()
        .map(|spec| {
            let mine: Vec<&Cell> = cells.iter().filter(|c| c.algorithm == spec.kind).collect();
            let ok: Vec<&Trace> = mine.iter().filter(|c| c.ok()).map(|c| &c.trace).collect();
            AggregateReport {
                algorithm: spec.kind,
                reps_ok: ok.len(),
                failed_reps: mine.iter().filter(|c| !c.ok()).map(|c| c.rep).collect(),
                rows: aggregate(&ok),
                bounds: bound_summary(spec, &constants, lambda, zeta0_sq, f0_gap, n, cfg.t_steps, &ok),
            }
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        constants,
        lambda,
        zeta0_sq,
        f0_gap,
        cells,
        aggregates,
        warnings: setup.warnings.clone(),
        problem_dump: cfg.wants("problem").then(|| problem.to_portable()),
    })
}
