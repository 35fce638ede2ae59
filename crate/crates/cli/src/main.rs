use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use decent_opt::algorithms::{max_step_size, max_step_size_pl_literal};
use decent_opt::analysis::{c0, d1, d2, rho1, rho2, theorem1_bound, theorem2_bound, theorem2_floor};
use decent_opt::harness::{self, CheckKind, RunConfig};
use decent_opt::topology::{self, MixingMatrix};
use decent_opt::trace::fmt_float;
use decent_opt::{BoundInputs, Error, Regime};

const JOBS_ENV: &str = "DECENT_OPT_JOBS";

#[derive(Parser)]
#[command(name = "decent-opt", version, about = "Decentralized stochastic optimization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Jobs {
    /// Worker threads (0 = one per core). DECENT_OPT_JOBS takes precedence.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm and rep of a config and write traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Run the Cartesian product of a config's sweep lists.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Check a lemma, the shadow sequence or the theorem bounds on a config.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        check: String,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Build or load a mixing matrix, validate it and write it as CSV.
    Topology {
        #[arg(long, value_enum)]
        kind: TopologyArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lazy: bool,
        /// Matrix to load when `--kind file`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the closed-form bounds and step-size limits.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Ring,
    Complete,
    File,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long = "L")]
    l_smooth: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.0)]
    zeta02: f64,
    #[arg(long)]
    n: usize,
    #[arg(long = "T")]
    t_horizon: usize,
    /// f(x0) − f*.
    #[arg(long = "f0-gap", default_value_t = 1.0)]
    f0_gap: f64,
    #[arg(long, default_value = "nonconvex")]
    regime: String,
}

/// Failure mapped to the process exit code: 1 for bad input, 2 for a
/// divergence or a failed check.
enum Failure {
    Input(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => Failure::Check(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn jobs(arg: &Jobs) -> Result<usize, Failure> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{JOBS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(arg.jobs),
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    Ok(RunConfig::load(path)?)
}

fn run(config: &Path, out: Option<PathBuf>, jobs: usize) -> Result<(), Failure> {
    let cfg = load(config)?;
    if cfg.is_sweep() {
        return Err(Failure::Input("config holds sweep lists; use the sweep command".into()));
    }
    let report = harness::run_experiment(&cfg, jobs)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let dir = out.unwrap_or_else(|| cfg.out.clone());
    report.write(&dir)?;
    for agg in &report.aggregates {
        let last = agg.rows.last();
        let pick = |j: usize| last.map(|r| fmt_float(r.mean[j])).unwrap_or_else(|| "nan".into());
        println!(
            "algorithm={} reps_ok={} reps_failed={} consensus_dev={} subopt={} dist_sq={}",
            agg.algorithm,
            agg.reps_ok,
            agg.failed_reps.len(),
            pick(0),
            pick(3),
            pick(4)
        );
    }
    println!("out={}", dir.display());
    if report.failed() {
        for c in report.cells.iter().filter(|c| !c.ok()) {
            eprintln!("{} rep {}: {}", c.algorithm, c.rep, c.error.as_deref().unwrap_or(""));
        }
        return Err(Failure::Check("one or more runs diverged".into()));
    }
    Ok(())
}

fn sweep(config: &Path, out: Option<PathBuf>, jobs: usize) -> Result<(), Failure> {
    let cfg = load(config)?;
    let dir = out.unwrap_or_else(|| cfg.out.clone());
    let report = harness::run_sweep(&cfg, jobs, Some(&dir))?;
    println!("points={} out={}", report.points.len(), dir.display());
    if report.failed() {
        return Err(Failure::Check("one or more runs diverged".into()));
    }
    Ok(())
}

fn verify(config: &Path, check: &str, jobs: usize) -> Result<(), Failure> {
    let check: CheckKind = check.parse()?;
    let cfg = load(config)?;
    let outcomes = harness::verify(&cfg, check, jobs)?;
    for o in &outcomes {
        println!("{o}");
    }
    if outcomes.iter().any(|o| !o.pass) {
        return Err(Failure::Check(format!("check {check} failed")));
    }
    Ok(())
}

fn topology_cmd(
    kind: TopologyArg,
    n: Option<usize>,
    lazy: bool,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let need_n = || n.ok_or_else(|| Failure::Input("--n is required for ring and complete".into()));
    let w = match kind {
        TopologyArg::Ring => topology::build_ring(need_n()?)?,
        TopologyArg::Complete => topology::build_complete(need_n()?)?,
        TopologyArg::File => {
            let path = input.ok_or_else(|| Failure::Input("--kind file needs --input".into()))?;
            let w = MixingMatrix::load(&path)?;
            if let Some(n) = n.filter(|&n| n != w.agents()) {
                return Err(Failure::Input(format!("--n {n} but the file has {} agents", w.agents())));
            }
            w
        }
    };
    let w = if lazy { topology::lazy_transform(&w)? } else { w };
    if let Some(path) = &out {
        harness::write_atomic(path, &w.to_csv())?;
    }
    let report = topology::validate(&w);
    print!("{report}");
    eprintln!("lambda={}", fmt_float(w.lambda()));
    if !report.all_pass() {
        return Err(Failure::Check("mixing matrix fails validation".into()));
    }
    Ok(())
}

fn bounds(a: &BoundsArgs) -> Result<(), Failure> {
    let regime: Regime = a.regime.parse()?;
    let b = BoundInputs {
        alpha: a.alpha,
        beta: a.beta,
        lambda: a.lambda,
        l_smooth: a.l_smooth,
        mu: a.mu,
        sigma_sq: a.sigma2,
        zeta0_sq: a.zeta02,
        n: a.n,
        t_horizon: a.t_horizon,
        f0_gap: a.f0_gap,
    };
    b.validate()?;
    let limit = max_step_size(a.beta, a.lambda, a.l_smooth, regime);
    let mut lines = vec![
        ("c0", c0(a.beta, a.lambda)),
        ("d1", d1(a.beta, a.lambda)),
        ("d2", d2(a.beta, a.lambda)),
        ("rho1", rho1(a.alpha, a.mu)),
        ("rho2", rho2(a.beta, a.lambda)),
        ("max_step_size", limit),
    ];
    match regime {
        Regime::Nonconvex => lines.push(("theorem1_bound", theorem1_bound(&b)?)),
        Regime::Pl => {
            lines.push(("max_step_size_literal", max_step_size_pl_literal(a.beta, a.lambda)));
            lines.push(("theorem2_bound", theorem2_bound(&b, a.t_horizon)?));
            lines.push(("theorem2_floor", theorem2_floor(&b)?));
        }
    }
    for (name, v) in lines {
        println!("{name}={}", fmt_float(v));
    }
    println!("admissible={}", a.alpha <= limit);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, jobs: j } => jobs(&j).and_then(|k| run(&config, out, k)),
        Command::Sweep { config, out, jobs: j } => jobs(&j).and_then(|k| sweep(&config, out, k)),
        Command::Verify { config, check, jobs: j } => jobs(&j).and_then(|k| verify(&config, &check, k)),
        Command::Topology { kind, n, lazy, input, out } => topology_cmd(kind, n, lazy, input, out),
        Command::Bounds(args) => bounds(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
