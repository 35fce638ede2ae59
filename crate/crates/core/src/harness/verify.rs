use std::fmt;
use std::str::FromStr;

use crate::algorithms::{self, AlgorithmKind, AlgorithmSpec};
use crate::analysis::{lemma3_estimate, MonitorSet};
use crate::error::{Error, Result};
use crate::trace::{fmt_float, Trace};

use super::config::RunConfig;
use super::experiment::{prepare, run_prepared, Setup};

/// Allowed negative slack on normalized lemma residuals.
pub const MONITOR_TOL: f64 = 1e-9;
/// Allowed distance between the two shadow representations.
pub const SHADOW_TOL: f64 = 1e-8;
/// Allowed distance between shadow and real iterates without noise.
pub const COLLAPSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma5,
    Shadow,
    Bounds,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::Lemma1,
        CheckKind::Lemma2,
        CheckKind::Lemma3,
        CheckKind::Lemma5,
        CheckKind::Shadow,
        CheckKind::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Lemma1 => "lemma1",
            CheckKind::Lemma2 => "lemma2",
            CheckKind::Lemma3 => "lemma3",
            CheckKind::Lemma5 => "lemma5",
            CheckKind::Shadow => "shadow",
            CheckKind::Bounds => "bounds",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown check {s:?}; expected one of lemma1, lemma2, lemma3, lemma5, shadow, bounds"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: f64,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} status={} detail={}",
            self.name,
            if self.pass { "pass" } else { "fail" },
            fmt_float(self.detail)
        )
    }
}

fn outcome(name: &str, pass: bool, detail: f64) -> CheckOutcome {
    CheckOutcome { name: name.into(), pass, detail }
}

fn edm_spec(cfg: &RunConfig) -> Result<AlgorithmSpec> {
    Ok(AlgorithmSpec::new(AlgorithmKind::Edm, cfg.alpha.values()[0], cfg.beta.values()[0])?
        .with_lr_drop(cfg.lr_drop.clone()))
}

fn monitored_run(cfg: &RunConfig, setup: &Setup, set: MonitorSet) -> Result<Trace> {
    let spec = edm_spec(cfg)?;
    let trace = algorithms::run(&spec, setup.problem.as_ref(), &setup.w, cfg.t_steps, &setup.x0, cfg.seed_base(), &set)?;
    Ok(trace)
}

/// Runs one verification check on the EDM trajectory defined by `cfg`.
/// Lemma checks need a noise-free problem; `lemma3` needs `reps ≥ 30`.
pub fn verify(cfg: &RunConfig, check: CheckKind, jobs: usize) -> Result<Vec<CheckOutcome>> {
    let mut cfg = cfg.clone();
    // monitors are chosen by the check, not the config
    cfg.monitors.clear();
    let setup = prepare(&cfg)?;
    let variant = cfg.monitor_set()?.variant;
    let quiet = |set: MonitorSet| -> Result<()> {
        if set.lemmas() && !setup.problem.noise_free() {
            return Err(Error::MonitorRefused(
                "lemma monitors need sigma = 0; use --check lemma3 for noisy runs".into(),
            ));
        }
        Ok(())
    };
    match check {
        CheckKind::Lemma1 => {
            let set = MonitorSet { lemma1: true, ..MonitorSet::default() };
            quiet(set)?;
            let m = monitored_run(&cfg, &setup, set)?.lemma_margins.expect("lemma run");
            Ok(vec![outcome("lemma1", m.lemma1 >= -MONITOR_TOL, m.lemma1)])
        }
        CheckKind::Lemma2 => {
            let set = MonitorSet { lemma2: true, ..MonitorSet::default() };
            quiet(set)?;
            let c = setup.problem.constants();
            if c.mu <= 0.0 || c.f_star.is_none() {
                return Err(Error::UnsupportedRegime(
                    "lemma2 needs a PL problem (mu > 0) with known f*".into(),
                ));
            }
            let m = monitored_run(&cfg, &setup, set)?.lemma_margins.expect("lemma run");
            Ok(vec![outcome("lemma2", m.lemma2 >= -MONITOR_TOL, m.lemma2)])
        }
        CheckKind::Lemma5 => {
            let set = MonitorSet { lemma5: true, ..MonitorSet::default() };
            quiet(set)?;
            let s = monitored_run(&cfg, &setup, set)?.lemma5.expect("lemma run");
            let margin = s.residual() / s.lhs.abs().max(s.rhs.abs()).max(1.0);
            Ok(vec![outcome("lemma5", margin >= -MONITOR_TOL, margin)])
        }
        CheckKind::Shadow => {
            let set = MonitorSet { shadow: true, variant, ..MonitorSet::default() };
            let trace = monitored_run(&cfg, &setup, set)?;
            let repr = trace.shadow_repr_gap.unwrap_or(f64::NAN);
            let mut out = vec![outcome("shadow", repr <= SHADOW_TOL, repr)];
            if setup.problem.noise_free() {
                let gap = trace
                    .monitors
                    .iter()
                    .flatten()
                    .map(|r| r.shadow_gap)
                    .fold(0.0f64, f64::max);
                out.push(outcome("shadow_collapse", gap <= COLLAPSE_TOL, gap));
            }
            Ok(out)
        }
        CheckKind::Lemma3 => {
            let spec = edm_spec(&cfg)?;
            let seeds: Vec<u64> = (0..cfg.reps as u64).map(|r| cfg.seed_base().wrapping_add(r)).collect();
            let est = super::experiment::pool(jobs)?.install(|| {
                lemma3_estimate(&spec, setup.problem.as_ref(), &setup.w, cfg.t_steps, &setup.x0, &seeds)
            })?;
            Ok(vec![outcome("lemma3", est.holds(), est.worst_ratio())])
        }
        CheckKind::Bounds => {
            cfg.algorithm = "edm".to_string().into();
            let setup = prepare(&cfg)?;
            let report = run_prepared(&cfg, &setup, jobs)?;
            let agg = report.aggregate(AlgorithmKind::Edm).expect("edm requested");
            if !agg.failed_reps.is_empty() {
                return Err(Error::Divergence { t: agg.rows.len(), agent: 0 });
            }
            let b = agg.bounds.as_ref().ok_or_else(|| Error::InvalidInput("bounds are undefined here".into()))?;
            let ratio = b.theorem1_lhs / b.theorem1;
            let mut out = vec![outcome("bounds_theorem1", ratio <= 1.0, ratio)];
            if let Some(bound) = b.theorem2_final {
                let subopt = agg.rows.last().map(|r| r.mean[3]).unwrap_or(f64::NAN);
                let ratio = subopt / bound;
                out.push(outcome("bounds_theorem2", ratio <= 1.0, ratio));
            }
            Ok(out)
        }
    }
}
