//! Experiment configuration.
//!
//! Configs are flat TOML documents. Every key is optional except `problem`,
//! `n`, `algorithm`, `alpha` and `T`; unknown keys are rejected. The keys `c`,
//! `sigma_h`, `alpha`, `beta` and `n` may hold a list, which turns the config
//! into a sweep over the Cartesian product of the listed values.
//!
//! ```toml
//! problem = "quadratic"
//! n = 32
//! c = [1, 4, 16]
//! sigma = 0.2236
//! algorithm = ["edm", "ed2", "dmsgd"]
//! alpha = 0.05
//! beta = 0.9
//! T = 5000
//! reps = 20
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgorithmKind, AlgorithmSpec};
use crate::analysis::{MonitorSet, NVariant};
use crate::error::{Error, Result};
use crate::problems::LossScale;

pub const DEFAULT_SWEEP_BUDGET: usize = 256;

/// A scalar or a list of sweep values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    fn is_list(&self) -> bool {
        matches!(self, OneOrMany::Many(_))
    }

    /// The single value, or an error naming `key` if this is a list.
    fn scalar(&self, key: &str) -> Result<T> {
        match self {
            OneOrMany::One(v) => Ok(v.clone()),
            OneOrMany::Many(v) if v.len() == 1 => Ok(v[0].clone()),
            OneOrMany::Many(_) => Err(Error::Config(format!(
                "`{key}` holds a sweep list; use the sweep command"
            ))),
        }
    }
}

impl<T> From<T> for OneOrMany<T> {
    fn from(v: T) -> Self {
        OneOrMany::One(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemSource {
    Quadratic,
    Logistic,
    Welsch,
    /// Portable dump named by `problem_file`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Ring,
    Complete,
    /// CSV matrix named by `topology_file`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialPoint {
    Zeros,
    /// Common start drawn from `N(0, I)` with the problem seed.
    Gaussian,
    /// Comma-separated vector named by `x0_file`.
    File,
}

mod defaults {
    pub fn d() -> usize {
        10
    }
    pub fn p() -> usize {
        20
    }
    pub fn m() -> usize {
        2000
    }
    pub fn one() -> super::OneOrMany<f64> {
        super::OneOrMany::One(1.0)
    }
    pub fn zero_many() -> super::OneOrMany<f64> {
        super::OneOrMany::One(0.0)
    }
    pub fn response_noise() -> f64 {
        crate::problems::DEFAULT_RESPONSE_NOISE
    }
    pub fn loss_scale() -> String {
        "sum".into()
    }
    pub fn topology() -> super::TopologyKind {
        super::TopologyKind::Ring
    }
    pub fn x0() -> super::InitialPoint {
        super::InitialPoint::Zeros
    }
    pub fn reps() -> usize {
        1
    }
    pub fn monitors() -> Vec<String> {
        Vec::new()
    }
    pub fn shadow_variant() -> String {
        "nonconvex".into()
    }
    pub fn outputs() -> Vec<String> {
        vec!["traces".into(), "aggregate".into()]
    }
    pub fn out() -> std::path::PathBuf {
        "results".into()
    }
    pub fn yes() -> bool {
        true
    }
    pub fn budget() -> usize {
        super::DEFAULT_SWEEP_BUDGET
    }
}

/// Parsed configuration. After [`RunConfig::parse`] every default is filled
/// in, so serializing it gives the effective config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // problem
    pub problem: ProblemSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_file: Option<PathBuf>,
    pub n: OneOrMany<usize>,
    #[serde(default = "defaults::d")]
    pub d: usize,
    #[serde(default = "defaults::p")]
    pub p: usize,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::one")]
    pub c: OneOrMany<f64>,
    #[serde(default = "defaults::one")]
    pub sigma_h: OneOrMany<f64>,
    /// Standard deviation of the quadratic response noise.
    #[serde(default)]
    pub sigma: f64,
    /// Standard deviation of the additive gradient noise (logistic, Welsch).
    #[serde(default)]
    pub sigma_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_reg: Option<f64>,
    #[serde(default = "defaults::response_noise")]
    pub response_noise: f64,
    #[serde(default = "defaults::loss_scale")]
    pub loss_scale: String,
    #[serde(default)]
    pub seed: u64,

    // topology
    #[serde(default = "defaults::topology")]
    pub topology: TopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology_file: Option<PathBuf>,
    #[serde(default)]
    pub lazy: bool,

    // algorithm
    pub algorithm: OneOrMany<String>,
    pub alpha: OneOrMany<f64>,
    #[serde(default = "defaults::zero_many")]
    pub beta: OneOrMany<f64>,
    #[serde(rename = "T")]
    pub t_steps: usize,
    #[serde(default)]
    pub lr_drop: Vec<usize>,
    #[serde(default = "defaults::x0")]
    pub x0: InitialPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_file: Option<PathBuf>,

    // experiment
    #[serde(default = "defaults::reps")]
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_base: Option<u64>,
    #[serde(default = "defaults::monitors")]
    pub monitors: Vec<String>,
    #[serde(default = "defaults::shadow_variant")]
    pub shadow_variant: String,
    #[serde(default = "defaults::outputs")]
    pub outputs: Vec<String>,
    #[serde(default = "defaults::out")]
    pub out: PathBuf,
    /// Share gradient-noise streams across algorithms within a rep.
    #[serde(default = "defaults::yes")]
    pub paired_noise: bool,
    #[serde(default = "defaults::budget")]
    pub sweep_budget: usize,
}

/// Keys that may carry sweep lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    C,
    SigmaH,
    Alpha,
    Beta,
    N,
}

impl SweepKey {
    pub const ALL: [SweepKey; 5] = [SweepKey::C, SweepKey::SigmaH, SweepKey::Alpha, SweepKey::Beta, SweepKey::N];

    pub fn name(self) -> &'static str {
        match self {
            SweepKey::C => "c",
            SweepKey::SigmaH => "sigma_h",
            SweepKey::Alpha => "alpha",
            SweepKey::Beta => "beta",
            SweepKey::N => "n",
        }
    }
}

impl fmt::Display for SweepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One point of a sweep: a scalar config plus the values that define it.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub labels: Vec<(SweepKey, f64)>,
    pub config: RunConfig,
}

const OUTPUT_NAMES: [&str; 3] = ["traces", "aggregate", "problem"];

impl RunConfig {
    /// Parses a TOML document. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            for path in [&mut cfg.problem_file, &mut cfg.topology_file, &mut cfg.x0_file].into_iter().flatten() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        cfg.seed_base.get_or_insert(cfg.seed);
        cfg.lr_drop.sort_unstable();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        let need_file = |kind: &str, path: &Option<PathBuf>| -> Result<()> {
            match path {
                None => Err(Error::Config(format!("{kind} = \"file\" needs {kind}_file"))),
                Some(p) if !p.is_file() => Err(Error::Config(format!("{kind}_file {} does not exist", p.display()))),
                Some(_) => Ok(()),
            }
        };
        if self.problem == ProblemSource::File {
            need_file("problem", &self.problem_file)?;
        }
        if self.topology == TopologyKind::File {
            need_file("topology", &self.topology_file)?;
        }
        if self.x0 == InitialPoint::File {
            need_file("x0", &self.x0_file)?;
        }
        if self.problem == ProblemSource::Logistic && self.mu_reg.is_none() {
            return Err(Error::Config("missing required key `mu_reg` for the logistic problem".into()));
        }
        self.kinds()?;
        self.loss_scale()?;
        self.monitor_set()?;
        for out in &self.outputs {
            if !OUTPUT_NAMES.contains(&out.as_str()) {
                return Err(Error::Config(format!(
                    "unknown output {out:?}; expected one of {}",
                    OUTPUT_NAMES.join(", ")
                )));
            }
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.t_steps == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        for key in SweepKey::ALL {
            if self.sweep_values(key).is_empty() {
                return Err(Error::Config(format!("`{key}` has an empty list")));
            }
        }
        for alpha in self.alpha.values() {
            for beta in self.beta.values() {
                AlgorithmSpec::new(AlgorithmKind::Edm, alpha, beta).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        if self.n.values().contains(&0) {
            return Err(Error::Config("n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kinds(&self) -> Result<Vec<AlgorithmKind>> {
        let kinds = self
            .algorithm
            .values()
            .iter()
            .map(|s| s.parse::<AlgorithmKind>())
            .collect::<Result<Vec<_>>>()?;
        if kinds.is_empty() {
            return Err(Error::Config("`algorithm` lists no algorithm".into()));
        }
        Ok(kinds)
    }

    pub fn loss_scale(&self) -> Result<LossScale> {
        match self.loss_scale.as_str() {
            "sum" => Ok(LossScale::Sum),
            "mean" => Ok(LossScale::Mean),
            other => Err(Error::Config(format!("unknown loss_scale {other:?}; expected sum or mean"))),
        }
    }

    pub fn monitor_set(&self) -> Result<MonitorSet> {
        let mut set = MonitorSet::parse_list(&self.monitors.join(","))?;
        set.variant = self.shadow_variant.parse::<NVariant>()?;
        Ok(set)
    }

    pub fn seed_base(&self) -> u64 {
        self.seed_base.unwrap_or(self.seed)
    }

    pub fn wants(&self, output: &str) -> bool {
        self.outputs.iter().any(|o| o == output)
    }

    pub fn is_sweep(&self) -> bool {
        self.c.is_list() || self.sigma_h.is_list() || self.alpha.is_list() || self.beta.is_list() || self.n.is_list()
    }

    fn sweep_values(&self, key: SweepKey) -> Vec<f64> {
        match key {
            SweepKey::C => self.c.values(),
            SweepKey::SigmaH => self.sigma_h.values(),
            SweepKey::Alpha => self.alpha.values(),
            SweepKey::Beta => self.beta.values(),
            SweepKey::N => self.n.values().into_iter().map(|v| v as f64).collect(),
        }
    }

    pub fn agents(&self) -> Result<usize> {
        self.n.scalar("n")
    }

    pub fn divisor(&self) -> Result<f64> {
        self.c.scalar("c")
    }

    pub fn spread(&self) -> Result<f64> {
        self.sigma_h.scalar("sigma_h")
    }

    /// Algorithm specs for a scalar config.
    pub fn specs(&self) -> Result<Vec<AlgorithmSpec>> {
        let alpha = self.alpha.scalar("alpha")?;
        let beta = self.beta.scalar("beta")?;
        self.kinds()?
            .into_iter()
            .map(|k| Ok(AlgorithmSpec::new(k, alpha, beta)?.with_lr_drop(self.lr_drop.clone())))
            .collect()
    }

    /// Cartesian product of the sweep lists, in key order `c, sigma_h,
    /// alpha, beta, n` with the last key varying fastest. A config without
    /// lists yields a single point.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let swept: Vec<(SweepKey, Vec<f64>)> = SweepKey::ALL
            .into_iter()
            .map(|k| (k, self.sweep_values(k)))
            .filter(|(_, v)| v.len() > 1)
            .collect();
        let total = swept.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()));
        match total {
            Some(t) if t <= self.sweep_budget => {}
            other => {
                return Err(Error::SweepBudget {
                    points: other.unwrap_or(usize::MAX),
                    budget: self.sweep_budget,
                })
            }
        }
        let mut combos: Vec<Vec<(SweepKey, f64)>> = vec![Vec::new()];
        for (key, values) in &swept {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut next = prefix.clone();
                        next.push((*key, v));
                        next
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .enumerate()
            .map(|(index, labels)| {
                let mut config = self.clone();
                for &(key, v) in &labels {
                    match key {
                        SweepKey::C => config.c = v.into(),
                        SweepKey::SigmaH => config.sigma_h = v.into(),
                        SweepKey::Alpha => config.alpha = v.into(),
                        SweepKey::Beta => config.beta = v.into(),
                        SweepKey::N => config.n = (v as usize).into(),
                    }
                }
                Ok(SweepPoint { index, labels, config })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
problem = "quadratic"
n = 32
algorithm = "edm"
alpha = 0.05
beta = 0.9
T = 1000
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::parse(MINIMAL, None).unwrap();
        assert_eq!(cfg.d, 10);
        assert_eq!(cfg.p, 20);
        assert_eq!(cfg.topology, TopologyKind::Ring);
        assert_eq!(cfg.reps, 1);
        assert_eq!(cfg.seed_base(), 0);
        assert!(!cfg.is_sweep());
        let echo = cfg.to_toml();
        for key in ["d = 10", "p = 20", "reps = 1", "sweep_budget = 256", "T = 1000", "paired_noise = true"] {
            assert!(echo.contains(key), "{key} missing from\n{echo}");
        }
        assert_eq!(RunConfig::parse(&echo, None).unwrap(), cfg);
    }

    #[test]
    fn unknown_and_missing_keys() {
        let err = RunConfig::parse(&format!("{MINIMAL}\ncolour = 3\n"), None).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        let err = RunConfig::parse(&MINIMAL.replace("alpha = 0.05", ""), None).unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
    }

    #[test]
    fn unsupported_algorithm() {
        let err = RunConfig::parse(&MINIMAL.replace("\"edm\"", "\"decentlam\""), None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("unsupported algorithm"));
        assert!(err.contains("dsgd, dmsgd, ed2, edm, dsgt, dsgt_hb"));
    }

    #[test]
    fn sweep_lists_only_on_allowed_keys() {
        let cfg = RunConfig::parse(&format!("{MINIMAL}\nc = [1, 4, 16]\n"), None).unwrap();
        assert!(cfg.is_sweep());
        let points = cfg.points().unwrap();
        assert_eq!(points.len(), 3);
        assert_eq!(points[2].labels, vec![(SweepKey::C, 16.0)]);
        assert_eq!(points[2].config.divisor().unwrap(), 16.0);
        assert!(cfg.divisor().is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\nd = [1, 2]\n"), None).is_err());
    }

    #[test]
    fn product_and_budget() {
        let text = MINIMAL.replace("alpha = 0.05", "alpha = [0.05, 0.025]").replace("n = 32", "n = [8, 16, 32]");
        let cfg = RunConfig::parse(&text, None).unwrap();
        let points = cfg.points().unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[1].labels, vec![(SweepKey::Alpha, 0.05), (SweepKey::N, 16.0)]);
        assert_eq!(points[1].config.agents().unwrap(), 16);
        let tight = RunConfig::parse(&format!("{text}\nsweep_budget = 5\n"), None).unwrap();
        assert!(matches!(tight.points(), Err(Error::SweepBudget { points: 6, budget: 5 })));
    }

    #[test]
    fn logistic_requires_mu_reg() {
        let text = MINIMAL.replace("quadratic", "logistic");
        let err = RunConfig::parse(&text, None).unwrap_err().to_string();
        assert!(err.contains("mu_reg"));
        assert!(RunConfig::parse(&format!("{text}\nmu_reg = 0.01\n"), None).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse(&MINIMAL.replace("beta = 0.9", "beta = 1.5"), None).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\nreps = 0\n"), None).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\nmonitors = [\"lemma9\"]\n"), None).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\noutputs = [\"plots\"]\n"), None).is_err());
        assert!(RunConfig::parse(&MINIMAL.replace("\"quadratic\"", "\"file\""), None).is_err());
        assert!(RunConfig::parse("problem = \"quadratic\"\nn = ", None).is_err());
    }
}
