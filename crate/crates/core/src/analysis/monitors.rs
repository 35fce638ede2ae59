//! Per-step checks of the descent lemmas along noise-free EDM trajectories,
//! and the Monte Carlo estimate of the shadow noise term.

use rayon::prelude::*;

use crate::algorithms::{self, full_gradients, AlgorithmKind, AlgorithmSpec, OptimizerState};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::problems::Problem;
use crate::topology::MixingMatrix;
use crate::trace::{MonitorRow, SumCheck};

use super::{aux_z, lemma3_bound, NVariant, ShadowState};

/// Which monitors to attach to a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonitorSet {
    pub lemma1: bool,
    pub lemma2: bool,
    pub lemma5: bool,
    pub shadow: bool,
    pub variant: NVariant,
}

impl MonitorSet {
    pub fn all() -> Self {
        Self {
            lemma1: true,
            lemma2: true,
            lemma5: true,
            shadow: true,
            variant: NVariant::default(),
        }
    }

    pub fn shadow_only() -> Self {
        Self {
            shadow: true,
            ..Self::default()
        }
    }

    pub fn any(&self) -> bool {
        self.lemmas() || self.shadow
    }

    pub fn lemmas(&self) -> bool {
        self.lemma1 || self.lemma2 || self.lemma5
    }

    /// Parses a comma-separated list of `lemma1`, `lemma2`, `lemma5`,
    /// `shadow`, or one of `all` / `none`.
    pub fn parse_list(text: &str) -> Result<Self> {
        let mut set = Self::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "all" | "on" | "true" => set = Self { variant: set.variant, ..Self::all() },
                "none" | "off" | "false" => {}
                "lemma1" => set.lemma1 = true,
                "lemma2" => set.lemma2 = true,
                "lemma5" => set.lemma5 = true,
                "shadow" => set.shadow = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown monitor {other:?}; expected lemma1, lemma2, lemma5, shadow, all or none"
                    )))
                }
            }
        }
        Ok(set)
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (on, name) in [
            (self.lemma1, "lemma1"),
            (self.lemma2, "lemma2"),
            (self.lemma5, "lemma5"),
            (self.shadow, "shadow"),
        ] {
            if on {
                out.push(name);
            }
        }
        out
    }
}

/// Smallest normalized residual `(RHS − LHS) / max(|LHS|, |RHS|, 1)` seen for
/// each lemma; NaN if the lemma was not evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaMargins {
    pub lemma1: f64,
    pub lemma2: f64,
}

fn normalized(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / lhs.abs().max(rhs.abs()).max(1.0)
}

/// Monitor bookkeeping carried alongside an EDM run.
#[derive(Debug, Clone)]
pub struct MonitorState {
    set: MonitorSet,
    spec: AlgorithmSpec,
    l_smooth: f64,
    mu: f64,
    pl_available: bool,
    x_bar_prev: Vector,
    lemma5: (f64, f64),
    margins: LemmaMargins,
    shadow: Option<ShadowState>,
}

impl MonitorState {
    pub fn new(
        spec: &AlgorithmSpec,
        problem: &dyn Problem,
        w: &MixingMatrix,
        state: &OptimizerState,
        set: &MonitorSet,
    ) -> Result<Self> {
        if spec.kind != AlgorithmKind::Edm {
            return Err(Error::MonitorRefused(format!(
                "monitors track EDM trajectories, not {}",
                spec.kind
            )));
        }
        if set.lemmas() && !problem.noise_free() {
            return Err(Error::MonitorRefused(
                "lemma monitors hold in expectation only and need sigma = 0; \
                 use the Monte Carlo shadow estimate (lemma3) for noisy runs"
                    .into(),
            ));
        }
        let shadow = if set.shadow {
            Some(ShadowState::new(w, &state.x, set.variant)?)
        } else {
            None
        };
        let c = problem.constants();
        Ok(Self {
            set: *set,
            spec: spec.clone(),
            l_smooth: c.l_smooth,
            mu: c.mu,
            pl_available: c.mu > 0.0 && c.f_star.is_some(),
            x_bar_prev: linalg::row_mean(&state.x),
            lemma5: (0.0, 0.0),
            margins: LemmaMargins {
                lemma1: if set.lemma1 { f64::INFINITY } else { f64::NAN },
                lemma2: if set.lemma2 && c.mu > 0.0 && c.f_star.is_some() {
                    f64::INFINITY
                } else {
                    f64::NAN
                },
            },
            shadow,
        })
    }

    /// Evaluates the monitors for round `t = state.t − 1`, right after the
    /// optimizer stepped from `X^(t)` (`state.x_prev`) to `X^(t+1)`.
    pub fn observe(&mut self, state: &OptimizerState, problem: &dyn Problem, w: &MixingMatrix) -> Result<MonitorRow> {
        let t = state.t - 1;
        let x = &state.x_prev;
        let n = x.nrows() as f64;
        let (alpha, beta, l) = (self.spec.alpha_at(t), self.spec.beta, self.l_smooth);
        let mut row = MonitorRow {
            lemma1_residual: f64::NAN,
            lemma2_residual: f64::NAN,
            shadow_gap: f64::NAN,
        };

        if self.set.lemmas() {
            let x_bar = linalg::row_mean(x);
            let x_bar_next = linalg::row_mean(&state.x);
            let z = if t == 0 { x_bar.clone() } else { aux_z(&x_bar, &self.x_bar_prev, beta) };
            let z_next = aux_z(&x_bar_next, &x_bar, beta);
            let m_prev_sq = linalg::row_mean(&state.m_prev).norm_squared();
            let m_sq = linalg::row_mean(&state.m).norm_squared();
            let pi_sq = linalg::consensus_sq(x);
            let g_bar_sq = linalg::row_mean(&full_gradients(problem, x)?).norm_squared();

            if self.set.lemma1 {
                let g_avg_sq = problem.global_gradient(&x_bar)?.norm_squared();
                let lhs = problem.objective(&z_next)?;
                let rhs = problem.objective(&z)? + alpha * alpha * l * beta / (2.0 * (1.0 - beta)) * m_prev_sq
                    + alpha * l * l / (2.0 * n) * pi_sq
                    - alpha / 2.0 * (1.0 - beta * alpha * l / (1.0 - beta) - alpha * l) * g_bar_sq
                    - alpha / 2.0 * g_avg_sq;
                row.lemma1_residual = rhs - lhs;
                self.margins.lemma1 = self.margins.lemma1.min(normalized(lhs, rhs));
            }
            if self.set.lemma2 && self.pl_available {
                let gap = |v: &Vector| -> Result<f64> { Ok(problem.suboptimality(v)?.unwrap_or(f64::NAN)) };
                let lhs = gap(&z_next)?;
                let rhs = (1.0 - alpha * self.mu) * gap(&z)? - alpha * (1.0 - alpha * l) / 2.0 * g_bar_sq
                    + alpha * l * l / (2.0 * n) * pi_sq
                    + alpha.powi(3) * l * l * beta * beta / (2.0 * (1.0 - beta).powi(2)) * m_prev_sq;
                row.lemma2_residual = rhs - lhs;
                self.margins.lemma2 = self.margins.lemma2.min(normalized(lhs, rhs));
            }
            if self.set.lemma5 {
                self.lemma5.0 += m_sq;
                self.lemma5.1 += g_bar_sq;
            }
            self.x_bar_prev = x_bar;
        }

        if let Some(sh) = self.shadow.as_mut() {
            row.shadow_gap = sh.gap(x);
            sh.step(x, w, problem, alpha, beta)?;
        }
        Ok(row)
    }

    pub fn lemma5(&self) -> Option<SumCheck> {
        self.set.lemma5.then_some(SumCheck {
            lhs: self.lemma5.0,
            rhs: self.lemma5.1,
        })
    }

    pub fn margins(&self) -> LemmaMargins {
        self.margins
    }

    pub fn shadow(&self) -> Option<&ShadowState> {
        self.shadow.as_ref()
    }

    pub fn shadow_repr_gap(&self) -> Option<f64> {
        self.shadow.as_ref().map(|s| s.repr_gap)
    }
}

/// Monte Carlo estimate of `E‖P_I(X^(t) − X̃^(t))‖²_F` against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Estimate {
    pub empirical: Vec<f64>,
    pub bound: f64,
    /// No gradient noise: both sides vanish.
    pub trivial: bool,
}

impl Lemma3Estimate {
    pub fn worst_ratio(&self) -> f64 {
        if self.trivial {
            return 0.0;
        }
        self.empirical.iter().fold(0.0f64, |a, v| a.max(*v)) / self.bound
    }

    pub fn holds(&self) -> bool {
        self.trivial || self.empirical.iter().all(|&v| v <= self.bound)
    }
}

/// Runs one paired (real, shadow) EDM trajectory per seed, in parallel, and
/// averages the shadow gap per iteration.
pub fn lemma3_estimate(
    spec: &AlgorithmSpec,
    problem: &dyn Problem,
    w: &MixingMatrix,
    t_steps: usize,
    x0: &Vector,
    seeds: &[u64],
) -> Result<Lemma3Estimate> {
    if spec.kind != AlgorithmKind::Edm {
        return Err(Error::InvalidInput("the shadow estimate follows EDM".into()));
    }
    if seeds.len() < 30 {
        return Err(Error::InvalidInput(format!("need at least 30 reps, got {}", seeds.len())));
    }
    let sigma_sq = problem.constants().sigma_sq;
    let bound = lemma3_bound(spec.alpha, w.lambda(), problem.agents(), sigma_sq);
    if sigma_sq == 0.0 {
        return Ok(Lemma3Estimate {
            empirical: vec![0.0; t_steps],
            bound,
            trivial: true,
        });
    }
    let monitors = MonitorSet::shadow_only();
    let gaps = seeds
        .par_iter()
        .map(|&seed| {
            let trace = algorithms::run(spec, problem, w, t_steps, x0, seed, &monitors)?;
            Ok(trace.column("shadow_gap").expect("shadow monitor enabled"))
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = gaps.len() as f64;
    let empirical = (0..t_steps)
        .map(|t| gaps.iter().map(|g| g[t]).sum::<f64>() / reps)
        .collect();
    Ok(Lemma3Estimate {
        empirical,
        bound,
        trivial: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{max_step_size, run, Regime};
    use crate::linalg::Matrix;
    use crate::problems::{gen_quadratic, LossScale, QuadraticProblem};
    use crate::topology::{build_complete, build_ring, lazy_transform};

    #[test]
    fn parse_monitor_lists() {
        let s = MonitorSet::parse_list("lemma1, shadow").unwrap();
        assert!(s.lemma1 && s.shadow && !s.lemma2);
        assert_eq!(MonitorSet::parse_list("all").unwrap(), MonitorSet::all());
        assert!(!MonitorSet::parse_list("none").unwrap().any());
        assert!(MonitorSet::parse_list("lemma4").is_err());
        assert_eq!(MonitorSet::all().names(), ["lemma1", "lemma2", "lemma5", "shadow"]);
    }

    #[test]
    fn refuses_noisy_lemmas_and_other_methods() {
        let p = gen_quadratic(4, 2, 3, 1.0, 0.1, 1).unwrap();
        let w = build_ring(4).unwrap();
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 0.01, 0.5).unwrap();
        let lemma = MonitorSet { lemma1: true, ..MonitorSet::default() };
        let err = run(&spec, &p, &w, 10, &Vector::zeros(2), 0, &lemma).unwrap_err();
        assert!(matches!(err.error, Error::MonitorRefused(_)));
        assert!(run(&spec, &p, &w, 10, &Vector::zeros(2), 0, &MonitorSet::shadow_only()).is_ok());
        let dm = AlgorithmSpec::new(AlgorithmKind::Dmsgd, 0.01, 0.5).unwrap();
        assert!(run(&dm, &p, &w, 10, &Vector::zeros(2), 0, &MonitorSet::shadow_only()).is_err());
    }

    #[test]
    fn lemma5_equality_without_momentum() {
        let p = gen_quadratic(5, 3, 4, 1.0, 0.0, 2).unwrap();
        let w = lazy_transform(&build_ring(5).unwrap()).unwrap();
        let alpha = max_step_size(0.0, w.lambda(), p.constants().l_smooth, Regime::Nonconvex);
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, alpha, 0.0).unwrap();
        let set = MonitorSet { lemma5: true, ..MonitorSet::default() };
        let tr = run(&spec, &p, &w, 200, &Vector::zeros(3), 0, &set).unwrap();
        let s = tr.lemma5.unwrap();
        assert!((s.lhs - s.rhs).abs() <= 1e-12 * s.rhs);
    }

    #[test]
    fn lemma_residuals_nonnegative_on_hand_problem() {
        let p = QuadraticProblem::from_parts(
            vec![Matrix::from_element(1, 1, 1.0); 2],
            vec![Vector::from_element(1, 0.0), Vector::from_element(1, 2.0)],
            1.0,
            0.0,
            LossScale::Sum,
        )
        .unwrap();
        let w = lazy_transform(&build_complete(2).unwrap()).unwrap();
        for beta in [0.0, 0.9] {
            let alpha = max_step_size(beta, w.lambda(), 1.0, Regime::Nonconvex);
            let spec = AlgorithmSpec::new(AlgorithmKind::Edm, alpha, beta).unwrap();
            let mut state = algorithms::init(&spec, &p, &Vector::zeros(1)).unwrap();
            let mut mon = MonitorState::new(&spec, &p, &w, &state, &MonitorSet::all()).unwrap();
            for _ in 0..500 {
                algorithms::step(&mut state, &spec, &w, &p, 0).unwrap();
                mon.observe(&state, &p, &w).unwrap();
            }
            let m = mon.margins();
            assert!(m.lemma1 >= -1e-9 && m.lemma2 >= -1e-9, "beta {beta}: {m:?}");
        }
    }

    #[test]
    fn noise_term_estimate() {
        let p = gen_quadratic(6, 3, 5, 1.0, 0.2, 4).unwrap();
        let w = lazy_transform(&build_ring(6).unwrap()).unwrap();
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 0.002, 0.5).unwrap();
        let seeds: Vec<u64> = (0..30).collect();
        let est = lemma3_estimate(&spec, &p, &w, 100, &Vector::zeros(3), &seeds).unwrap();
        assert!(!est.trivial && est.holds());
        assert_eq!(est.empirical[0], 0.0);
        assert!(est.empirical[50] > 0.0);
        assert!(lemma3_estimate(&spec, &p, &w, 100, &Vector::zeros(3), &seeds[..10]).is_err());
        let quiet = gen_quadratic(6, 3, 5, 1.0, 0.0, 4).unwrap();
        assert!(lemma3_estimate(&spec, &quiet, &w, 10, &Vector::zeros(3), &seeds).unwrap().trivial);
    }
}
