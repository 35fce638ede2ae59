//! Synchronous-round optimizers sharing one stepping interface.
//!
//! Every method draws one stochastic gradient per agent per round from the
//! stream keyed by `(seed, agent, t)`, so runs of different methods on the
//! same seed see identical noise.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::analysis::{self, MonitorSet, MonitorState};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::problems::Problem;
use crate::rng::{Purpose, RngStream};
use crate::topology::MixingMatrix;
use crate::trace::Trace;

/// Frobenius norm of the iterate above which a run counts as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Multiplier applied to the step size at each scheduled drop.
pub const LR_DROP_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Dsgd,
    Dmsgd,
    Ed2,
    Edm,
    Dsgt,
    DsgtHb,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 6] = [
        AlgorithmKind::Dsgd,
        AlgorithmKind::Dmsgd,
        AlgorithmKind::Ed2,
        AlgorithmKind::Edm,
        AlgorithmKind::Dsgt,
        AlgorithmKind::DsgtHb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Dsgd => "dsgd",
            AlgorithmKind::Dmsgd => "dmsgd",
            AlgorithmKind::Ed2 => "ed2",
            AlgorithmKind::Edm => "edm",
            AlgorithmKind::Dsgt => "dsgt",
            AlgorithmKind::DsgtHb => "dsgt_hb",
        }
    }

    pub fn uses_momentum(self) -> bool {
        matches!(self, AlgorithmKind::Dmsgd | AlgorithmKind::Edm | AlgorithmKind::DsgtHb)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unsupported algorithm {s:?}; supported: {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub alpha: f64,
    /// Momentum weight; ignored by methods without momentum.
    pub beta: f64,
    /// Iterations at which the step size is multiplied by [`LR_DROP_FACTOR`].
    pub lr_drop: Vec<usize>,
}

impl AlgorithmSpec {
    pub fn new(kind: AlgorithmKind, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidInput(format!("beta must lie in [0, 1), got {beta}")));
        }
        Ok(Self { kind, alpha, beta, lr_drop: Vec::new() })
    }

    pub fn with_lr_drop(mut self, mut drops: Vec<usize>) -> Self {
        drops.sort_unstable();
        self.lr_drop = drops;
        self
    }

    /// Step size in force at iteration `t`.
    pub fn alpha_at(&self, t: usize) -> f64 {
        let drops = self.lr_drop.iter().filter(|&&d| d <= t).count();
        self.alpha * LR_DROP_FACTOR.powi(drops as i32)
    }

    fn momentum(&self) -> f64 {
        if self.kind.uses_momentum() {
            self.beta
        } else {
            0.0
        }
    }

    /// Human-readable notes when `alpha` exceeds the admissible ranges of the
    /// convergence theorems. Never fatal.
    pub fn admissibility_warnings(&self, lambda: f64, l_smooth: f64, mu: f64) -> Vec<String> {
        let mut out = Vec::new();
        let beta = self.momentum();
        let nc = max_step_size(beta, lambda, l_smooth, Regime::Nonconvex);
        if self.alpha > nc {
            out.push(format!("alpha {} exceeds the nonconvex admissible step {nc:e}", self.alpha));
        }
        if mu > 0.0 {
            let pl = max_step_size(beta, lambda, l_smooth, Regime::Pl);
            if self.alpha > pl {
                out.push(format!("alpha {} exceeds the PL admissible step {pl:e} (alpha*L reading)", self.alpha));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Nonconvex,
    Pl,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nonconvex" => Ok(Regime::Nonconvex),
            "pl" => Ok(Regime::Pl),
            other => Err(Error::Config(format!("unknown regime {other:?}; expected nonconvex or pl"))),
        }
    }
}

/// Largest step size covered by the convergence theorems. The PL condition
/// is read as a bound on `αL`, so it is divided by `L` as well.
pub fn max_step_size(beta: f64, lambda: f64, l_smooth: f64, regime: Regime) -> f64 {
    let gap = 1.0 - lambda.sqrt();
    match regime {
        Regime::Nonconvex => (gap / (4.0 * l_smooth)).min((1.0 - beta) / (4.0 * l_smooth)),
        Regime::Pl => max_step_size_pl_literal(beta, lambda) / l_smooth,
    }
}

/// PL step-size condition taken literally, without the `1/L` factor.
pub fn max_step_size_pl_literal(beta: f64, lambda: f64) -> f64 {
    ((1.0 - lambda.sqrt()) / 10.0).min((1.0 - beta) / 5.0)
}

/// Parameters and history of one run.
///
/// Between rounds `x` holds `X^(t)` and `x_prev` holds `X^(t−1)`; `m` holds
/// the previous round's descent direction (momentum for momentum methods,
/// tracker for DSGT, raw gradient otherwise) and `m_prev` the one before.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub t: usize,
    pub x: Matrix,
    pub x_prev: Matrix,
    pub m: Matrix,
    pub m_prev: Matrix,
    /// EDM adapt iterate `ψ^(t)`.
    pub psi: Matrix,
    /// Last round's stochastic gradients (gradient tracking).
    pub g_prev: Matrix,
    /// Gradient tracker `Y^(t−1)`.
    pub y: Matrix,
    pub alpha_prev: f64,
    pub grad_calls: u64,
    pub noise_checksum: u64,
}

impl OptimizerState {
    pub fn agents(&self) -> usize {
        self.x.nrows()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub t: usize,
    pub grad_calls: usize,
    pub wall_time: Duration,
    pub noise_checksum: u64,
}

/// All agents start from the same `x0`.
pub fn init(spec: &AlgorithmSpec, problem: &dyn Problem, x0: &Vector) -> Result<OptimizerState> {
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: x0.len() });
    }
    init_rows(spec, problem, linalg::broadcast_rows(problem.agents(), x0))
}

/// Starts from an arbitrary `n × d` matrix of agent parameters.
pub fn init_rows(spec: &AlgorithmSpec, problem: &dyn Problem, x0: Matrix) -> Result<OptimizerState> {
    let (n, d) = (problem.agents(), problem.dim());
    if x0.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.nrows() });
    }
    if x0.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.ncols() });
    }
    Ok(OptimizerState {
        t: 0,
        x_prev: x0.clone(),
        psi: x0.clone(),
        x: x0,
        m: Matrix::zeros(n, d),
        m_prev: Matrix::zeros(n, d),
        g_prev: Matrix::zeros(n, d),
        y: Matrix::zeros(n, d),
        alpha_prev: spec.alpha_at(0),
        grad_calls: 0,
        noise_checksum: 0,
    })
}

pub(crate) fn fold_checksum(acc: u64, word: u64) -> u64 {
    (acc ^ word).wrapping_mul(0x0000_0100_0000_01b3)
}

/// One stochastic gradient per agent at the rows of `x`, plus the checksum of
/// the noise drawn.
pub fn round_gradients(problem: &dyn Problem, x: &Matrix, t: usize, seed: u64) -> Result<(Matrix, u64)> {
    let mut g = Matrix::zeros(x.nrows(), x.ncols());
    let mut checksum = 0;
    for i in 0..x.nrows() {
        let mut rng = RngStream::new(seed, Purpose::GradientNoise, i as u64, t as u64);
        let gi = problem.stochastic_gradient(i, &linalg::row(x, i), &mut rng)?;
        linalg::set_row(&mut g, i, &gi);
        checksum = fold_checksum(checksum, rng.checksum());
    }
    Ok((g, checksum))
}

/// Deterministic gradients `∇f(X)` stacked by rows.
pub fn full_gradients(problem: &dyn Problem, x: &Matrix) -> Result<Matrix> {
    let mut g = Matrix::zeros(x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        let gi = problem.full_gradient(i, &linalg::row(x, i))?;
        linalg::set_row(&mut g, i, &gi);
    }
    Ok(g)
}

fn check_divergence(x: &Matrix, t: usize) -> Result<()> {
    let finite = x.iter().all(|v| v.is_finite());
    if finite && x.norm() <= DIVERGENCE_NORM {
        return Ok(());
    }
    let agent = (0..x.nrows())
        .find(|&i| x.row(i).iter().any(|v| !v.is_finite()))
        .unwrap_or_else(|| {
            (0..x.nrows())
                .max_by(|&a, &b| x.row(a).norm().total_cmp(&x.row(b).norm()))
                .unwrap_or(0)
        });
    Err(Error::Divergence { t, agent })
}

/// One synchronous round. The state is left untouched if the round diverges.
pub fn step(
    state: &mut OptimizerState,
    spec: &AlgorithmSpec,
    w: &MixingMatrix,
    problem: &dyn Problem,
    seed: u64,
) -> Result<StepRecord> {
    let start = Instant::now();
    let t = state.t;
    let n = state.agents();
    if w.agents() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.agents() });
    }
    let wm = w.matrix();
    let alpha = spec.alpha_at(t);
    let beta = spec.momentum();
    let (g, checksum) = round_gradients(problem, &state.x, t, seed)?;

    let mut psi_next = None;
    let mut tracked = None;
    let (x_next, direction) = match spec.kind {
        AlgorithmKind::Dsgd => (wm * (&state.x - &g * alpha), g),
        AlgorithmKind::Dmsgd => {
            let m = &state.m * beta + &g * (1.0 - beta);
            (wm * (&state.x - &m * alpha), m)
        }
        AlgorithmKind::Ed2 => {
            // state.m holds G^(t−1), zero at t = 0 where the round reduces to W(X − αG).
            let inner = &state.x * 2.0 - &state.x_prev - &g * alpha + &state.m * state.alpha_prev;
            (wm * inner, g)
        }
        AlgorithmKind::Edm => {
            let m = &state.m * beta + &g * (1.0 - beta);
            let psi = &state.x - &m * alpha;
            let phi = &psi + &state.x - &state.psi;
            psi_next = Some(psi);
            (wm * phi, m)
        }
        AlgorithmKind::Dsgt | AlgorithmKind::DsgtHb => {
            let y = if t == 0 { g.clone() } else { wm * &state.y + &g - &state.g_prev };
            let dir = if spec.kind == AlgorithmKind::DsgtHb {
                &state.m * beta + &y * (1.0 - beta)
            } else {
                y.clone()
            };
            tracked = Some((y, g));
            (wm * (&state.x - &dir * alpha), dir)
        }
    };
    check_divergence(&x_next, t)?;

    if let Some(psi) = psi_next {
        state.psi = psi;
    }
    if let Some((y, g)) = tracked {
        state.y = y;
        state.g_prev = g;
    }
    state.x_prev = std::mem::replace(&mut state.x, x_next);
    state.m_prev = std::mem::replace(&mut state.m, direction);
    state.alpha_prev = alpha;
    state.t += 1;
    state.grad_calls += n as u64;
    state.noise_checksum = fold_checksum(state.noise_checksum, checksum);
    Ok(StepRecord {
        t,
        grad_calls: n,
        wall_time: start.elapsed(),
        noise_checksum: checksum,
    })
}

/// A run that stopped early, with every row recorded before the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Trace,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} after {} recorded iterations", self.error, self.partial.len())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

/// Runs `t_steps` rounds from the common start `x0`, recording metric row `t`
/// for `X^(t)` and the direction computed in round `t`.
pub fn run(
    spec: &AlgorithmSpec,
    problem: &dyn Problem,
    w: &MixingMatrix,
    t_steps: usize,
    x0: &Vector,
    seed: u64,
    monitors: &MonitorSet,
) -> Result<Trace, RunFailure> {
    let fail = |error| RunFailure { error, partial: Trace::default() };
    let state = init(spec, problem, x0).map_err(fail)?;
    run_from(spec, problem, w, t_steps, state, seed, monitors)
}

/// Like [`run`] but from an explicit initial state.
pub fn run_from(
    spec: &AlgorithmSpec,
    problem: &dyn Problem,
    w: &MixingMatrix,
    t_steps: usize,
    mut state: OptimizerState,
    seed: u64,
    monitors: &MonitorSet,
) -> Result<Trace, RunFailure> {
    let mut trace = Trace::default();
    if t_steps == 0 {
        return Err(RunFailure {
            error: Error::InvalidInput("T must be at least 1".into()),
            partial: trace,
        });
    }
    let mut monitor = if monitors.any() {
        match MonitorState::new(spec, problem, w, &state, monitors) {
            Ok(m) => {
                trace.monitors = Some(Vec::with_capacity(t_steps));
                Some(m)
            }
            Err(error) => return Err(RunFailure { error, partial: trace }),
        }
    } else {
        None
    };
    trace.rows.reserve(t_steps);
    for _ in 0..t_steps {
        let outcome = step(&mut state, spec, w, problem, seed).and_then(|rec| {
            let row = analysis::metrics(problem, &state.x_prev, &state.m, rec.t)?;
            let mon = match monitor.as_mut() {
                Some(m) => Some(m.observe(&state, problem, w)?),
                None => None,
            };
            Ok((row, mon))
        });
        match outcome {
            Ok((row, mon)) => {
                trace.rows.push(row);
                if let (Some(list), Some(m)) = (trace.monitors.as_mut(), mon) {
                    list.push(m);
                }
            }
            Err(error) => {
                finish(&mut trace, &state, monitor.as_ref());
                return Err(RunFailure { error, partial: trace });
            }
        }
    }
    finish(&mut trace, &state, monitor.as_ref());
    Ok(trace)
}

fn finish(trace: &mut Trace, state: &OptimizerState, monitor: Option<&MonitorState>) {
    trace.grad_calls = state.grad_calls;
    trace.noise_checksum = state.noise_checksum;
    trace.final_x = Some(state.x.clone());
    if let Some(m) = monitor {
        trace.lemma5 = m.lemma5();
        trace.lemma_margins = Some(m.margins());
        trace.shadow_repr_gap = m.shadow_repr_gap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{LossScale, QuadraticProblem};
    use crate::topology::{build_complete, lazy_transform};

    pub(crate) fn hand_problem(sigma: f64) -> QuadraticProblem {
        QuadraticProblem::from_parts(
            vec![Matrix::from_element(1, 1, 1.0); 2],
            vec![Vector::from_element(1, 0.0), Vector::from_element(1, 2.0)],
            1.0,
            sigma,
            LossScale::Sum,
        )
        .unwrap()
    }

    fn hand_w() -> MixingMatrix {
        lazy_transform(&build_complete(2).unwrap()).unwrap()
    }

    #[test]
    fn edm_golden_values() {
        let p = hand_problem(0.0);
        let w = hand_w();
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 0.1, 0.5).unwrap();
        let mut s = init(&spec, &p, &Vector::zeros(1)).unwrap();
        step(&mut s, &spec, &w, &p, 0).unwrap();
        assert!((s.x[(0, 0)] - 0.025).abs() < 1e-15);
        assert!((s.x[(1, 0)] - 0.075).abs() < 1e-15);
        assert!((s.m[(1, 0)] + 1.0).abs() < 1e-15);
        step(&mut s, &spec, &w, &p, 0).unwrap();
        assert!((s.x[(0, 0)] - 0.085625).abs() < 1e-15);
        assert!((s.x[(1, 0)] - 0.159375).abs() < 1e-15);
        assert_eq!(s.grad_calls, 4);
    }

    #[test]
    fn initial_state() {
        let p = hand_problem(0.0);
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 0.1, 0.5).unwrap();
        let s = init(&spec, &p, &Vector::from_element(1, 3.0)).unwrap();
        assert_eq!(linalg::consensus_sq(&s.x), 0.0);
        assert_eq!(s.x, s.x_prev);
        assert_eq!(s.m.norm(), 0.0);
        assert!(init(&spec, &p, &Vector::zeros(2)).is_err());
    }

    #[test]
    fn bias_corrected_fixed_point() {
        let p = hand_problem(0.0);
        let w = hand_w();
        let alpha = 0.1;
        let x_star = linalg::broadcast_rows(2, p.minimizer());
        let g_star = full_gradients(&p, &x_star).unwrap();
        assert!(g_star.norm() > 0.0);

        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, alpha, 0.9).unwrap();
        let mut s = init_rows(&spec, &p, x_star.clone()).unwrap();
        s.m = g_star.clone();
        s.psi = &x_star - &g_star * alpha;
        step(&mut s, &spec, &w, &p, 0).unwrap();
        assert!((&s.x - &x_star).amax() < 1e-12);

        let spec = AlgorithmSpec::new(AlgorithmKind::Dmsgd, alpha, 0.9).unwrap();
        let mut s = init_rows(&spec, &p, x_star.clone()).unwrap();
        s.m = g_star.clone();
        step(&mut s, &spec, &w, &p, 0).unwrap();
        let moved = (&s.x - &x_star).norm();
        let predicted = (w.matrix() * &g_star * alpha).norm();
        assert!((moved - predicted).abs() < 1e-15 && moved > 0.0);
    }

    #[test]
    fn exact_versus_biased_limit() {
        let p = hand_problem(0.0);
        let w = hand_w();
        let none = MonitorSet::default();
        let edm = AlgorithmSpec::new(AlgorithmKind::Edm, 0.1, 0.5).unwrap();
        let tr = run(&edm, &p, &w, 5000, &Vector::zeros(1), 0, &none).unwrap();
        let x = tr.final_x.unwrap();
        assert!((linalg::row_mean(&x) - p.minimizer()).norm() <= 1e-8);
        assert!((0..2).all(|i| (linalg::row(&x, i) - p.minimizer()).norm() <= 1e-8));

        // Identical local Hessians keep the DmSGD average exact; the bias
        // shows up in the individual agents.
        let dm = AlgorithmSpec::new(AlgorithmKind::Dmsgd, 0.1, 0.5).unwrap();
        let tr = run(&dm, &p, &w, 5000, &Vector::zeros(1), 0, &none).unwrap();
        let x = tr.final_x.unwrap();
        assert!((linalg::row(&x, 0) - p.minimizer()).norm() > 1e-4);
    }

    #[test]
    fn single_step_trace() {
        let p = hand_problem(0.3);
        let spec = AlgorithmSpec::new(AlgorithmKind::Dsgt, 0.1, 0.0).unwrap();
        let tr = run(&spec, &p, &hand_w(), 1, &Vector::zeros(1), 9, &MonitorSet::default()).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.grad_calls, 2);
        assert_eq!(tr.rows[0].consensus_dev, 0.0);
    }

    #[test]
    fn single_agent_is_momentum_sgd() {
        let p = QuadraticProblem::from_parts(
            vec![Matrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.7, 0.1])],
            vec![Vector::from_vec(vec![1.0, -1.0])],
            1.0,
            0.4,
            LossScale::Sum,
        )
        .unwrap();
        let w = MixingMatrix::identity(1);
        let (alpha, beta, seed) = (0.05, 0.8, 17);
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, alpha, beta).unwrap();
        let mut s = init(&spec, &p, &Vector::zeros(2)).unwrap();
        let mut x = Vector::zeros(2);
        let mut m = Vector::zeros(2);
        for t in 0..100 {
            let mut rng = RngStream::new(seed, Purpose::GradientNoise, 0, t as u64);
            let g = p.stochastic_gradient(0, &x, &mut rng).unwrap();
            m = &m * beta + g * (1.0 - beta);
            x -= &m * alpha;
            step(&mut s, &spec, &w, &p, seed).unwrap();
            assert!((linalg::row(&s.x, 0) - &x).amax() <= 1e-12);
        }
    }

    #[test]
    fn noise_streams_are_shared_across_methods() {
        let p = hand_problem(0.5);
        let w = hand_w();
        let none = MonitorSet::default();
        let sums: Vec<u64> = AlgorithmKind::ALL
            .iter()
            .map(|&k| {
                let spec = AlgorithmSpec::new(k, 0.05, 0.5).unwrap();
                run(&spec, &p, &w, 20, &Vector::zeros(1), 3, &none).unwrap().noise_checksum
            })
            .collect();
        assert!(sums.iter().all(|&c| c == sums[0]));
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 0.05, 0.5).unwrap();
        let other = run(&spec, &p, &w, 20, &Vector::zeros(1), 4, &none).unwrap().noise_checksum;
        assert_ne!(other, sums[0]);
    }

    #[test]
    fn divergence_keeps_partial_trace() {
        let p = hand_problem(0.0);
        let spec = AlgorithmSpec::new(AlgorithmKind::Dsgd, 5.0, 0.0).unwrap();
        let err = run(&spec, &p, &hand_w(), 1000, &Vector::zeros(1), 0, &MonitorSet::default()).unwrap_err();
        match err.error {
            Error::Divergence { t, .. } => assert_eq!(err.partial.len(), t),
            other => panic!("unexpected error {other}"),
        }
        assert!(err.partial.len() > 5 && err.partial.len() < 1000);
    }

    #[test]
    fn step_size_limits() {
        assert_eq!(max_step_size(0.0, 0.0, 1.0, Regime::Nonconvex), 0.25);
        let v = max_step_size(0.9, 0.99, 1.0, Regime::Nonconvex);
        assert!((v - (1.0 - 0.99f64.sqrt()) / 4.0).abs() < 1e-18);
        assert!((v - 1.2533e-3).abs() < 5e-7);
        let v = max_step_size(0.0, 0.99, 1.0, Regime::Pl);
        assert!((v - 5.0125e-4).abs() < 1e-8);
        assert_eq!(max_step_size(0.0, 0.0, 2.0, Regime::Pl), 0.05);
        assert_eq!(max_step_size_pl_literal(0.0, 0.0), 0.1);
    }

    #[test]
    fn lr_drop_schedule() {
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 1.0, 0.0).unwrap().with_lr_drop(vec![20, 10]);
        assert_eq!(spec.alpha_at(9), 1.0);
        assert!((spec.alpha_at(10) - 0.1).abs() < 1e-15);
        assert!((spec.alpha_at(25) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn spec_validation_and_names() {
        assert!(AlgorithmSpec::new(AlgorithmKind::Edm, 0.0, 0.5).is_err());
        assert!(AlgorithmSpec::new(AlgorithmKind::Edm, 0.1, 1.0).is_err());
        for k in AlgorithmKind::ALL {
            assert_eq!(k.name().parse::<AlgorithmKind>().unwrap(), k);
        }
        let msg = "decentlam".parse::<AlgorithmKind>().unwrap_err().to_string();
        assert!(msg.contains("unsupported algorithm") && msg.contains("dsgt_hb"));
    }

    #[test]
    fn warnings_flag_large_steps() {
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 0.5, 0.9).unwrap();
        assert_eq!(spec.admissibility_warnings(0.5, 1.0, 0.1).len(), 2);
        let spec = AlgorithmSpec::new(AlgorithmKind::Edm, 1e-4, 0.9).unwrap();
        assert!(spec.admissibility_warnings(0.5, 1.0, 0.1).is_empty());
    }
}
