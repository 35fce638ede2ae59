//! Metrics, shadow sequences, lemma monitors and closed-form bounds.

mod bounds;
mod monitors;
mod rate;
mod shadow;

pub use bounds::{
    c0, d1, d2, lemma3_bound, rho1, rho2, theorem1_bound, theorem1_lhs, theorem2_bound, theorem2_floor, BoundInputs,
};
pub use monitors::{lemma3_estimate, Lemma3Estimate, LemmaMargins, MonitorSet, MonitorState};
pub use rate::{default_window, empirical_rate, fit_rate, RateFit};
pub use shadow::{NVariant, ShadowState};

use crate::algorithms::full_gradients;
use crate::error::Result;
use crate::linalg::{self, Matrix, Vector};
use crate::problems::Problem;
use crate::topology::MixingMatrix;

/// Per-iteration observables. `subopt` and `dist_sq` are NaN when `f*` or
/// `x*` is not known for the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub t: usize,
    /// `‖P_I X‖²_F / n`
    pub consensus_dev: f64,
    /// `‖∇f(x̄)‖²`
    pub grad_avg_sq: f64,
    /// `‖(1/n) Σ ∇f_i(x_i)‖²`
    pub grad_bar_sq: f64,
    pub subopt: f64,
    pub dist_sq: f64,
    pub m_bar_sq: f64,
}

impl MetricRow {
    /// Float fields in CSV order.
    pub fn values(&self) -> [f64; 6] {
        [
            self.consensus_dev,
            self.grad_avg_sq,
            self.grad_bar_sq,
            self.subopt,
            self.dist_sq,
            self.m_bar_sq,
        ]
    }
}

/// Metrics of the iterate `x` with direction `m` at iteration `t`.
pub fn metrics(problem: &dyn Problem, x: &Matrix, m: &Matrix, t: usize) -> Result<MetricRow> {
    let n = x.nrows() as f64;
    let x_bar = linalg::row_mean(x);
    let grad_bar = linalg::row_mean(&full_gradients(problem, x)?);
    let subopt = problem.suboptimality(&x_bar)?.unwrap_or(f64::NAN);
    let dist_sq = if problem.constants().f_star.is_some() {
        (&x_bar - problem.minimizer()).norm_squared()
    } else {
        f64::NAN
    };
    Ok(MetricRow {
        t,
        consensus_dev: linalg::consensus_sq(x) / n,
        grad_avg_sq: problem.global_gradient(&x_bar)?.norm_squared(),
        grad_bar_sq: grad_bar.norm_squared(),
        subopt,
        dist_sq,
        m_bar_sq: linalg::row_mean(m).norm_squared(),
    })
}

/// Momentum auxiliary point `z = (x̄^(t) − β x̄^(t−1)) / (1 − β)`.
pub fn aux_z(x_bar_t: &Vector, x_bar_prev: &Vector, beta: f64) -> Vector {
    (x_bar_t - x_bar_prev * beta) / (1.0 - beta)
}

/// Initial heterogeneity `(1/n) ‖W P_I ∇f(X0)‖²_F`.
pub fn zeta0_sq(w: &MixingMatrix, problem: &dyn Problem, x0: &Matrix) -> Result<f64> {
    let g = full_gradients(problem, x0)?;
    let wpg = w.matrix() * linalg::demean_rows(&g);
    Ok(wpg.norm_squared() / x0.nrows() as f64)
}
