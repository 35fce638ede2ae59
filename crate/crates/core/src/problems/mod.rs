//! Synthetic objective families with gradient oracles and ground-truth
//! constants.
//!
//! Each family stores per-agent data and exposes the deterministic gradient
//! `∇f_i(x)`, an unbiased stochastic gradient, and the constants that feed the
//! convergence bounds (`L`, `μ`, `σ²`, `ζ²`, `f*`).

mod io;
mod logistic;
mod quadratic;
pub mod reference;
mod welsch;

use std::fmt;

pub use io::{read_problem, write_problem};
pub use logistic::{gen_logistic, LogisticParams, LogisticProblem};
pub use quadratic::{gen_quadratic, LossScale, QuadraticParams, QuadraticProblem};
pub use welsch::{gen_welsch, WelschParams, WelschProblem, DEFAULT_RESPONSE_NOISE};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    Logistic,
    Welsch,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Logistic => "logistic",
            ProblemKind::Welsch => "welsch",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How `x*` (and with it `ζ²`, `f*`) was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizerSource {
    ClosedForm,
    ReferenceSolve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    /// Smoothness constant shared by every local objective.
    pub l_smooth: f64,
    /// PL / strong-convexity constant of the average objective; 0 if unknown.
    pub mu: f64,
    /// Bound on `E‖g_i − ∇f_i(x)‖²` for a single stochastic gradient.
    pub sigma_sq: f64,
    /// `(1/n) Σ ‖∇f_i(x*) − ∇f(x*)‖²`.
    pub zeta_sq: f64,
    pub f_star: Option<f64>,
    pub source: MinimizerSource,
}

pub trait Problem: Send + Sync + fmt::Debug {
    fn kind(&self) -> ProblemKind;
    fn agents(&self) -> usize;
    fn dim(&self) -> usize;

    fn local_loss(&self, agent: usize, x: &Vector) -> Result<f64>;
    fn full_gradient(&self, agent: usize, x: &Vector) -> Result<Vector>;
    /// Unbiased estimate of `∇f_i(x)` drawing its noise from `rng`.
    fn stochastic_gradient(&self, agent: usize, x: &Vector, rng: &mut RngStream) -> Result<Vector>;

    fn constants(&self) -> &ProblemConstants;
    /// Global minimizer (closed form or reference solve).
    fn minimizer(&self) -> &Vector;
    /// True when stochastic gradients equal full gradients.
    fn noise_free(&self) -> bool;
    /// Portable text dump, see [`write_problem`].
    fn to_portable(&self) -> String;

    fn objective(&self, x: &Vector) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.agents() {
            total += self.local_loss(i, x)?;
        }
        Ok(total / self.agents() as f64)
    }

    fn global_gradient(&self, x: &Vector) -> Result<Vector> {
        let mut total = Vector::zeros(self.dim());
        for i in 0..self.agents() {
            total += self.full_gradient(i, x)?;
        }
        Ok(total / self.agents() as f64)
    }

    /// `f(x) − f*` when `f*` is known.
    fn suboptimality(&self, x: &Vector) -> Result<Option<f64>> {
        match self.constants().f_star {
            Some(fs) => Ok(Some(self.objective(x)? - fs)),
            None => Ok(None),
        }
    }

    /// A value known to be `≤ f*`; defaults to `f*` itself.
    fn objective_lower_bound(&self) -> Option<f64> {
        self.constants().f_star
    }
}

pub(crate) fn check_args(n: usize, d: usize, agent: usize, x: &Vector) -> Result<()> {
    if agent >= n {
        return Err(Error::InvalidInput(format!("agent {agent} out of range 0..{n}")));
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    Ok(())
}

/// `ζ² = (1/n) Σ ‖∇f_i(x*) − ∇f(x*)‖²` at the problem's minimizer.
pub fn heterogeneity(problem: &dyn Problem) -> Result<f64> {
    heterogeneity_at(problem, problem.minimizer())
}

pub(crate) fn heterogeneity_at(problem: &dyn Problem, x: &Vector) -> Result<f64> {
    let n = problem.agents();
    let grads = (0..n).map(|i| problem.full_gradient(i, x)).collect::<Result<Vec<_>>>()?;
    let mean = grads.iter().fold(Vector::zeros(problem.dim()), |acc, g| acc + g) / n as f64;
    Ok(grads.iter().map(|g| (g - &mean).norm_squared()).sum::<f64>() / n as f64)
}

pub fn constants(problem: &dyn Problem) -> ProblemConstants {
    problem.constants().clone()
}
