//! Shadow sequence driven by deterministic gradients of the real iterates.
//!
//! Two representations are advanced side by side: the two-step recursion
//! `X̃⁺ = W(2X̃ − X̃⁻ − αM̃ + αM̃⁻)` and the one-step primal-dual form
//! `X̃⁺ = W(X̃ − αM̃) − SỸ`, `Ỹ⁺ = Ỹ + SX̃⁺` with `S = (I − W)^{1/2}`.

use std::str::FromStr;

use crate::algorithms::full_gradients;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::problems::Problem;
use crate::topology::MixingMatrix;

/// Which reference momentum `Ñ` the split `R̃ = M̃ − Ñ` is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NVariant {
    /// `Ñ^(t) = βÑ^(t−1) + (1−β)∇f(X̄^(t))` with `Ñ^(−1) = ∇f(X̄^(0))`.
    #[default]
    Nonconvex,
    /// `Ñ^(t) = ∇f(X̄^(t))`.
    Pl,
}

impl NVariant {
    pub fn name(self) -> &'static str {
        match self {
            NVariant::Nonconvex => "nonconvex",
            NVariant::Pl => "pl",
        }
    }
}

impl FromStr for NVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nonconvex" => Ok(NVariant::Nonconvex),
            "pl" => Ok(NVariant::Pl),
            other => Err(Error::Config(format!("unknown shadow variant {other:?}; expected nonconvex or pl"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShadowState {
    pub t: usize,
    /// Two-step representation `X̃^(t)`.
    pub xt: Matrix,
    pub xt_prev: Matrix,
    /// One-step representation `X̃^(t)`.
    pub xt_one: Matrix,
    pub yt: Matrix,
    /// `M̃^(t−1)`
    pub mt: Matrix,
    /// `Ñ^(t−1)`
    pub nt: Matrix,
    /// `R̃^(t−1)`
    pub rt: Matrix,
    pub variant: NVariant,
    alpha_prev: f64,
    s: Matrix,
    /// Largest `‖X̃_two − X̃_one‖_F / (1 + ‖X̃_two‖_F)` seen so far.
    pub repr_gap: f64,
}

impl ShadowState {
    /// Shadow started at the real initial iterate with `Ỹ^(0) = 0`.
    pub fn new(w: &MixingMatrix, x0: &Matrix, variant: NVariant) -> Result<Self> {
        if w.agents() != x0.nrows() {
            return Err(Error::DimensionMismatch { expected: x0.nrows(), got: w.agents() });
        }
        let zeros = Matrix::zeros(x0.nrows(), x0.ncols());
        Ok(Self {
            t: 0,
            xt: x0.clone(),
            xt_prev: x0.clone(),
            xt_one: x0.clone(),
            yt: zeros.clone(),
            mt: zeros.clone(),
            nt: zeros.clone(),
            rt: zeros,
            variant,
            alpha_prev: 0.0,
            s: w.sqrt_laplacian(),
            repr_gap: 0.0,
        })
    }

    /// `‖P_I(X − X̃)‖²_F` against the two-step representation.
    pub fn gap(&self, x: &Matrix) -> f64 {
        linalg::consensus_sq(&(x - &self.xt))
    }

    /// Advances from `X̃^(t)` to `X̃^(t+1)` using the real iterate `X^(t)`.
    pub fn step(
        &mut self,
        x_real: &Matrix,
        w: &MixingMatrix,
        problem: &dyn Problem,
        alpha: f64,
        beta: f64,
    ) -> Result<()> {
        let wm = w.matrix();
        let grad = full_gradients(problem, x_real)?;
        let m = &self.mt * beta + &grad * (1.0 - beta);

        let two = wm * (&self.xt * 2.0 - &self.xt_prev - &m * alpha + &self.mt * self.alpha_prev);
        let one = wm * (&self.xt_one - &m * alpha) - &self.s * &self.yt;
        self.yt += &self.s * &one;

        let x_bar = linalg::row_mean(x_real);
        let g_bar = full_gradients(problem, &linalg::broadcast_rows(x_real.nrows(), &x_bar))?;
        let nt = match self.variant {
            NVariant::Pl => g_bar,
            NVariant::Nonconvex => {
                let prev = if self.t == 0 { &g_bar } else { &self.nt };
                prev * beta + &g_bar * (1.0 - beta)
            }
        };
        self.rt = &m - &nt;
        self.nt = nt;

        let rel = (&two - &one).norm() / (1.0 + two.norm());
        self.repr_gap = self.repr_gap.max(rel);
        self.xt_prev = std::mem::replace(&mut self.xt, two);
        self.xt_one = one;
        self.mt = m;
        self.alpha_prev = alpha;
        self.t += 1;
        Ok(())
    }
}
