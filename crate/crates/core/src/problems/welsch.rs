use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::{Purpose, RngStream};

use super::logistic::{REFERENCE_MAX_ITER, REFERENCE_TOL};
use super::reference;
use super::{check_args, MinimizerSource, Problem, ProblemConstants, ProblemKind};

#[derive(Debug, Clone, PartialEq)]
pub struct WelschParams {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub sigma_h: f64,
    /// Standard deviation of the additive gradient noise.
    pub sigma_s: f64,
    /// Standard deviation of the response noise used when drawing `vᵢⱼ`.
    pub response_noise: f64,
}

pub const DEFAULT_RESPONSE_NOISE: f64 = 0.1;

/// Robust regression with the Welsch loss `1 − exp(−r²/2)`. Smooth,
/// nonconvex and bounded below by zero.
#[derive(Debug, Clone)]
pub struct WelschProblem {
    params: WelschParams,
    u: Vec<Matrix>,
    v: Vec<Vector>,
    x_ref: Vector,
    reference_grad_norm: f64,
    constants: ProblemConstants,
}

pub fn gen_welsch(n: usize, d: usize, m: usize, sigma_h: f64, sigma_s: f64, seed: u64) -> Result<WelschProblem> {
    WelschProblem::generate(
        &WelschParams {
            n,
            d,
            m,
            sigma_h,
            sigma_s,
            response_noise: DEFAULT_RESPONSE_NOISE,
        },
        seed,
    )
}

impl WelschProblem {
    /// Local parameters `xᵢ = 𝟙 + εᵢ`, covariates standard normal, responses
    /// `vᵢⱼ = uᵢⱼᵀxᵢ + noise`.
    pub fn generate(params: &WelschParams, seed: u64) -> Result<Self> {
        if params.n == 0 || params.d == 0 || params.m == 0 {
            return Err(Error::InvalidInput("welsch problem needs n, d, m >= 1".into()));
        }
        if !(params.response_noise >= 0.0) {
            return Err(Error::InvalidInput("response_noise must be nonnegative".into()));
        }
        let mut u = Vec::with_capacity(params.n);
        let mut v = Vec::with_capacity(params.n);
        for i in 0..params.n as u64 {
            let mut cr = RngStream::new(seed, Purpose::LocalCenter, i, 0);
            let center = Vector::from_fn(params.d, |_, _| 1.0 + params.sigma_h * cr.normal());
            let mut ur = RngStream::new(seed, Purpose::DesignMatrix, i, 0);
            let ui = Matrix::from_fn(params.m, params.d, |_, _| ur.normal());
            let mut nr = RngStream::new(seed, Purpose::ResponseNoise, i, 0);
            let vi = &ui * &center + Vector::from_fn(params.m, |_, _| params.response_noise * nr.normal());
            u.push(ui);
            v.push(vi);
        }
        Self::from_data(u, v, params.sigma_h, params.sigma_s, params.response_noise)
    }

    pub fn from_data(u: Vec<Matrix>, v: Vec<Vector>, sigma_h: f64, sigma_s: f64, response_noise: f64) -> Result<Self> {
        let n = u.len();
        if n == 0 || v.len() != n {
            return Err(Error::InvalidInput("need one covariate block and one response vector per agent".into()));
        }
        let (m, d) = u[0].shape();
        if m == 0 || u.iter().any(|b| b.shape() != (m, d)) || v.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("inconsistent welsch data shapes".into()));
        }
        if !(sigma_s >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma_s must be nonnegative, got {sigma_s}")));
        }
        let max_op = u.iter().map(linalg::op_norm_sq).fold(0.0, f64::max);
        let mut problem = Self {
            params: WelschParams { n, d, m, sigma_h, sigma_s, response_noise },
            u,
            v,
            x_ref: Vector::zeros(d),
            reference_grad_norm: f64::NAN,
            constants: ProblemConstants {
                l_smooth: max_op / m as f64,
                mu: 0.0,
                sigma_sq: d as f64 * sigma_s * sigma_s,
                zeta_sq: 0.0,
                f_star: None,
                source: MinimizerSource::ReferenceSolve,
            },
        };
        let sol = reference::minimize(&problem, &Vector::from_element(d, 1.0), REFERENCE_TOL, REFERENCE_MAX_ITER)?;
        problem.x_ref = sol.x;
        problem.reference_grad_norm = sol.grad_norm;
        problem.constants.zeta_sq = super::heterogeneity(&problem)?;
        Ok(problem)
    }

    pub fn params(&self) -> &WelschParams {
        &self.params
    }

    pub fn covariates(&self, agent: usize) -> &Matrix {
        &self.u[agent]
    }

    pub fn responses(&self, agent: usize) -> &Vector {
        &self.v[agent]
    }

    pub fn reference_grad_norm(&self) -> f64 {
        self.reference_grad_norm
    }

    fn residuals(&self, agent: usize, x: &Vector) -> Vector {
        &self.v[agent] - &self.u[agent] * x
    }
}

impl Problem for WelschProblem {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Welsch
    }

    fn agents(&self) -> usize {
        self.params.n
    }

    fn dim(&self) -> usize {
        self.params.d
    }

    fn local_loss(&self, agent: usize, x: &Vector) -> Result<f64> {
        check_args(self.params.n, self.params.d, agent, x)?;
        let r = self.residuals(agent, x);
        Ok(r.iter().map(|ri| -(-0.5 * ri * ri).exp_m1()).sum::<f64>() / self.params.m as f64)
    }

    fn full_gradient(&self, agent: usize, x: &Vector) -> Result<Vector> {
        check_args(self.params.n, self.params.d, agent, x)?;
        let w = self.residuals(agent, x).map(|ri| ri * (-0.5 * ri * ri).exp());
        Ok(-(self.u[agent].transpose() * w) / self.params.m as f64)
    }

    fn stochastic_gradient(&self, agent: usize, x: &Vector, rng: &mut RngStream) -> Result<Vector> {
        let mut g = self.full_gradient(agent, x)?;
        if self.params.sigma_s > 0.0 {
            for gj in g.iter_mut() {
                *gj += self.params.sigma_s * rng.normal();
            }
        }
        Ok(g)
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    /// Stationary point found by the reference solve from `𝟙`; the objective
    /// is nonconvex so this is not certified global.
    fn minimizer(&self) -> &Vector {
        &self.x_ref
    }

    fn noise_free(&self) -> bool {
        self.params.sigma_s == 0.0
    }

    fn to_portable(&self) -> String {
        super::io::write_welsch(self)
    }

    fn objective_lower_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}
