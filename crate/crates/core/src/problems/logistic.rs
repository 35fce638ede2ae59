use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::{Purpose, RngStream};

use super::reference;
use super::{check_args, MinimizerSource, Problem, ProblemConstants, ProblemKind};

pub(crate) const REFERENCE_TOL: f64 = 1e-10;
pub(crate) const REFERENCE_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Spread of the local generating parameters around `𝟙`.
    pub sigma_h: f64,
    /// ℓ2 penalty, also the strong-convexity constant.
    pub mu_reg: f64,
    /// Standard deviation of the additive gradient noise.
    pub sigma_s: f64,
}

/// ℓ2-regularized logistic regression with additive Gaussian gradient noise.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    params: LogisticParams,
    u: Vec<Matrix>,
    v: Vec<Vector>,
    x_star: Vector,
    reference_grad_norm: f64,
    constants: ProblemConstants,
}

pub fn gen_logistic(
    n: usize,
    d: usize,
    m: usize,
    sigma_h: f64,
    mu_reg: f64,
    sigma_s: f64,
    seed: u64,
) -> Result<LogisticProblem> {
    LogisticProblem::generate(&LogisticParams { n, d, m, sigma_h, mu_reg, sigma_s }, seed)
}

impl LogisticProblem {
    /// Local parameters `xᵢ = 𝟙 + εᵢ`; covariates standard normal; labels
    /// `+1` when a uniform draw falls under the logistic link, else `−1`.
    pub fn generate(params: &LogisticParams, seed: u64) -> Result<Self> {
        let centers: Vec<Vector> = (0..params.n)
            .map(|i| {
                let mut r = RngStream::new(seed, Purpose::LocalCenter, i as u64, 0);
                Vector::from_fn(params.d, |_, _| 1.0 + params.sigma_h * r.normal())
            })
            .collect();
        Self::generate_around(params, &centers, seed)
    }

    pub(crate) fn generate_around(params: &LogisticParams, centers: &[Vector], seed: u64) -> Result<Self> {
        if params.n == 0 || params.d == 0 || params.m == 0 {
            return Err(Error::InvalidInput("logistic problem needs n, d, m >= 1".into()));
        }
        let mut u = Vec::with_capacity(params.n);
        let mut v = Vec::with_capacity(params.n);
        for (i, center) in centers.iter().enumerate() {
            let mut cov = RngStream::new(seed, Purpose::DesignMatrix, i as u64, 0);
            let mut labels = RngStream::new(seed, Purpose::Labels, i as u64, 0);
            let ui = Matrix::from_fn(params.m, params.d, |_, _| cov.normal());
            let vi = Vector::from_iterator(
                params.m,
                ui.row_iter().map(|row| {
                    let z = labels.uniform();
                    let link = 1.0 / (1.0 + (-row.transpose().dot(center)).exp());
                    if z <= link {
                        1.0
                    } else {
                        -1.0
                    }
                }),
            );
            u.push(ui);
            v.push(vi);
        }
        Self::from_data(u, v, params.sigma_h, params.mu_reg, params.sigma_s)
    }

    /// Builds the problem from covariates `Uᵢ` (`m × d`) and labels `Vᵢ`, and
    /// runs the reference solve for `x*`.
    pub fn from_data(u: Vec<Matrix>, v: Vec<Vector>, sigma_h: f64, mu_reg: f64, sigma_s: f64) -> Result<Self> {
        let n = u.len();
        if n == 0 || v.len() != n {
            return Err(Error::InvalidInput("need one covariate block and one label vector per agent".into()));
        }
        let (m, d) = u[0].shape();
        if m == 0 || u.iter().any(|b| b.shape() != (m, d)) || v.iter().any(|l| l.len() != m) {
            return Err(Error::InvalidInput("inconsistent logistic data shapes".into()));
        }
        if v.iter().flat_map(|l| l.iter()).any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidInput("labels must be +1 or -1".into()));
        }
        if !(mu_reg > 0.0) {
            return Err(Error::InvalidInput(format!("mu_reg must be positive, got {mu_reg}")));
        }
        if !(sigma_s >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma_s must be nonnegative, got {sigma_s}")));
        }
        let max_op = u.iter().map(linalg::op_norm_sq).fold(0.0, f64::max);
        let mut problem = Self {
            params: LogisticParams { n, d, m, sigma_h, mu_reg, sigma_s },
            u,
            v,
            x_star: Vector::zeros(d),
            reference_grad_norm: f64::NAN,
            constants: ProblemConstants {
                l_smooth: mu_reg + max_op / (4.0 * m as f64),
                mu: mu_reg,
                sigma_sq: d as f64 * sigma_s * sigma_s,
                zeta_sq: 0.0,
                f_star: None,
                source: MinimizerSource::ReferenceSolve,
            },
        };
        let sol = reference::minimize(&problem, &Vector::zeros(d), REFERENCE_TOL, REFERENCE_MAX_ITER)?;
        problem.x_star = sol.x;
        problem.reference_grad_norm = sol.grad_norm;
        problem.constants.f_star = Some(sol.value);
        problem.constants.zeta_sq = super::heterogeneity(&problem)?;
        Ok(problem)
    }

    pub fn params(&self) -> &LogisticParams {
        &self.params
    }

    pub fn covariates(&self, agent: usize) -> &Matrix {
        &self.u[agent]
    }

    pub fn labels(&self, agent: usize) -> &Vector {
        &self.v[agent]
    }

    pub fn reference_grad_norm(&self) -> f64 {
        self.reference_grad_norm
    }
}

/// `log(1 + e^{−z})` without overflow.
fn softplus_neg(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

impl Problem for LogisticProblem {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Logistic
    }

    fn agents(&self) -> usize {
        self.params.n
    }

    fn dim(&self) -> usize {
        self.params.d
    }

    fn local_loss(&self, agent: usize, x: &Vector) -> Result<f64> {
        check_args(self.params.n, self.params.d, agent, x)?;
        let margins = &self.u[agent] * x;
        let data: f64 = margins
            .iter()
            .zip(self.v[agent].iter())
            .map(|(z, y)| softplus_neg(y * z))
            .sum();
        Ok(data / self.params.m as f64 + 0.5 * self.params.mu_reg * x.norm_squared())
    }

    fn full_gradient(&self, agent: usize, x: &Vector) -> Result<Vector> {
        check_args(self.params.n, self.params.d, agent, x)?;
        let margins = &self.u[agent] * x;
        let weights = Vector::from_iterator(
            self.params.m,
            margins
                .iter()
                .zip(self.v[agent].iter())
                .map(|(z, y)| -y / (1.0 + (y * z).exp())),
        );
        Ok(self.u[agent].transpose() * weights / self.params.m as f64 + x * self.params.mu_reg)
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

    fn minimizer(&self) -> &Vector {
        &self.x_star
    }

    fn noise_free(&self) -> bool {
        self.params.sigma_s == 0.0
    }

    fn to_portable(&self) -> String {
        super::io::write_logistic(self)
    }
}
