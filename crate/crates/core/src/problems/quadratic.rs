use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::{Purpose, RngStream};

use super::{check_args, MinimizerSource, Problem, ProblemConstants, ProblemKind};

/// Condition number above which `Σ AᵢᵀAᵢ` counts as singular.
const MAX_CONDITION: f64 = 1e12;
const MAX_ATTEMPTS: u64 = 16;

/// Normalization of the least-squares loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossScale {
    /// `f_i(x) = ½ E‖yᵢ − Aᵢx‖²`
    #[default]
    Sum,
    /// `f_i(x) = (1/2p) E‖yᵢ − Aᵢx‖²`, the per-sample mean.
    Mean,
}

impl LossScale {
    pub fn name(self) -> &'static str {
        match self {
            LossScale::Sum => "sum",
            LossScale::Mean => "mean",
        }
    }

    fn factor(self, p: usize) -> f64 {
        match self {
            LossScale::Sum => 1.0,
            LossScale::Mean => 1.0 / p as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticParams {
    pub n: usize,
    pub d: usize,
    pub p: usize,
    /// Heterogeneity divisor: local minimizers sit at `x* + (uᵢ − x*)/c`.
    pub c: f64,
    /// Standard deviation of the response noise `ε`.
    pub sigma: f64,
    pub scale: LossScale,
}

/// Linear regression with fresh Gaussian responses on every query.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    params: QuadraticParams,
    a: Vec<Matrix>,
    u: Vec<Vector>,
    hess: Vec<Matrix>,
    hess_mean: Matrix,
    x_star: Vector,
    local_star: Vec<Vector>,
    constants: ProblemConstants,
    attempts: u64,
}

/// Generator with the unnormalized (sum) loss.
pub fn gen_quadratic(n: usize, d: usize, p: usize, c: f64, sigma: f64, seed: u64) -> Result<QuadraticProblem> {
    QuadraticProblem::generate(
        &QuadraticParams {
            n,
            d,
            p,
            c,
            sigma,
            scale: LossScale::Sum,
        },
        seed,
    )
}

impl QuadraticProblem {
    /// Draws `Aᵢ` and `uᵢ` from standard normals. If `Σ AᵢᵀAᵢ` is numerically
    /// singular the draw is repeated on the next substream; the number of
    /// draws is reported by [`attempts`](Self::attempts).
    pub fn generate(params: &QuadraticParams, seed: u64) -> Result<Self> {
        let QuadraticParams { n, d, p, .. } = *params;
        if n == 0 || d == 0 || p == 0 {
            return Err(Error::InvalidInput("quadratic problem needs n, d, p >= 1".into()));
        }
        if p < d {
            return Err(Error::InvalidInput(format!("quadratic problem needs p >= d, got p={p}, d={d}")));
        }
        for attempt in 0..MAX_ATTEMPTS {
            let a: Vec<Matrix> = (0..n)
                .map(|i| {
                    let mut r = RngStream::new(seed, Purpose::DesignMatrix, i as u64, attempt);
                    Matrix::from_fn(p, d, |_, _| r.normal())
                })
                .collect();
            let u: Vec<Vector> = (0..n)
                .map(|i| {
                    let mut r = RngStream::new(seed, Purpose::LocalCenter, i as u64, attempt);
                    Vector::from_fn(d, |_, _| r.normal())
                })
                .collect();
            match Self::from_parts(a, u, params.c, params.sigma, params.scale) {
                Ok(mut problem) => {
                    problem.attempts = attempt + 1;
                    return Ok(problem);
                }
                Err(Error::InvalidInput(msg)) if msg.contains("singular") => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::InvalidInput(format!(
            "could not draw a well-conditioned design in {MAX_ATTEMPTS} attempts"
        )))
    }

    /// Builds a problem from explicit design matrices (`p × d` each) and
    /// centers `uᵢ`.
    pub fn from_parts(a: Vec<Matrix>, u: Vec<Vector>, c: f64, sigma: f64, scale: LossScale) -> Result<Self> {
        let n = a.len();
        if n == 0 || u.len() != n {
            return Err(Error::InvalidInput("need one design matrix and one center per agent".into()));
        }
        let (p, d) = a[0].shape();
        if a.iter().any(|m| m.shape() != (p, d)) || u.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput("inconsistent design shapes".into()));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!("heterogeneity divisor must be positive, got {c}")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidInput(format!("noise level must be nonnegative, got {sigma}")));
        }
        let s = scale.factor(p);
        let hess: Vec<Matrix> = a.iter().map(|m| m.transpose() * m * s).collect();
        let hess_sum = hess.iter().fold(Matrix::zeros(d, d), |acc, h| acc + h);
        let sum_eigs = linalg::symmetric_eigenvalues(&hess_sum);
        let (lo, hi) = (sum_eigs[0], sum_eigs[d - 1]);
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Err(Error::InvalidInput(format!("singular design: condition number {:e}", hi / lo)));
        }
        let rhs = hess.iter().zip(&u).fold(Vector::zeros(d), |acc, (h, ui)| acc + h * ui);
        let x_star = hess_sum
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("singular design: Cholesky failed".into()))?
            .solve(&rhs);
        let local_star: Vec<Vector> = u.iter().map(|ui| &x_star + (ui - &x_star) / c).collect();
        let hess_mean = hess_sum / n as f64;

        let l_smooth = hess
            .iter()
            .map(|h| *linalg::symmetric_eigenvalues(h).last().unwrap())
            .fold(0.0, f64::max);
        let mu = linalg::symmetric_eigenvalues(&hess_mean)[0];
        let max_trace = a.iter().map(|m| m.norm_squared()).fold(0.0, f64::max);
        let sigma_sq = sigma * sigma * s * s * max_trace;

        let mut problem = Self {
            params: QuadraticParams { n, d, p, c, sigma, scale },
            a,
            u,
            hess,
            hess_mean,
            x_star,
            local_star,
            constants: ProblemConstants {
                l_smooth,
                mu,
                sigma_sq,
                zeta_sq: 0.0,
                f_star: None,
                source: MinimizerSource::ClosedForm,
            },
            attempts: 1,
        };
        problem.constants.zeta_sq = super::heterogeneity(&problem)?;
        problem.constants.f_star = Some(problem.objective(&problem.x_star)?);
        Ok(problem)
    }

    pub fn params(&self) -> &QuadraticParams {
        &self.params
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn design(&self, agent: usize) -> &Matrix {
        &self.a[agent]
    }

    pub fn centers(&self) -> &[Vector] {
        &self.u
    }

    pub fn local_minimizer(&self, agent: usize) -> &Vector {
        &self.local_star[agent]
    }

    pub fn hessian(&self, agent: usize) -> &Matrix {
        &self.hess[agent]
    }

    /// Same design and centers with a different heterogeneity divisor.
    pub fn with_divisor(&self, c: f64) -> Result<Self> {
        Self::from_parts(self.a.clone(), self.u.clone(), c, self.params.sigma, self.params.scale)
    }
}

impl Problem for QuadraticProblem {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Quadratic
    }

    fn agents(&self) -> usize {
        self.params.n
    }

    fn dim(&self) -> usize {
        self.params.d
    }

    fn local_loss(&self, agent: usize, x: &Vector) -> Result<f64> {
        check_args(self.params.n, self.params.d, agent, x)?;
        let r = &self.a[agent] * (x - &self.local_star[agent]);
        Ok(0.5 * self.params.scale.factor(self.params.p) * r.norm_squared())
    }

    fn full_gradient(&self, agent: usize, x: &Vector) -> Result<Vector> {
        check_args(self.params.n, self.params.d, agent, x)?;
        Ok(&self.hess[agent] * (x - &self.local_star[agent]))
    }

    fn stochastic_gradient(&self, agent: usize, x: &Vector, rng: &mut RngStream) -> Result<Vector> {
        let mut g = self.full_gradient(agent, x)?;
        if self.params.sigma > 0.0 {
            let mut eps = Vector::zeros(self.params.p);
            rng.fill_normal(eps.as_mut_slice(), self.params.sigma);
            let s = self.params.scale.factor(self.params.p);
            g -= self.a[agent].transpose() * eps * s;
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
        self.params.sigma == 0.0
    }

    /// Exact quadratic form `½ (x − x*)ᵀ H̄ (x − x*)`, free of the
    /// cancellation in `f(x) − f*`.
    fn suboptimality(&self, x: &Vector) -> Result<Option<f64>> {
        check_args(self.params.n, self.params.d, 0, x)?;
        let e = x - &self.x_star;
        Ok(Some(0.5 * e.dot(&(&self.hess_mean * &e))))
    }

    fn to_portable(&self) -> String {
        super::io::write_quadratic(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::heterogeneity;

    fn hand_example(c: f64) -> QuadraticProblem {
        let a = vec![Matrix::from_element(1, 1, 1.0), Matrix::from_element(1, 1, 1.0)];
        let u = vec![Vector::from_element(1, 0.0), Vector::from_element(1, 2.0)];
        QuadraticProblem::from_parts(a, u, c, 0.0, LossScale::Sum).unwrap()
    }

    #[test]
    fn hand_example_values() {
        let q = hand_example(1.0);
        assert!((q.minimizer()[0] - 1.0).abs() < 1e-15);
        assert_eq!(q.local_minimizer(0)[0], 0.0);
        assert_eq!(q.local_minimizer(1)[0], 2.0);
        assert!((heterogeneity(&q).unwrap() - 1.0).abs() < 1e-15);
        let k = q.constants();
        assert_eq!(k.l_smooth, 1.0);
        assert_eq!(k.mu, 1.0);
        // ½((1−0)² + (1−2)²) averaged over two agents
        assert!((k.f_star.unwrap() - 0.5).abs() < 1e-15);
        let g = q.full_gradient(0, &Vector::from_element(1, 1.0)).unwrap();
        assert_eq!(g[0], 1.0);
    }

    #[test]
    fn gradient_vanishes_at_local_minimizer() {
        let q = QuadraticProblem::generate(
            &QuadraticParams { n: 4, d: 3, p: 6, c: 1.0, sigma: 0.3, scale: LossScale::Sum },
            5,
        )
        .unwrap();
        for i in 0..4 {
            let g = q.full_gradient(i, q.local_minimizer(i)).unwrap();
            assert!(g.norm() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_stochastic_equals_full() {
        let q = gen_quadratic(3, 2, 4, 1.0, 0.0, 9).unwrap();
        let x = Vector::from_vec(vec![0.3, -0.7]);
        let mut rng = RngStream::new(1, Purpose::GradientNoise, 0, 0);
        for i in 0..3 {
            assert_eq!(q.stochastic_gradient(i, &x, &mut rng).unwrap(), q.full_gradient(i, &x).unwrap());
        }
    }

    #[test]
    fn homogeneous_limit() {
        let q = gen_quadratic(5, 3, 6, 1e18, 0.1, 2).unwrap();
        for i in 0..5 {
            assert!((q.local_minimizer(i) - q.minimizer()).norm() < 1e-15);
        }
        assert!(q.constants().zeta_sq <= 1e-18);
    }

    #[test]
    fn identity_design_constants() {
        let a = vec![Matrix::identity(3, 3)];
        let u = vec![Vector::from_vec(vec![1.0, 2.0, 3.0])];
        let q = QuadraticProblem::from_parts(a, u, 1.0, 0.0, LossScale::Sum).unwrap();
        assert!((q.constants().l_smooth - 1.0).abs() < 1e-15);
        assert!((q.constants().mu - 1.0).abs() < 1e-15);
    }

    #[test]
    fn optimality_of_closed_form_minimizer() {
        let q = gen_quadratic(32, 10, 20, 1.0, 0.2, 11).unwrap();
        let mut sum = Vector::zeros(10);
        let mut op = 0.0;
        for i in 0..32 {
            sum += q.full_gradient(i, q.minimizer()).unwrap();
            op += *linalg::symmetric_eigenvalues(q.hessian(i)).last().unwrap();
        }
        assert!(sum.norm() <= 1e-9 * op);
    }

    #[test]
    fn heterogeneity_scales_inverse_square() {
        let base = gen_quadratic(8, 4, 8, 1.0, 0.1, 3).unwrap();
        let z1 = base.constants().zeta_sq;
        for c in [1.0, 2.0, 4.0, 8.0] {
            let q = gen_quadratic(8, 4, 8, c, 0.1, 3).unwrap();
            assert!((q.constants().zeta_sq * c * c - z1).abs() <= 1e-9 * z1);
        }
        let halved = base.with_divisor(2.0).unwrap();
        assert!((halved.constants().zeta_sq - z1 / 4.0).abs() <= 1e-9 * z1);
    }

    #[test]
    fn pl_and_smoothness_inequalities() {
        let q = gen_quadratic(6, 4, 8, 1.0, 0.0, 21).unwrap();
        let k = q.constants().clone();
        let mut r = RngStream::new(99, Purpose::InitialPoint, 0, 0);
        for _ in 0..100 {
            let x = Vector::from_fn(4, |_, _| 3.0 * r.normal());
            let gap = q.objective(&x).unwrap() - k.f_star.unwrap();
            let g2 = q.global_gradient(&x).unwrap().norm_squared();
            assert!(2.0 * k.mu * gap <= g2 * (1.0 + 1e-9));
            assert!(g2 <= 2.0 * k.l_smooth * gap * (1.0 + 1e-9));
            let exact = q.suboptimality(&x).unwrap().unwrap();
            assert!((exact - gap).abs() <= 1e-9 * (1.0 + gap));
        }
    }

    #[test]
    fn mean_scale_divides_by_p() {
        let params = QuadraticParams { n: 3, d: 2, p: 5, c: 1.0, sigma: 0.2, scale: LossScale::Sum };
        let sum = QuadraticProblem::generate(&params, 4).unwrap();
        let mean = QuadraticProblem::generate(&QuadraticParams { scale: LossScale::Mean, ..params }, 4).unwrap();
        assert!((sum.minimizer() - mean.minimizer()).amax() < 1e-12);
        assert!((sum.constants().l_smooth / 5.0 - mean.constants().l_smooth).abs() < 1e-12);
        assert!((sum.constants().sigma_sq / 25.0 - mean.constants().sigma_sq).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let q = gen_quadratic(2, 2, 3, 1.0, 0.0, 0).unwrap();
        assert!(matches!(
            q.full_gradient(0, &Vector::zeros(3)),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
        assert!(q.full_gradient(2, &Vector::zeros(2)).is_err());
        assert!(gen_quadratic(2, 3, 2, 1.0, 0.0, 0).is_err());
        assert!(gen_quadratic(2, 2, 3, 0.0, 0.0, 0).is_err());
    }
}
