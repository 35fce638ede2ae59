//! Closed-form right-hand sides of the convergence theorems.

use crate::error::{Error, Result};

use super::MetricRow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub l_smooth: f64,
    pub mu: f64,
    pub sigma_sq: f64,
    pub zeta0_sq: f64,
    pub n: usize,
    /// Horizon `T` of the averaged nonconvex bound.
    pub t_horizon: usize,
    /// `f(x^(0)) − f*` (or an upper bound on it).
    pub f0_gap: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("L", self.l_smooth),
            ("mu", self.mu),
            ("sigma2", self.sigma_sq),
            ("zeta02", self.zeta0_sq),
            ("f0_gap", self.f0_gap),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.beta >= 1.0 || self.lambda >= 1.0 {
            return Err(Error::InvalidInput("beta and lambda must be below 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn c0(beta: f64, lambda: f64) -> f64 {
    let sl = lambda.sqrt();
    24.0 * (1.0 - beta).powi(2) / (1.0 + sl) + 12.0 * beta * beta * lambda * (1.0 - sl)
        + 2.0 * beta.powi(3) * lambda / (1.0 - beta)
}

pub fn d1(beta: f64, lambda: f64) -> f64 {
    let sl = lambda.sqrt();
    50.0 * lambda * beta * beta / (3.0 * (1.0 - beta))
        + 320.0 * (1.0 - beta).powi(2) / (3.0 * (1.0 + sl))
        + 160.0 / 3.0 * lambda * beta * beta * (1.0 - sl)
}

pub fn d2(beta: f64, lambda: f64) -> f64 {
    100.0 / 3.0
        * (5.0 * lambda * beta * beta / (3.0 * (1.0 - beta))
            + 4.0 * (1.0 - beta).powi(2)
            + 2.0 * lambda * beta * beta * (1.0 - lambda))
}

pub fn rho1(alpha: f64, mu: f64) -> f64 {
    1.0 - alpha * mu
}

pub fn rho2(beta: f64, lambda: f64) -> f64 {
    1.0 - ((1.0 - lambda.sqrt()) / 5.0).min(2.0 * (1.0 - beta) / 5.0)
}

/// Bound on `(1/T) Σ (¼‖∇f̄(X)‖² + ‖∇f(x̄)‖²)` in the nonconvex regime.
pub fn theorem1_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    if b.t_horizon == 0 || b.alpha == 0.0 {
        return Err(Error::InvalidInput("theorem 1 bound needs T >= 1 and alpha > 0".into()));
    }
    let (a, l, lam, t, n) = (b.alpha, b.l_smooth, b.lambda, b.t_horizon as f64, b.n as f64);
    let gap = 1.0 - lam.sqrt();
    Ok(2.0 * b.f0_gap / (a * t)
        + 2.0 * a * l * b.sigma_sq / n
        + 52.0 * a * a * l * l * lam * lam * b.sigma_sq / (1.0 - lam)
        + 8.0 * c0(b.beta, lam) * a * a * l * l * b.zeta0_sq / (gap * gap * t))
}

fn require_pl(b: &BoundInputs) -> Result<()> {
    b.validate()?;
    if b.mu <= 0.0 {
        return Err(Error::UnsupportedRegime("the PL bound needs mu > 0".into()));
    }
    Ok(())
}

/// Bound on `f(x̄^(t)) − f*` under the PL condition.
pub fn theorem2_bound(b: &BoundInputs, t: usize) -> Result<f64> {
    require_pl(b)?;
    let (a, l, lam, beta) = (b.alpha, b.l_smooth, b.lambda, b.beta);
    let gap = 1.0 - lam.sqrt();
    let t = t as i32;
    let first = (9.0 * b.f0_gap + d1(beta, lam) * a.powi(3) * l * l * b.zeta0_sq / (gap * gap)) * rho1(a, b.mu).powi(t);
    let second = d2(beta, lam) * a * a * l * b.zeta0_sq * rho2(beta, lam).powi(t) / (1.0 - lam);
    Ok(first + second + theorem2_floor(b)?)
}

/// Limit of [`theorem2_bound`] as `t → ∞`.
pub fn theorem2_floor(b: &BoundInputs) -> Result<f64> {
    require_pl(b)?;
    let (a, l, lam, n) = (b.alpha, b.l_smooth, b.lambda, b.n as f64);
    Ok(6.0 * a * l * b.sigma_sq / (n * b.mu) + 169.0 * a * a * l * l * lam * lam * b.sigma_sq / (b.mu * (1.0 - lam)))
}

/// Uniform-in-t bound on `E‖P_I(X − X̃)‖²_F`.
pub fn lemma3_bound(alpha: f64, lambda: f64, n: usize, sigma_sq: f64) -> f64 {
    13.0 * alpha * alpha * lambda * lambda * n as f64 * sigma_sq / (1.0 - lambda)
}

/// Empirical left-hand side of the nonconvex bound over the recorded rows.
pub fn theorem1_lhs(rows: &[MetricRow]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    rows.iter().map(|r| 0.25 * r.grad_bar_sq + r.grad_avg_sq).sum::<f64>() / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> BoundInputs {
        BoundInputs {
            alpha: 0.01,
            beta: 0.5,
            lambda: 0.8,
            l_smooth: 2.0,
            mu: 0.5,
            sigma_sq: 0.1,
            zeta0_sq: 3.0,
            n: 8,
            t_horizon: 1000,
            f0_gap: 4.0,
        }
    }

    #[test]
    fn special_cases() {
        assert_eq!(c0(0.0, 0.0), 24.0);
        assert!((c0(0.0, 0.81) - 24.0 / 1.9).abs() < 1e-14);
        assert!((d1(0.0, 0.0) - 320.0 / 3.0).abs() < 1e-13);
        assert!((d2(0.0, 0.0) - 400.0 / 3.0).abs() < 1e-13);
        assert!((rho2(0.0, 0.0) - 0.8).abs() < 1e-15);
        assert_eq!(rho1(0.1, 2.0), 0.8);
    }

    #[test]
    fn theorem1_zero_lambda_form() {
        let b = BoundInputs { beta: 0.0, lambda: 0.0, ..inputs() };
        let (a, l, t) = (b.alpha, b.l_smooth, b.t_horizon as f64);
        let want = 2.0 * b.f0_gap / (a * t) + 2.0 * a * l * b.sigma_sq / b.n as f64 + 192.0 * a * a * l * l * b.zeta0_sq / t;
        assert!((theorem1_bound(&b).unwrap() - want).abs() < 1e-15 * want);
    }

    #[test]
    fn theorem1_decays_without_noise() {
        let mut b = BoundInputs { sigma_sq: 0.0, ..inputs() };
        let short = theorem1_bound(&b).unwrap();
        b.t_horizon *= 1000;
        assert!(theorem1_bound(&b).unwrap() < short / 999.0);
    }

    #[test]
    fn monotone_in_inputs() {
        let b = inputs();
        let base = theorem1_bound(&b).unwrap();
        for bigger in [
            BoundInputs { sigma_sq: 0.2, ..b },
            BoundInputs { zeta0_sq: 6.0, ..b },
            BoundInputs { f0_gap: 8.0, ..b },
        ] {
            assert!(theorem1_bound(&bigger).unwrap() > base);
        }
        let floor = theorem2_floor(&b).unwrap();
        assert_eq!(theorem2_floor(&BoundInputs { zeta0_sq: 100.0, ..b }).unwrap(), floor);
        assert!(theorem2_floor(&BoundInputs { sigma_sq: 0.2, ..b }).unwrap() > floor);
    }

    #[test]
    fn theorem2_limits() {
        let b = inputs();
        let floor = theorem2_floor(&b).unwrap();
        assert!((theorem2_bound(&b, 200_000).unwrap() - floor).abs() < 1e-12 * floor);
        let quiet = BoundInputs { sigma_sq: 0.0, ..b };
        let rate = rho1(b.alpha, b.mu).max(rho2(b.beta, b.lambda));
        let r = theorem2_bound(&quiet, 101).unwrap() / theorem2_bound(&quiet, 100).unwrap();
        assert!(r <= rate + 1e-12);
        assert!(theorem2_bound(&BoundInputs { mu: 0.0, ..b }, 5).is_err());
    }

    #[test]
    fn lemma3_scales_with_alpha_squared() {
        let a = lemma3_bound(0.05, 0.99, 32, 0.03);
        assert!((lemma3_bound(0.1, 0.99, 32, 0.03) / a - 4.0).abs() < 1e-12);
        assert_eq!(lemma3_bound(0.05, 0.99, 32, 0.0), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(theorem1_bound(&BoundInputs { lambda: 1.0, ..inputs() }).is_err());
        assert!(theorem1_bound(&BoundInputs { sigma_sq: -1.0, ..inputs() }).is_err());
        assert!(theorem1_bound(&BoundInputs { t_horizon: 0, ..inputs() }).is_err());
    }
}
