//! Centralized reference minimizer used for metrics (`x*`, `f*`, `ζ²`) on
//! problems without a closed form. Not used by the algorithms under test.

use crate::error::{Error, Result};
use crate::linalg::Vector;

use super::Problem;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: Vector,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Full-gradient descent with Armijo backtracking on the average objective.
///
/// Trial steps start from twice the previous accepted step and halve until the
/// sufficient-decrease test holds, but never drop below `1/L`, which is a
/// descent step for any `L`-smooth objective. That floor keeps the solver
/// moving once objective differences fall under floating-point resolution.
pub fn minimize(problem: &dyn Problem, x0: &Vector, tol: f64, max_iter: usize) -> Result<ReferenceSolution> {
    let min_step = 1.0 / problem.constants().l_smooth;
    let mut x = x0.clone();
    let mut value = problem.objective(&x)?;
    let mut grad = problem.global_gradient(&x)?;
    let mut step = min_step;
    for iteration in 0..max_iter {
        let g2 = grad.norm_squared();
        if g2.sqrt() <= tol {
            return Ok(ReferenceSolution {
                x,
                value,
                grad_norm: g2.sqrt(),
                iterations: iteration,
            });
        }
        step *= 2.0;
        let (next, next_value) = loop {
            let trial = &x - &grad * step;
            let trial_value = problem.objective(&trial)?;
            if step <= min_step || trial_value <= value - 0.5 * step * g2 {
                break (trial, trial_value);
            }
            step = (step * 0.5).max(min_step);
        };
        x = next;
        value = next_value;
        grad = problem.global_gradient(&x)?;
        if !grad.iter().all(|v| v.is_finite()) {
            return Err(Error::Diagnostics {
                message: "reference solve produced non-finite gradient".into(),
                grad_norm: f64::NAN,
            });
        }
    }
    let grad_norm = grad.norm();
    if grad_norm <= tol {
        return Ok(ReferenceSolution {
            x,
            value,
            grad_norm,
            iterations: max_iter,
        });
    }
    Err(Error::Diagnostics {
        message: format!("no convergence to {tol:e} within {max_iter} iterations"),
        grad_norm,
    })
}
