//! Damped Newton maximization with exact Hessians.

use crate::autodiff::{grad_hess, SecondOrder};
use crate::error::{Error, Result};
use crate::kalman::kalman_loglik;
use crate::linalg::{self, Matrix};
use crate::models::{whittle_loglik, SpectralModel};
use crate::spectral::Periodogram;
use crate::Scalar;

/// Largest change of any coordinate in one step.
pub const MAX_STEP: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Stop when the largest gradient entry falls below this.
    pub grad_tol: f64,
    pub initial_damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-8,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum<T, const P: usize> {
    pub theta: [T; P],
    pub value: T,
    pub grad: [T; P],
    pub iterations: usize,
}

/// Maximizes `f` from `init` with Levenberg-damped Newton steps
/// `(−H + λ s I) δ = g`, where `s` is the largest absolute diagonal of `H`.
/// The damped matrix must be positive definite, so every step is an ascent
/// direction, and steps longer than [`MAX_STEP`] in any coordinate are
/// shortened. A step is accepted only if it increases `f`; `λ` shrinks on
/// success and grows on failure.
pub fn maximize<T, F, const P: usize>(f: F, init: &[T; P], config: &NewtonConfig) -> Result<Optimum<T, P>>
where
    T: Scalar,
    F: Fn(&[SecondOrder<T, P>; P]) -> SecondOrder<T, P>,
{
    let tol = T::lit(config.grad_tol);
    let mut theta = *init;
    let mut cur = grad_hess(&f, &theta)?;
    let mut lambda = T::lit(config.initial_damping);
    let slack = T::epsilon() * T::lit(64.0);
    for iter in 0..config.max_iter {
        let gmax = cur.grad.iter().fold(T::zero(), |a, g| a.max(g.abs()));
        if gmax < tol {
            return Ok(Optimum {
                theta,
                value: cur.value,
                grad: cur.grad,
                iterations: iter,
            });
        }
        let neg_h: Matrix<T, P> = linalg::scale(&cur.hess, -T::one());
        let s = linalg::diagonal(&neg_h).iter().fold(T::one(), |a, d| a.max(d.abs()));
        let mut improved = false;
        for _ in 0..60 {
            let damped = linalg::add(&neg_h, &linalg::scale(&linalg::identity(), lambda * s));
            if let Some(l) = linalg::cholesky(&damped) {
                let step = linalg::chol_solve(&l, &cur.grad);
                let longest = step.iter().fold(T::zero(), |a, d| a.max(d.abs()));
                let shrink = (T::lit(MAX_STEP) / longest).min(T::one());
                let trial: [T; P] = std::array::from_fn(|i| theta[i] + step[i] * shrink);
                if let Ok(next) = grad_hess(&f, &trial) {
                    // Near the optimum roundoff hides the increase in `f`, so a
                    // flat step that shrinks the gradient is also taken.
                    let flat = (next.value - cur.value).abs() <= slack * (T::one() + cur.value.abs());
                    let next_gmax = next.grad.iter().fold(T::zero(), |a, g| a.max(g.abs()));
                    if next.value > cur.value || (flat && next_gmax < gmax) {
                        theta = trial;
                        cur = next;
                        lambda = (lambda * T::lit(0.1)).max(T::lit(1e-12));
                        improved = true;
                        break;
                    }
                }
            }
            lambda = lambda * T::lit(10.0);
        }
        if !improved {
            return Ok(Optimum {
                theta,
                value: cur.value,
                grad: cur.grad,
                iterations: iter,
            });
        }
    }
    Err(Error::InvalidInput(format!(
        "Newton iteration did not converge in {} steps",
        config.max_iter
    )))
}

/// Maximizer of the Whittle log-likelihood over transformed parameters.
pub fn whittle_mle<T, M, const P: usize>(
    model: &M,
    pgram: &Periodogram<T>,
    init: &[T; P],
    config: &NewtonConfig,
) -> Result<Optimum<T, P>>
where
    T: Scalar,
    M: SpectralModel<T, P>,
{
    maximize(|x| whittle_loglik(model, x, pgram), init, config)
}

/// Maximizer of the exact LGSS log-likelihood over transformed parameters.
pub fn kalman_mle<T: Scalar>(y: &[T], init: &[T; 3], config: &NewtonConfig) -> Result<Optimum<T, 3>> {
    maximize(|x| kalman_loglik(x, y), init, config)
}
