//! Exact log-likelihood of the linear Gaussian state space model.
//!
//! Scalar filter for `y_t = x_t + ε_t`, `x_t = φ x_{t−1} + η_t`, with the
//! state started from its stationary distribution. Written against [`Real`]
//! so HMC and Newton steps get exact derivatives.

use crate::autodiff::Real;
use crate::Scalar;

/// One-step filter quantities at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KalmanState<T> {
    pub predicted_mean: T,
    pub predicted_var: T,
    pub filtered_mean: T,
    pub filtered_var: T,
    pub innovation: T,
    pub innovation_var: T,
}

/// Runs the filter and returns every step's state.
pub fn kalman_filter<T: Scalar>(theta: &[T; 3], y: &[T]) -> Vec<KalmanState<T>> {
    let phi = theta[0].tanh();
    let q = theta[1].exp();
    let r = theta[2].exp();
    let mut m = T::zero();
    let mut p = q / (T::one() - phi * phi);
    let mut out = Vec::with_capacity(y.len());
    for &obs in y {
        let v = obs - m;
        let f = p + r;
        let gain = p / f;
        let filtered_mean = m + gain * v;
        let filtered_var = p * (T::one() - gain);
        out.push(KalmanState {
            predicted_mean: m,
            predicted_var: p,
            filtered_mean,
            filtered_var,
            innovation: v,
            innovation_var: f,
        });
        m = phi * filtered_mean;
        p = phi * phi * filtered_var + q;
    }
    out
}

/// `Σ_t log N(v_t; 0, F_t)` over the innovations, for transformed parameters
/// `(atanh φ, log σ_η², log σ_ε²)`.
pub fn kalman_loglik<T: Scalar, R: Real<T>>(theta: &[R; 3], y: &[T]) -> R {
    let phi = theta[0].tanh();
    let q = theta[1].exp();
    let r = theta[2].exp();
    let phi2 = phi * phi;
    let half_log_2pi = T::lit(0.5) * (T::TAU()).ln();
    let mut m = R::constant(T::zero());
    let mut p = q / (-phi2 + T::one());
    let mut ll = R::constant(T::zero());
    for &obs in y {
        let v = -m + obs;
        let f = p + r;
        let f_inv = f.recip();
        ll = ll - (f.ln() + v * v * f_inv) * T::lit(0.5) - half_log_2pi;
        let gain = p * f_inv;
        m = phi * (m + gain * v);
        // p(1 − K) = p r / f
        p = phi2 * (p * r * f_inv) + q;
    }
    ll
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{value_of, Dual};
    use crate::models::{Lgss, LgssParams, SpectralModel};

    fn theta(phi: f64, se: f64, sp: f64) -> [f64; 3] {
        Lgss.transform(&LgssParams::new(phi, se, sp).unwrap()).unwrap()
    }

    fn normal_logpdf(x: f64, var: f64) -> f64 {
        -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + x * x / var)
    }

    #[test]
    fn white_state_reduces_to_iid() {
        let y = [0.3, -1.1, 0.7, 2.0, -0.4];
        let th = theta(0.0, 0.8, 0.6);
        let ll = value_of(|x: &[Dual<f64, 0>; 3]| kalman_loglik(x, &y), &th);
        let expect: f64 = y.iter().map(|v| normal_logpdf(*v, 0.64 + 0.36)).sum();
        assert!((ll - expect).abs() < 1e-12);
    }

    #[test]
    fn single_observation() {
        let th = theta(0.9, 0.7, 0.5);
        let ll = value_of(|x: &[Dual<f64, 0>; 3]| kalman_loglik(x, &[1.3]), &th);
        let var = 0.49 / (1.0 - 0.81) + 0.25;
        assert!((ll - normal_logpdf(1.3, var)).abs() < 1e-12);
    }

    #[test]
    fn filter_states_are_consistent() {
        let y = [0.5, -0.2, 0.9, 1.4];
        let th = theta(0.6, 1.0, 0.5);
        let states = kalman_filter(&th, &y);
        assert_eq!(states.len(), 4);
        assert!(states.iter().all(|s| s.predicted_var > 0.0 && s.filtered_var > 0.0));
        let ll: f64 = states.iter().map(|s| normal_logpdf(s.innovation, s.innovation_var)).sum();
        let direct = value_of(|x: &[Dual<f64, 0>; 3]| kalman_loglik(x, &y), &th);
        assert!((ll - direct).abs() < 1e-12);
    }
}
