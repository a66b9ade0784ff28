mod common;

use common::*;
use whittle_core::autodiff::{fd_grad_hess, grad_hess, value_of};
use whittle_core::kalman::{kalman_filter, kalman_loglik};
use whittle_core::mle::{kalman_mle, whittle_mle, NewtonConfig};
use whittle_core::models::LgssParams;
use whittle_core::rng;
use whittle_core::spectral::compute_periodogram;
use whittle_core::{Lgss, SecondOrder, SpectralModel};

fn theta(phi: f64, se: f64, sn: f64) -> [f64; 3] {
    Lgss.transform(&LgssParams::new(phi, se, sn).unwrap()).unwrap()
}

fn loglik(t: &[f64; 3], y: &[f64]) -> f64 {
    value_of(|d| kalman_loglik(d, y), t)
}

#[test]
fn matches_dense_gaussian_density() {
    let mut r = rng::seeded(51);
    for _ in 0..10 {
        let phi = -0.95 + 1.9 * rng::uniform::<f64>(&mut r);
        let se = 0.2 + 1.5 * rng::uniform::<f64>(&mut r);
        let sn = 0.2 + 1.5 * rng::uniform::<f64>(&mut r);
        let y: Vec<f64> = (0..50).map(|_| 2.0 * rng::normal::<f64>(&mut r)).collect();
        let got = loglik(&theta(phi, se, sn), &y);
        let want = dense_lgss_loglik(phi, se, sn, &y);
        assert!((got - want).abs() < 1e-8, "φ = {phi}: {got} vs {want}");
    }
}

#[test]
fn white_state_reduces_to_iid() {
    let y = [0.3, -1.2, 0.8, 2.1, -0.4];
    let v = 0.49 + 0.25;
    let iid: f64 = y.iter().map(|x| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + x * x / v)).sum();
    assert!((loglik(&theta(0.0, 0.7, 0.5), &y) - iid).abs() < 1e-12);
    let single = -0.5 * ((2.0 * std::f64::consts::PI * (0.49 / 0.19 + 0.25)).ln() + 0.09 / (0.49 / 0.19 + 0.25));
    assert!((loglik(&theta(0.9, 0.7, 0.5), &[0.3]) - single).abs() < 1e-12);
}

#[test]
fn filter_variances_stay_positive() {
    let y = lgss_data(500, 52).column(0);
    for s in kalman_filter(&theta(0.99, 0.1, 2.0), &y) {
        assert!(s.predicted_var > 0.0 && s.filtered_var > 0.0 && s.innovation_var > 0.0);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let y = lgss_data(200, 53).column(0);
    let mut r = rng::seeded(54);
    for _ in 0..10 {
        let t: [f64; 3] = [rng::normal::<f64>(&mut r), -1.0 + rng::normal::<f64>(&mut r), -1.0 + rng::normal::<f64>(&mut r)];
        let exact = grad_hess(|x: &[SecondOrder<f64, 3>; 3]| kalman_loglik(x, &y), &t).unwrap();
        let fd = fd_grad_hess(|x: &[f64; 3]| loglik(x, &y), &t, FD_STEP).unwrap();
        assert!(rel_err(&exact.grad, &fd.grad) < 1e-6, "{:?} vs {:?}", exact.grad, fd.grad);
    }
}

#[test]
fn swapping_noise_scales_changes_value() {
    let y = lgss_data(100, 55).column(0);
    let a = loglik(&theta(0.9, 0.7, 0.5), &y);
    let b = loglik(&theta(0.9, 0.5, 0.7), &y);
    assert!((a - b).abs() > 1e-3);
}

#[test]
fn scaling_data_scales_maximizer() {
    let y = lgss_data(400, 56).column(0);
    let c = 3.0;
    let scaled: Vec<f64> = y.iter().map(|v| c * v).collect();
    let cfg = NewtonConfig::default();
    let init = [1.0, -1.0, -1.0];
    let a = Lgss.inverse_transform(&kalman_mle(&y, &init, &cfg).unwrap().theta).unwrap();
    let b = Lgss.inverse_transform(&kalman_mle(&scaled, &init, &cfg).unwrap().theta).unwrap();
    assert!((a.phi - b.phi).abs() < 1e-6);
    assert!((b.sigma_eta / a.sigma_eta - c).abs() < 1e-6);
    assert!((b.sigma_eps / a.sigma_eps - c).abs() < 1e-6);
}

#[test]
fn whittle_and_exact_maximizers_agree() {
    let y = lgss_data(10_000, 1);
    let cfg = NewtonConfig::default();
    let init = LGSS_PRIOR_MEAN;
    let exact = Lgss.inverse_transform(&kalman_mle(&y.column(0), &init, &cfg).unwrap().theta).unwrap();
    let pg = compute_periodogram(&y).unwrap();
    let whittle = Lgss.inverse_transform(&whittle_mle(&Lgss, &pg, &init, &cfg).unwrap().theta).unwrap();
    let diff = Lgss
        .natural_values(&exact)
        .iter()
        .zip(Lgss.natural_values(&whittle))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff < 0.05, "{exact:?} vs {whittle:?}");
}
