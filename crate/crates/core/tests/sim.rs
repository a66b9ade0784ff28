mod common;

use common::*;
use whittle_core::models::{log_squared_demean, stationary_covariance, LgssParams};

fn autocov(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    x.iter().zip(&x[lag..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / x.len() as f64
}

#[test]
fn lgss_moments_match_stationary_values() {
    let (phi, se, sn) = LGSS_TRUTH;
    let p = LgssParams::new(phi, se, sn).unwrap();
    let y = lgss_data(100_000, 41).column(0);
    let var = autocov(&y, 0);
    assert!((var / p.variance() - 1.0).abs() < 0.03, "variance {var} vs {}", p.variance());
    let c1 = autocov(&y, 1);
    let expect = phi * se * se / (1.0 - phi * phi);
    assert!((c1 / expect - 1.0).abs() < 0.05, "lag-1 {c1} vs {expect}");
}

/// Diagonal entries are checked on one series. The off-diagonal entry is
/// small next to the `π²/2` noise floor, so its sampling sd at `T = 100000`
/// (about 0.02) exceeds 5% of its value; it is checked on the average over
/// 20 independent series.
#[test]
fn bsv_log_squares_match_stationary_covariance() {
    let s1 = stationary_covariance(&[[BSV_PHI[0], 0.0], [0.0, BSV_PHI[1]]], &BSV_SIGMA).unwrap();
    let noise = std::f64::consts::PI.powi(2) / 2.0;
    let cov = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>() / x.len() as f64;
    let runs = 20;
    let mut cross = 0.0;
    for seed in 0..runs {
        let z = log_squared_demean(&bsv_data(100_000, 42 + seed)).unwrap();
        let (a, b) = (z.column(0), z.column(1));
        if seed == 0 {
            for (i, c) in [&a, &b].into_iter().enumerate() {
                let v = cov(c, c);
                let expect = s1[i][i] + noise;
                assert!((v / expect - 1.0).abs() < 0.05, "({i},{i}) {v} vs {expect}");
            }
        }
        cross += cov(&a, &b) / runs as f64;
    }
    assert!((cross / s1[1][0] - 1.0).abs() < 0.05, "(1,0) {cross} vs {}", s1[1][0]);
}

#[test]
fn outputs_have_requested_shape_and_no_zeros() {
    for n in [4usize, 5, 97] {
        assert_eq!(lgss_data(n, 1).n_obs(), n);
        let y = sv_data(n, 1);
        assert_eq!((y.n_obs(), y.dim()), (n, 1));
        assert!(y.values().iter().all(|v| *v != 0.0));
        let y = bsv_data(n, 1);
        assert_eq!((y.n_obs(), y.dim()), (n, 2));
        assert!(y.values().iter().all(|v| *v != 0.0));
    }
}

#[test]
fn same_seed_same_series() {
    assert_eq!(bsv_data(300, 9), bsv_data(300, 9));
    assert_eq!(sv_data(300, 9), sv_data(300, 9));
}

#[test]
fn too_short_series_is_rejected() {
    let spec = whittle_core::sim::SimSpec {
        model: whittle_core::sim::SimModel::Lgss(LgssParams::new(0.5, 1.0, 1.0).unwrap()),
        n_obs: 3,
        seed: 0,
    };
    assert!(whittle_core::sim::simulate(&spec).is_err());
}
