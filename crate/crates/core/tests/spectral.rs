use proptest::prelude::*;
use whittle_core::rng;
use whittle_core::spectral::{
    compute_periodogram, find_cutoff, make_block_plan, welch_smooth, SmoothedSpectrum, TimeSeries, WelchConfig,
};

fn demeaned(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - m).collect()
}

/// `|Σ_t x_t e^{−iωt}|² / T` by direct summation.
fn direct_ordinate(x: &[f64], omega: f64) -> f64 {
    let (re, im) = x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, v)| {
        let a = omega * (t + 1) as f64;
        (re + v * a.cos(), im - v * a.sin())
    });
    (re * re + im * im) / x.len() as f64
}

/// Full-grid ordinate sum built from the retained grid: `I(0) = 0` after
/// de-meaning, the retained ordinates appear twice by symmetry, and `I(π)`
/// (even `T` only) comes from the direct-sum oracle.
fn full_grid_sum(x: &[f64]) -> f64 {
    let y = TimeSeries::univariate(x.to_vec(), "x").unwrap();
    let p = compute_periodogram(&y).unwrap();
    let retained: f64 = (1..=p.len()).map(|k| p.ordinate(k).scalar()).sum();
    let nyquist = if x.len().is_multiple_of(2) {
        direct_ordinate(&demeaned(x), std::f64::consts::PI)
    } else {
        0.0
    };
    2.0 * retained + nyquist
}

#[test]
fn parseval_on_random_series() {
    let mut r = rng::seeded(11);
    for n in [64usize, 127, 128, 1000, 4096] {
        let x: Vec<f64> = (0..n).map(|_| 3.0 + rng::normal::<f64>(&mut r)).collect();
        let energy: f64 = demeaned(&x).iter().map(|v| v * v).sum();
        let rel = (full_grid_sum(&x) - energy).abs() / energy;
        assert!(rel < 1e-8, "T = {n}: relative error {rel}");
    }
}

#[test]
fn retained_grid_matches_direct_dft() {
    let mut r = rng::seeded(12);
    let x: Vec<f64> = (0..37).map(|_| rng::normal::<f64>(&mut r)).collect();
    let p = compute_periodogram(&TimeSeries::univariate(x.clone(), "x").unwrap()).unwrap();
    let z = demeaned(&x);
    for k in 1..=p.len() {
        let omega = 2.0 * std::f64::consts::PI * k as f64 / 37.0;
        assert!((p.freq(k).omega - omega).abs() < 1e-15);
        assert!((p.ordinate(k).scalar() - direct_ordinate(&z, omega)).abs() < 1e-10);
    }
}

#[test]
fn bivariate_ordinates_are_hermitian_psd() {
    let mut r = rng::seeded(13);
    let a: Vec<f64> = (0..200).map(|_| rng::normal::<f64>(&mut r)).collect();
    let b: Vec<f64> = a.iter().map(|v| 0.6 * v + rng::normal::<f64>(&mut r)).collect();
    let p = compute_periodogram(&TimeSeries::from_columns(&[a, b], "ab").unwrap()).unwrap();
    for k in 1..=p.len() {
        let o = p.ordinate(k);
        for i in 0..2 {
            assert!(o.get(i, i).im.abs() < 1e-14 && o.get(i, i).re >= 0.0);
        }
        assert!((o.get(0, 1) - o.get(1, 0).conj()).norm() < 1e-14);
        for _ in 0..5 {
            let z = [
                num_complex::Complex::new(rng::normal::<f64>(&mut r), rng::normal::<f64>(&mut r)),
                num_complex::Complex::new(rng::normal::<f64>(&mut r), rng::normal::<f64>(&mut r)),
            ];
            let mut q = num_complex::Complex::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    q += z[i].conj() * o.get(i, j) * z[j];
                }
            }
            assert!(q.re >= -1e-12 && q.im.abs() < 1e-12);
        }
    }
}

#[test]
fn grid_cosine_concentrates() {
    for (n, j) in [(64usize, 5usize), (100, 17), (257, 60)] {
        let omega = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let x: Vec<f64> = (1..=n).map(|t| (omega * t as f64).cos()).collect();
        let p = compute_periodogram(&TimeSeries::univariate(x, "cos").unwrap()).unwrap();
        let peak = p.ordinate(j).scalar();
        for k in (1..=p.len()).filter(|&k| k != j) {
            assert!(peak >= 100.0 * p.ordinate(k).scalar(), "T = {n}, k = {k}");
        }
    }
}

/// Average of the per-draw fraction of grid points inside `[0.5, 2]` for unit
/// white noise. A single draw averages only 8 segments, so the check is made
/// on the Monte Carlo mean over independent draws.
#[test]
fn welch_white_noise_power_near_one() {
    let draws = 20;
    let mut fractions = Vec::new();
    let mut mean_power: Vec<f64> = Vec::new();
    for d in 0..draws {
        let mut r = rng::stream(14, &[d]);
        let x: Vec<f64> = (0..4096).map(|_| rng::normal::<f64>(&mut r)).collect();
        let s = welch_smooth(&TimeSeries::univariate(x, "wn").unwrap(), &WelchConfig::default()).unwrap();
        let col = &s.power[0];
        let inside = col.iter().filter(|p| (0.5..=2.0).contains(*p)).count();
        fractions.push(inside as f64 / col.len() as f64);
        if mean_power.is_empty() {
            mean_power = vec![0.0; col.len()];
        }
        for (m, p) in mean_power.iter_mut().zip(col) {
            *m += p / draws as f64;
        }
    }
    let avg_fraction = fractions.iter().sum::<f64>() / draws as f64;
    assert!(avg_fraction >= 0.90, "mean fraction inside [0.5, 2]: {avg_fraction}");
    let mean_inside = mean_power.iter().filter(|p| (0.5..=2.0).contains(*p)).count();
    assert!(mean_inside as f64 >= 0.95 * mean_power.len() as f64);
}

#[test]
fn lgss_cutoff_has_expected_scale() {
    let truth = whittle_core::models::LgssParams::new(0.9, 0.7, 0.5).unwrap();
    let y = whittle_core::sim::simulate(&whittle_core::sim::SimSpec {
        model: whittle_core::sim::SimModel::Lgss(truth),
        n_obs: 10_000,
        seed: 1,
    })
    .unwrap();
    let s = welch_smooth(&y, &WelchConfig::default()).unwrap();
    let cut = find_cutoff(&s, 0.5);
    // Theoretical half-power point of this spectrum is k ≈ 169; the smoothed
    // estimate is noisy, so only the order of magnitude is checked.
    assert!((10..=1000).contains(&cut), "cutoff {cut}");
}

proptest! {
    #[test]
    fn parseval_property(x in prop::collection::vec(-10.0f64..10.0, 4..300)) {
        let energy: f64 = demeaned(&x).iter().map(|v| v * v).sum();
        prop_assume!(energy > 1e-6);
        let rel = (full_grid_sum(&x) - energy).abs() / energy;
        prop_assert!(rel < 1e-8);
    }

    #[test]
    fn block_plan_partitions(k_max in 1usize..3000, frac in 0.0f64..=1.0, b in 1usize..400) {
        let n_ind = ((k_max as f64) * frac).floor() as usize;
        let plan = make_block_plan(k_max, n_ind, b).unwrap();
        let rest = k_max - n_ind;
        prop_assert_eq!(plan.n_blocks(), rest.div_ceil(b));
        prop_assert_eq!(plan.total_updates(), n_ind + plan.n_blocks());
        let mut next = n_ind + 1;
        for r in &plan.blocks {
            prop_assert_eq!(r.start, next);
            prop_assert!(!r.is_empty());
            next = r.end;
        }
        prop_assert_eq!(next, k_max + 1);
        if let (Some(min), Some(max)) = (plan.blocks.iter().map(|r| r.len()).min(), plan.blocks.iter().map(|r| r.len()).max()) {
            prop_assert!(max - min <= 1);
        }
    }

    #[test]
    fn cutoff_monotone_in_ratio(
        power in prop::collection::vec(0.0f64..100.0, 3..60),
        r1 in 0.01f64..0.99,
        r2 in 0.01f64..0.99,
    ) {
        let n_obs = 2 * power.len() + 3;
        let step = 2.0 * std::f64::consts::PI / n_obs as f64;
        let s = SmoothedSpectrum {
            n_obs,
            frequencies: (1..=power.len()).map(|k| step * k as f64).collect(),
            power: vec![power],
        };
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(find_cutoff(&s, lo) >= find_cutoff(&s, hi));
    }
}
