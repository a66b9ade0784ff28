//! MCMC diagnostics and posterior summaries.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::Scalar;

/// Autocovariances `γ_0..γ_{n−1}` (divisor `n`) via zero-padded FFT.
pub fn autocovariance<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = x.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<T>> = x
        .iter()
        .map(|v| Complex::new(*v - mean, T::zero()))
        .chain(std::iter::repeat_n(Complex::new(T::zero(), T::zero()), m - n))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), T::zero());
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = T::one() / (T::from_usize_lossy(m) * T::from_usize_lossy(n));
    buf[..n].iter().map(|c| c.re * scale).collect()
}

/// Effective sample size of one parameter across one or more chains of equal
/// length.
///
/// Autocorrelations are combined across chains and truncated with Geyer's
/// initial monotone sequence: sums of adjacent pairs are taken while
/// positive and forced to be non-increasing. A chain with zero variance
/// reports 1.
pub fn ess_chains<T: Scalar>(chains: &[&[T]]) -> Result<T> {
    let m = chains.len();
    if m == 0 {
        return Err(Error::InvalidInput("ess needs at least one chain".into()));
    }
    let n = chains[0].len();
    if n < 10 {
        return Err(Error::InvalidInput(format!("ess needs at least 10 draws, got {n}")));
    }
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("chains must have equal length".into()));
    }
    if chains.iter().flat_map(|c| c.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("draws".into()));
    }
    let nf = T::from_usize_lossy(n);
    let mf = T::from_usize_lossy(m);
    let acovs: Vec<Vec<T>> = chains.iter().map(|c| autocovariance(c)).collect();
    let means: Vec<T> = chains.iter().map(|c| c.iter().copied().sum::<T>() / nf).collect();
    let grand = means.iter().copied().sum::<T>() / mf;
    // Within-chain variance with divisor n − 1, between-chain variance of means.
    let within = acovs.iter().map(|a| a[0]).sum::<T>() / mf * nf / (nf - T::one());
    let between = if m > 1 {
        means.iter().map(|mu| (*mu - grand) * (*mu - grand)).sum::<T>() / (mf - T::one())
    } else {
        T::zero()
    };
    let var_plus = within * (nf - T::one()) / nf + between;
    if !(var_plus > T::zero()) {
        return Ok(T::one());
    }
    let rho = |t: usize| {
        let mean_acov = acovs.iter().map(|a| a[t]).sum::<T>() / mf;
        T::one() - (within - mean_acov) / var_plus
    };

    let mut tau = -T::one();
    let mut prev_pair = T::infinity();
    let mut t = 0;
    while t + 1 < n {
        let mut pair = rho(t) + rho(t + 1);
        if !(pair > T::zero()) {
            break;
        }
        if pair > prev_pair {
            pair = prev_pair;
        }
        tau = tau + T::lit(2.0) * pair;
        prev_pair = pair;
        t += 2;
    }
    let total = mf * nf;
    // Guard against τ collapsing for antithetic chains.
    let floor = T::one() / total.log10().max(T::one());
    Ok(total / tau.max(floor))
}

pub fn ess<T: Scalar>(x: &[T]) -> Result<T> {
    ess_chains(&[x])
}

/// Per-column ESS of a draws matrix (one row per iteration).
pub fn ess_matrix<T: Scalar>(draws: &[Vec<T>]) -> Result<Vec<T>> {
    let p = draws.first().map_or(0, Vec::len);
    (0..p)
        .map(|j| {
            let col: Vec<T> = draws.iter().map(|r| r[j]).collect();
            ess(&col)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary<T> {
    pub mean: T,
    pub sd: T,
    pub q025: T,
    pub q50: T,
    pub q975: T,
}

/// Quantile with linear interpolation between order statistics
/// (`h = (n−1) p`). `sorted` must be ascending.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = T::from_usize_lossy(n - 1) * p;
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - T::from_usize_lossy(lo);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean, sd (divisor `n − 1`), and 2.5/50/97.5% quantiles.
pub fn summarize<T: Scalar>(xs: &[T]) -> Result<Summary<T>> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("cannot summarize an empty sample".into()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("sample".into()));
    }
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / (n - T::one())).sqrt()
    } else {
        T::zero()
    };
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(Summary {
        mean,
        sd,
        q025: quantile_sorted(&sorted, T::lit(0.025)),
        q50: quantile_sorted(&sorted, T::lit(0.5)),
        q975: quantile_sorted(&sorted, T::lit(0.975)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn autocovariance_matches_direct_sum() {
        let x = [1.0, 3.0, -2.0, 0.5, 4.0, -1.0, 2.0];
        let n = x.len();
        let mean: f64 = x.iter().sum::<f64>() / n as f64;
        let acov = autocovariance(&x);
        for (t, a) in acov.iter().enumerate() {
            let direct: f64 = (0..n - t).map(|i| (x[i] - mean) * (x[i + t] - mean)).sum::<f64>() / n as f64;
            assert!((a - direct).abs() < 1e-12, "lag {t}");
        }
    }

    #[test]
    fn iid_draws_have_full_ess() {
        let mut r = rng::seeded(1);
        let x: Vec<f64> = (0..10_000).map(|_| rng::normal(&mut r)).collect();
        let e = ess(&x).unwrap();
        assert!((8000.0..=12000.0).contains(&e), "ess = {e}");
    }

    #[test]
    fn constant_chain_reports_one() {
        assert_eq!(ess(&[2.5; 100]).unwrap(), 1.0);
    }

    #[test]
    fn ar1_chain_matches_analytic_ess() {
        let mut r = rng::seeded(2);
        let rho = 0.9;
        let n = 10_000;
        let mut x = Vec::with_capacity(n);
        let mut v: f64 = rng::normal::<f64>(&mut r) / (1.0f64 - rho * rho).sqrt();
        for _ in 0..n {
            x.push(v);
            v = rho * v + rng::normal::<f64>(&mut r);
        }
        let e = ess(&x).unwrap();
        let expect = n as f64 * (1.0 - rho) / (1.0 + rho);
        assert!((e / expect - 1.0).abs() < 0.3, "ess = {e}, expected {expect}");
    }

    #[test]
    fn ess_rejects_short_or_ragged_input() {
        assert!(ess(&[1.0; 9]).is_err());
        assert!(ess_chains(&[&[1.0; 20][..], &[1.0; 19][..]]).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert!((s.sd - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.q50, 3.0);
        assert!((s.q025 - 1.1).abs() < 1e-12);
        assert!((s.q975 - 4.9).abs() < 1e-12);
    }
}
