//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]
// Index loops mirror the matrix algebra they implement.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex;
use whittle_core::autodiff::{fd_grad_hess, grad_hess, value_of};
use whittle_core::models::{whittle_loglik_freq, BsvParams, LgssParams, SvParams};
use whittle_core::rng::{self, Rng};
use whittle_core::sim::{simulate, SimModel, SimSpec};
use whittle_core::spectral::{retained_len, FreqPoint, Ordinate, Periodogram};
use whittle_core::{BivariateSv, Family, Lgss, Real, SecondOrder, SpectralMatrix, SpectralModel, TimeSeries, UnivariateSv};

pub const FD_STEP: f64 = 1e-5;

/// `‖a − b‖∞ / max(‖b‖∞, 1)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let den = b.iter().fold(1.0f64, |m, y| m.max(y.abs()));
    num / den
}

pub fn flat_hess<const P: usize>(h: &[[f64; P]; P]) -> Vec<f64> {
    h.iter().flatten().copied().collect()
}

pub fn hess_asymmetry<const P: usize>(h: &[[f64; P]; P]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..P {
        for j in 0..P {
            worst = worst.max((h[i][j] - h[j][i]).abs());
        }
    }
    worst
}

/// One random `(θ, ω_k, I_k)` case evaluated both ways.
pub struct AdCase {
    pub exact: (f64, Vec<f64>, Vec<f64>),
    pub fd: (f64, Vec<f64>, Vec<f64>),
    pub asymmetry: f64,
}

impl AdCase {
    pub fn grad_err(&self) -> f64 {
        rel_err(&self.exact.1, &self.fd.1)
    }

    pub fn hess_err(&self) -> f64 {
        rel_err(&self.exact.2, &self.fd.2)
    }
}

fn ad_case<M, const P: usize>(model: &M, theta: [f64; P], freq: FreqPoint<f64>, entries: &[Complex<f64>]) -> AdCase
where
    M: SpectralModel<f64, P>,
{
    let ord = Ordinate::new(model.dim(), entries);
    let exact = grad_hess(|x: &[SecondOrder<f64, P>; P]| whittle_loglik_freq(model, x, &freq, &ord), &theta).unwrap();
    let fd = fd_grad_hess(
        |x: &[f64; P]| value_of(|d| whittle_loglik_freq(model, d, &freq, &ord), x),
        &theta,
        FD_STEP,
    )
    .unwrap();
    AdCase {
        asymmetry: hess_asymmetry(&exact.hess),
        exact: (exact.value, exact.grad.to_vec(), flat_hess(&exact.hess)),
        fd: (fd.value, fd.grad.to_vec(), flat_hess(&fd.hess)),
    }
}

fn uniform(r: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng::uniform::<f64>(r)
}

fn random_freq(r: &mut Rng, n_obs: usize) -> FreqPoint<f64> {
    let k_max = (n_obs - 1) / 2;
    let k = 1 + ((rng::uniform::<f64>(r) * k_max as f64) as usize).min(k_max - 1);
    FreqPoint::new(k, 2.0 * std::f64::consts::PI * k as f64 / n_obs as f64)
}

/// Random `(θ, ω_k, I_k)` tuples per family: `θ` spans the region the priors
/// cover, `ω_k` a grid point for `T = 1000`, `I_k` a positive scalar or a
/// random Hermitian PSD matrix.
pub fn ad_cases(family: Family, n: usize, seed: u64) -> Vec<AdCase> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let freq = random_freq(&mut r, 1000);
            match family {
                Family::Lgss => {
                    let theta = [uniform(&mut r, -2.5, 2.5), uniform(&mut r, -3.0, 1.0), uniform(&mut r, -3.0, 1.0)];
                    let i = [Complex::new(uniform(&mut r, 0.01, 20.0), 0.0)];
                    ad_case(&Lgss, theta, freq, &i)
                }
                Family::Sv1 => {
                    let theta = [uniform(&mut r, 0.0, 3.5), uniform(&mut r, -6.0, -1.0)];
                    let i = [Complex::new(uniform(&mut r, 0.01, 20.0), 0.0)];
                    ad_case(&UnivariateSv::default(), theta, freq, &i)
                }
                Family::Bsv => {
                    let theta = [
                        uniform(&mut r, 0.5, 3.5),
                        uniform(&mut r, 0.5, 3.5),
                        uniform(&mut r, -3.5, -0.5),
                        uniform(&mut r, -3.5, -1.5),
                        uniform(&mut r, -0.3, 0.3),
                    ];
                    // Sum of two rank-one terms v vᴴ.
                    let mut m = [Complex::new(0.0, 0.0); 4];
                    for _ in 0..2 {
                        let v = [
                            Complex::new(uniform(&mut r, -3.0, 3.0), uniform(&mut r, -3.0, 3.0)),
                            Complex::new(uniform(&mut r, -3.0, 3.0), uniform(&mut r, -3.0, 3.0)),
                        ];
                        for a in 0..2 {
                            for b in 0..2 {
                                m[2 * a + b] += v[a] * v[b].conj();
                            }
                        }
                    }
                    ad_case(&BivariateSv, theta, freq, &m)
                }
            }
        })
        .collect()
}

/// Dense log-density of `y ~ N(0, C)` with `C_ij = σ_ε² δ_ij + σ_η² φ^|i−j| / (1 − φ²)`,
/// by Cholesky on the full `T × T` matrix.
pub fn dense_lgss_loglik(phi: f64, sigma_eta: f64, sigma_eps: f64, y: &[f64]) -> f64 {
    let n = y.len();
    let var_x = sigma_eta * sigma_eta / (1.0 - phi * phi);
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            c[i][j] = var_x * phi.powi((i as i32 - j as i32).abs());
        }
        c[i][i] += sigma_eps * sigma_eps;
    }
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = c[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = c[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i][k] * z[k];
        }
        z[i] = s / l[i][i];
    }
    let log_det: f64 = (0..n).map(|i| 2.0 * l[i][i].ln()).sum();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + z.iter().map(|v| v * v).sum::<f64>())
}

pub const LGSS_TRUTH: (f64, f64, f64) = (0.9, 0.7, 0.5);
pub const LGSS_PRIOR_MEAN: [f64; 3] = [0.0, -1.0, -1.0];
pub const SV_PRIOR_MEAN: [f64; 2] = [2.0, -3.0];
pub const SV_PRIOR_VAR: [f64; 2] = [0.5, 0.5];
pub const BSV_PRIOR_MEAN: [f64; 5] = [2.0, 2.0, -2.0, -3.0, 0.0];
pub const BSV_PRIOR_VAR: [f64; 5] = [0.5, 0.5, 0.5, 0.05, 0.05];
pub const BSV_PHI: [f64; 2] = [0.99, 0.98];
pub const BSV_SIGMA: [[f64; 2]; 2] = [[0.02, 0.005], [0.005, 0.01]];

pub fn lgss_data(n_obs: usize, seed: u64) -> TimeSeries<f64> {
    let (phi, se, sn) = LGSS_TRUTH;
    simulate(&SimSpec {
        model: SimModel::Lgss(LgssParams::new(phi, se, sn).unwrap()),
        n_obs,
        seed,
    })
    .unwrap()
}

pub fn sv_data(n_obs: usize, seed: u64) -> TimeSeries<f64> {
    simulate(&SimSpec {
        model: SimModel::Sv1(SvParams::new(0.99, 0.1, 2.0).unwrap()),
        n_obs,
        seed,
    })
    .unwrap()
}

pub fn bsv_data(n_obs: usize, seed: u64) -> TimeSeries<f64> {
    simulate(&SimSpec {
        model: SimModel::Bsv(BsvParams::new(BSV_PHI, BSV_SIGMA).unwrap()),
        n_obs,
        seed,
    })
    .unwrap()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// One-parameter density `f(θ) = exp(c θ²)`. With zero ordinates the Whittle
/// term is `−c θ²`: identically zero for `c = 0`, convex for `c < 0`.
pub struct ExpQuadratic {
    pub c: f64,
}

impl SpectralModel<f64, 1> for ExpQuadratic {
    type Params = [f64; 1];

    fn family(&self) -> Family {
        Family::Lgss
    }

    fn transform(&self, p: &[f64; 1]) -> whittle_core::Result<[f64; 1]> {
        Ok(*p)
    }

    fn inverse_transform(&self, theta: &[f64; 1]) -> whittle_core::Result<[f64; 1]> {
        Ok(*theta)
    }

    fn natural_values(&self, p: &[f64; 1]) -> Vec<f64> {
        p.to_vec()
    }

    fn param_names(&self) -> [&'static str; 1] {
        ["theta"]
    }

    fn natural_names(&self) -> Vec<&'static str> {
        vec!["theta"]
    }

    fn coefficients<R: Real<f64>>(&self, theta: &[R; 1]) -> [R; 1] {
        *theta
    }

    fn density_from<R: Real<f64>>(&self, c: &[R; 1], _freq: &FreqPoint<f64>) -> SpectralMatrix<R> {
        SpectralMatrix::Scalar((c[0] * c[0] * self.c).exp())
    }

    fn prepare(&self, y: &TimeSeries<f64>) -> whittle_core::Result<TimeSeries<f64>> {
        Ok(y.clone())
    }
}


pub fn zero_periodogram(n_obs: usize) -> Periodogram<f64> {
    Periodogram::from_univariate(n_obs, &vec![0.0; retained_len(n_obs)]).unwrap()
}
