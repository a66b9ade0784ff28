//! Model families described through their spectral densities, together with
//! the per-frequency Whittle log-likelihood.
//!
//! All three families are written once against [`Real`], so the same code
//! yields plain values, gradients (HMC), and Hessians (variational updates).

mod bsv;
mod lgss;
mod sv;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex;

pub use bsv::{BivariateSv, BsvParams};
pub use lgss::{Lgss, LgssParams};
pub use sv::{UnivariateSv, SvParams};

use crate::autodiff::{ComplexNum, Dual, Real};
use crate::error::{Error, Result};
use crate::spectral::{FreqPoint, Ordinate, Periodogram, TimeSeries};
use crate::Scalar;

/// `E[log ε²]` for `ε ~ N(0, 1)`, i.e. `ψ(1/2) + log 2 = −γ − log 2`.
pub const MEAN_LOG_CHI2_1: f64 = -1.270_362_845_461_478_2;

/// Variance `π²/2` of `log ε² − E[log ε²]`.
pub fn log_chi2_variance<T: Scalar>() -> T {
    T::PI() * T::PI() / T::lit(2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Lgss,
    Sv1,
    Bsv,
}

impl Family {
    pub fn n_params(self) -> usize {
        match self {
            Family::Lgss => 3,
            Family::Sv1 => 2,
            Family::Bsv => 5,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Family::Bsv => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Lgss => "lgss",
            Family::Sv1 => "sv1",
            Family::Bsv => "bsv",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lgss" => Ok(Family::Lgss),
            "sv1" | "sv" => Ok(Family::Sv1),
            "bsv" | "sv2" => Ok(Family::Bsv),
            other => Err(Error::InvalidInput(format!("unknown model family '{other}'"))),
        }
    }
}

/// Spectral density at one frequency: a positive real for univariate models,
/// a Hermitian 2×2 matrix `[[f11, conj(f21)], [f21, f22]]` for bivariate ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralMatrix<R> {
    Scalar(R),
    Hermitian2 {
        f11: R,
        f22: R,
        f21: ComplexNum<R>,
    },
}

impl<R> SpectralMatrix<R> {
    pub fn dim(&self) -> usize {
        match self {
            SpectralMatrix::Scalar(_) => 1,
            SpectralMatrix::Hermitian2 { .. } => 2,
        }
    }

    /// Strips derivative information.
    pub fn values<T: Scalar>(&self) -> SpectralMatrix<T>
    where
        R: Real<T>,
    {
        match self {
            SpectralMatrix::Scalar(f) => SpectralMatrix::Scalar(f.value()),
            SpectralMatrix::Hermitian2 { f11, f22, f21 } => SpectralMatrix::Hermitian2 {
                f11: f11.value(),
                f22: f22.value(),
                f21: ComplexNum::new(f21.re.value(), f21.im.value()),
            },
        }
    }
}

impl<T: Scalar> SpectralMatrix<T> {
    /// Dense row-major complex matrix.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        match *self {
            SpectralMatrix::Scalar(f) => vec![Complex::new(f, T::zero())],
            SpectralMatrix::Hermitian2 { f11, f22, f21 } => vec![
                Complex::new(f11, T::zero()),
                Complex::new(f21.re, -f21.im),
                Complex::new(f21.re, f21.im),
                Complex::new(f22, T::zero()),
            ],
        }
    }
}

/// A model family defined by its spectral density over `P` unconstrained
/// parameters.
pub trait SpectralModel<T: Scalar, const P: usize>: Send + Sync {
    /// Parameters on their natural (constrained) scale.
    type Params: Clone + fmt::Debug + PartialEq;

    fn family(&self) -> Family;

    /// Observation dimension `d`.
    fn dim(&self) -> usize {
        self.family().dim()
    }

    fn transform(&self, params: &Self::Params) -> Result<[T; P]>;

    fn inverse_transform(&self, theta: &[T; P]) -> Result<Self::Params>;

    /// Flattened natural parameters in reporting order.
    fn natural_values(&self, params: &Self::Params) -> Vec<T>;

    fn param_names(&self) -> [&'static str; P];

    fn natural_names(&self) -> Vec<&'static str>;

    /// Frequency-independent quantities derived from `theta`, so that
    /// transcendental functions are evaluated once per parameter value rather
    /// than once per frequency.
    fn coefficients<R: Real<T>>(&self, theta: &[R; P]) -> [R; P];

    /// Spectral density at `freq` from precomputed [`coefficients`](Self::coefficients).
    fn density_from<R: Real<T>>(&self, coeffs: &[R; P], freq: &FreqPoint<T>) -> SpectralMatrix<R>;

    /// Spectral density of the series the Whittle likelihood is applied to.
    fn density<R: Real<T>>(&self, theta: &[R; P], freq: &FreqPoint<T>) -> SpectralMatrix<R> {
        self.density_from(&self.coefficients(theta), freq)
    }

    /// Maps raw observations to the series whose spectrum `density`
    /// describes.
    fn prepare(&self, y: &TimeSeries<T>) -> Result<TimeSeries<T>>;

    /// Natural values of a transformed draw.
    fn natural_from_theta(&self, theta: &[T; P]) -> Result<Vec<T>> {
        Ok(self.natural_values(&self.inverse_transform(theta)?))
    }
}

/// Whittle log-likelihood contribution for one ordinate:
/// `−(log f + I/f)` or `−(log|f| + tr(f⁻¹ I))`.
#[inline]
pub fn whittle_term<T: Scalar, R: Real<T>>(f: &SpectralMatrix<R>, ord: &Ordinate<'_, T>) -> R {
    match f {
        SpectralMatrix::Scalar(f) => -(f.ln() + f.recip() * ord.scalar()),
        SpectralMatrix::Hermitian2 { f11, f22, f21 } => {
            let i11 = ord.get(0, 0).re;
            let i22 = ord.get(1, 1).re;
            let i21 = ord.get(1, 0);
            let det = *f11 * *f22 - f21.norm_sqr();
            let cross = f21.re * i21.re + f21.im * i21.im;
            let trace = (*f22 * i11 + *f11 * i22 - cross * T::lit(2.0)) / det;
            -(det.ln() + trace)
        }
    }
}

pub fn whittle_loglik_freq<T, R, M, const P: usize>(
    model: &M,
    theta: &[R; P],
    freq: &FreqPoint<T>,
    ord: &Ordinate<'_, T>,
) -> R
where
    T: Scalar,
    R: Real<T>,
    M: SpectralModel<T, P>,
{
    whittle_term(&model.density(theta, freq), ord)
}

/// Sum of contributions over a half-open range of 1-based frequency indices,
/// accumulated in ascending order. An empty range gives zero.
pub fn whittle_loglik_block<T, R, M, const P: usize>(
    model: &M,
    theta: &[R; P],
    block: Range<usize>,
    pgram: &Periodogram<T>,
) -> R
where
    T: Scalar,
    R: Real<T>,
    M: SpectralModel<T, P>,
{
    let coeffs = model.coefficients(theta);
    block.fold(R::constant(T::zero()), |acc, k| {
        acc + whittle_term(&model.density_from(&coeffs, pgram.freq(k)), &pgram.ordinate(k))
    })
}

/// Full Whittle log-likelihood over `k = 1..=K`.
pub fn whittle_loglik<T, R, M, const P: usize>(model: &M, theta: &[R; P], pgram: &Periodogram<T>) -> R
where
    T: Scalar,
    R: Real<T>,
    M: SpectralModel<T, P>,
{
    whittle_loglik_block(model, theta, 1..pgram.len() + 1, pgram)
}

/// Spectral density at `omega` for plain parameter values.
pub fn spectral_density<T, M, const P: usize>(model: &M, theta: &[T; P], omega: T) -> SpectralMatrix<T>
where
    T: Scalar,
    M: SpectralModel<T, P>,
{
    let x: [Dual<T, 0>; P] = theta.map(Dual::constant);
    model.density(&x, &FreqPoint::at(omega)).values()
}

/// Per column `z_t = log(y_t²) − mean_t log(y_t²)`.
pub fn log_squared_demean<T: Scalar>(y: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    let d = y.dim();
    let mut logs = Vec::with_capacity(y.values().len());
    for (i, v) in y.values().iter().enumerate() {
        if *v == T::zero() {
            return Err(Error::ZeroObservation {
                index: i / d,
                column: i % d,
            });
        }
        logs.push((*v * *v).ln());
    }
    Ok(TimeSeries::new(logs, d, y.label())?.demeaned())
}

/// `μ̂ = mean log(y_t²)` and `κ̂ = sqrt(exp(μ̂ − E[log ε²]))` for a univariate
/// stochastic-volatility series.
pub fn estimate_mu_kappa<T: Scalar>(y: &TimeSeries<T>) -> Result<(T, T)> {
    if y.dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "scale estimation expects a univariate series, got d = {}",
            y.dim()
        )));
    }
    let mut sum = T::zero();
    for (t, v) in y.values().iter().enumerate() {
        if *v == T::zero() {
            return Err(Error::ZeroObservation { index: t, column: 0 });
        }
        sum = sum + (*v * *v).ln();
    }
    let mu = sum / T::from_usize_lossy(y.n_obs());
    let kappa = (mu - T::lit(MEAN_LOG_CHI2_1)).exp().sqrt();
    Ok((mu, kappa))
}

/// Spectral radius of a real 2×2 matrix.
pub fn spectral_radius_2x2<T: Scalar>(m: &[[T; 2]; 2]) -> T {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / T::lit(4.0) - det;
    let half = tr / T::lit(2.0);
    if disc >= T::zero() {
        let r = disc.sqrt();
        (half + r).abs().max((half - r).abs())
    } else {
        // complex pair: |λ|² = det
        det.sqrt()
    }
}

/// Stationary covariance `Σ₁` of `x_t = Φ x_{t−1} + η_t`, from the linear
/// system `(I₄ − Φ ⊗ Φ) vec Σ₁ = vec Σ_η`.
pub fn stationary_covariance<T: Scalar>(phi: &[[T; 2]; 2], sigma: &[[T; 2]; 2]) -> Result<[[T; 2]; 2]> {
    let rho = spectral_radius_2x2(phi);
    if !(rho < T::one()) {
        return Err(Error::NotStationary(rho.as_f64()));
    }
    // vec index of (r, c) is 2c + r
    let idx = |r: usize, c: usize| 2 * c + r;
    let mut a = [[T::zero(); 4]; 4];
    let mut b = [T::zero(); 4];
    for r in 0..2 {
        for c in 0..2 {
            b[idx(r, c)] = sigma[r][c];
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if (r, c) == (i, j) { T::one() } else { T::zero() };
                    a[idx(r, c)][idx(i, j)] = delta - phi[r][i] * phi[c][j];
                }
            }
        }
    }
    let v = crate::linalg::solve(&a, &b)
        .ok_or_else(|| Error::NotStationary(rho.as_f64()))?;
    let off = (v[idx(1, 0)] + v[idx(0, 1)]) / T::lit(2.0);
    Ok([[v[idx(0, 0)], off], [off, v[idx(1, 1)]]])
}

fn check_finite<T: Scalar>(what: &str, values: &[T]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what}: {:?}", values.iter().map(|v| v.as_f64()).collect::<Vec<_>>())))
    }
}

fn check_ar<T: Scalar>(name: &str, phi: T) -> Result<()> {
    if phi.abs() < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {phi} must satisfy |{name}| < 1")))
    }
}

fn check_positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {v} must be positive")))
    }
}

/// `1 + φ² − 2φ cos ω`, the squared modulus of `1 − φ e^{−iω}`.
#[inline]
fn ar1_denominator<T: Scalar, R: Real<T>>(phi: R, freq: &FreqPoint<T>) -> R {
    phi * phi - phi * (freq.cos * T::lit(2.0)) + T::one()
}
