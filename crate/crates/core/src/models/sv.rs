use super::{
    ar1_denominator, check_ar, check_finite, check_positive, log_chi2_variance, log_squared_demean, Family,
    SpectralMatrix, SpectralModel,
};
use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::spectral::{FreqPoint, TimeSeries};
use crate::Scalar;

/// Univariate stochastic volatility model, fitted to `log y_t²`.
///
/// The scale `kappa` is not inferred. It is carried on the model so that
/// inverse-transformed parameters can report it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnivariateSv<T> {
    pub kappa: T,
}

impl<T: Scalar> Default for UnivariateSv<T> {
    fn default() -> Self {
        Self { kappa: T::one() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvParams<T> {
    pub phi: T,
    pub sigma_eta: T,
    pub kappa: T,
}

impl<T: Scalar> SvParams<T> {
    pub fn new(phi: T, sigma_eta: T, kappa: T) -> Result<Self> {
        let p = Self { phi, sigma_eta, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("sv parameters", &[self.phi, self.sigma_eta, self.kappa])?;
        check_ar("phi", self.phi)?;
        check_positive("sigma_eta", self.sigma_eta)?;
        check_positive("kappa", self.kappa)
    }
}

impl<T: Scalar> SpectralModel<T, 2> for UnivariateSv<T> {
    type Params = SvParams<T>;

    fn family(&self) -> Family {
        Family::Sv1
    }

    /// `(atanh φ, log σ_η²)`.
    fn transform(&self, p: &SvParams<T>) -> Result<[T; 2]> {
        p.validate()?;
        Ok([p.phi.atanh(), (p.sigma_eta * p.sigma_eta).ln()])
    }

    fn inverse_transform(&self, theta: &[T; 2]) -> Result<SvParams<T>> {
        check_finite("theta", theta)?;
        SvParams::new(theta[0].tanh(), (theta[1] * T::lit(0.5)).exp(), self.kappa)
    }

    fn natural_values(&self, p: &SvParams<T>) -> Vec<T> {
        vec![p.phi, p.sigma_eta]
    }

    fn param_names(&self) -> [&'static str; 2] {
        ["theta_phi", "theta_eta"]
    }

    fn natural_names(&self) -> Vec<&'static str> {
        vec!["phi", "sigma_eta"]
    }

    /// `(φ, σ_η²)`.
    fn coefficients<R: Real<T>>(&self, theta: &[R; 2]) -> [R; 2] {
        [theta[0].tanh(), theta[1].exp()]
    }

    fn density_from<R: Real<T>>(&self, c: &[R; 2], freq: &FreqPoint<T>) -> SpectralMatrix<R> {
        SpectralMatrix::Scalar(c[1] / ar1_denominator(c[0], freq) + log_chi2_variance::<T>())
    }

    fn prepare(&self, y: &TimeSeries<T>) -> Result<TimeSeries<T>> {
        if y.dim() != 1 {
            return Err(Error::InvalidInput(format!(
                "sv1 expects a univariate series, got d = {}",
                y.dim()
            )));
        }
        log_squared_demean(y)
    }
}
