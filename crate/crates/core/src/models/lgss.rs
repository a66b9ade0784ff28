use super::{ar1_denominator, check_ar, check_finite, check_positive, Family, SpectralMatrix, SpectralModel};
use crate::autodiff::Real;
use crate::error::Result;
use crate::spectral::{FreqPoint, TimeSeries};
use crate::Scalar;

/// Linear Gaussian state space model: AR(1) state observed in white noise.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Lgss;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LgssParams<T> {
    pub phi: T,
    pub sigma_eta: T,
    pub sigma_eps: T,
}

impl<T: Scalar> LgssParams<T> {
    pub fn new(phi: T, sigma_eta: T, sigma_eps: T) -> Result<Self> {
        let p = Self {
            phi,
            sigma_eta,
            sigma_eps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("lgss parameters", &[self.phi, self.sigma_eta, self.sigma_eps])?;
        check_ar("phi", self.phi)?;
        check_positive("sigma_eta", self.sigma_eta)?;
        check_positive("sigma_eps", self.sigma_eps)
    }

    /// Marginal variance of `y_t`.
    pub fn variance(&self) -> T {
        self.sigma_eta * self.sigma_eta / (T::one() - self.phi * self.phi) + self.sigma_eps * self.sigma_eps
    }
}

impl<T: Scalar> SpectralModel<T, 3> for Lgss {
    type Params = LgssParams<T>;

    fn family(&self) -> Family {
        Family::Lgss
    }

    /// `(atanh φ, log σ_η², log σ_ε²)`.
    fn transform(&self, p: &LgssParams<T>) -> Result<[T; 3]> {
        p.validate()?;
        Ok([
            p.phi.atanh(),
            (p.sigma_eta * p.sigma_eta).ln(),
            (p.sigma_eps * p.sigma_eps).ln(),
        ])
    }

    fn inverse_transform(&self, theta: &[T; 3]) -> Result<LgssParams<T>> {
        check_finite("theta", theta)?;
        let half = T::lit(0.5);
        LgssParams::new(theta[0].tanh(), (theta[1] * half).exp(), (theta[2] * half).exp())
    }

    fn natural_values(&self, p: &LgssParams<T>) -> Vec<T> {
        vec![p.phi, p.sigma_eta, p.sigma_eps]
    }

    fn param_names(&self) -> [&'static str; 3] {
        ["theta_phi", "theta_eta", "theta_eps"]
    }

    fn natural_names(&self) -> Vec<&'static str> {
        vec!["phi", "sigma_eta", "sigma_eps"]
    }

    /// `(φ, σ_η², σ_ε²)`.
    fn coefficients<R: Real<T>>(&self, theta: &[R; 3]) -> [R; 3] {
        [theta[0].tanh(), theta[1].exp(), theta[2].exp()]
    }

    fn density_from<R: Real<T>>(&self, c: &[R; 3], freq: &FreqPoint<T>) -> SpectralMatrix<R> {
        SpectralMatrix::Scalar(c[1] / ar1_denominator(c[0], freq) + c[2])
    }

    fn prepare(&self, y: &TimeSeries<T>) -> Result<TimeSeries<T>> {
        if y.dim() != 1 {
            return Err(crate::Error::InvalidInput(format!(
                "lgss expects a univariate series, got d = {}",
                y.dim()
            )));
        }
        Ok(y.clone())
    }
}
