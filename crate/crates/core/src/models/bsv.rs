use super::{
    check_ar, check_finite, log_chi2_variance, log_squared_demean, Family, SpectralMatrix, SpectralModel,
};
use crate::autodiff::{ComplexNum, Real};
use crate::error::{Error, Result};
use crate::spectral::{FreqPoint, TimeSeries};
use crate::Scalar;

/// Bivariate stochastic volatility model with diagonal VAR(1) log-variances
/// and correlated state noise, fitted to the log-squared returns.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BivariateSv;

/// Diagonal transition `Φ` and state-noise covariance `Σ_η = L Lᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BsvParams<T> {
    pub phi: [T; 2],
    /// Lower Cholesky factor of `Σ_η`, positive diagonal.
    pub chol: [[T; 2]; 2],
}

impl<T: Scalar> BsvParams<T> {
    pub fn new(phi: [T; 2], sigma_eta: [[T; 2]; 2]) -> Result<Self> {
        check_finite("phi", &phi)?;
        check_finite("sigma_eta", &[sigma_eta[0][0], sigma_eta[0][1], sigma_eta[1][0], sigma_eta[1][1]])?;
        if (sigma_eta[0][1] - sigma_eta[1][0]).abs() > T::epsilon() * T::lit(16.0) * sigma_eta[0][1].abs().max(T::one()) {
            return Err(Error::InvalidInput("sigma_eta must be symmetric".into()));
        }
        let chol = crate::linalg::cholesky(&sigma_eta)
            .ok_or_else(|| Error::NotPositiveDefinite("sigma_eta".into()))?;
        let p = Self { phi, chol };
        p.validate()?;
        Ok(p)
    }

    pub fn from_cholesky(phi: [T; 2], chol: [[T; 2]; 2]) -> Result<Self> {
        let p = Self { phi, chol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_ar("phi_11", self.phi[0])?;
        check_ar("phi_22", self.phi[1])?;
        if !(self.chol[0][0] > T::zero() && self.chol[1][1] > T::zero()) || self.chol[0][1] != T::zero() {
            return Err(Error::InvalidInput(
                "Cholesky factor must be lower triangular with positive diagonal".into(),
            ));
        }
        Ok(())
    }

    pub fn phi_matrix(&self) -> [[T; 2]; 2] {
        [[self.phi[0], T::zero()], [T::zero(), self.phi[1]]]
    }

    pub fn sigma_eta(&self) -> [[T; 2]; 2] {
        let l = &self.chol;
        let s21 = l[1][0] * l[0][0];
        [[l[0][0] * l[0][0], s21], [s21, l[1][0] * l[1][0] + l[1][1] * l[1][1]]]
    }
}

impl<T: Scalar> SpectralModel<T, 5> for BivariateSv {
    type Params = BsvParams<T>;

    fn family(&self) -> Family {
        Family::Bsv
    }

    /// `(atanh Φ₁₁, atanh Φ₂₂, log l₁₁, log l₂₂, l₂₁)`.
    fn transform(&self, p: &BsvParams<T>) -> Result<[T; 5]> {
        p.validate()?;
        Ok([
            p.phi[0].atanh(),
            p.phi[1].atanh(),
            p.chol[0][0].ln(),
            p.chol[1][1].ln(),
            p.chol[1][0],
        ])
    }

    fn inverse_transform(&self, theta: &[T; 5]) -> Result<BsvParams<T>> {
        check_finite("theta", theta)?;
        BsvParams::from_cholesky(
            [theta[0].tanh(), theta[1].tanh()],
            [[theta[2].exp(), T::zero()], [theta[4], theta[3].exp()]],
        )
    }

    fn natural_values(&self, p: &BsvParams<T>) -> Vec<T> {
        let s = p.sigma_eta();
        vec![p.phi[0], p.phi[1], s[0][0], s[1][0], s[1][1]]
    }

    fn param_names(&self) -> [&'static str; 5] {
        ["theta_11", "theta_22", "gamma_11", "gamma_22", "l_21"]
    }

    fn natural_names(&self) -> Vec<&'static str> {
        vec!["Phi_11", "Phi_22", "Sigma_eta_11", "Sigma_eta_21", "Sigma_eta_22"]
    }

    /// `(I − Φe^{−iω})⁻¹ Σ_η (I − Φe^{−iω})^{−H} + (π²/2) I`.
    ///
    /// With diagonal `Φ` the inverse is `diag(1/a₁, 1/a₂)`,
    /// `a_j = 1 − Φ_jj e^{−iω}`, so entry `(i, j)` is `Σ_ij / (a_i conj(a_j))`.
    /// `(Φ11, Φ22, Σ11, Σ21, Σ22)`.
    fn coefficients<R: Real<T>>(&self, theta: &[R; 5]) -> [R; 5] {
        let l11 = theta[2].exp();
        let l22 = theta[3].exp();
        let l21 = theta[4];
        [
            theta[0].tanh(),
            theta[1].tanh(),
            l11 * l11,
            l21 * l11,
            l21 * l21 + l22 * l22,
        ]
    }

    fn density_from<R: Real<T>>(&self, c: &[R; 5], freq: &FreqPoint<T>) -> SpectralMatrix<R> {
        let [phi1, phi2, s11, s21, s22] = *c;
        let one = R::constant(T::one());
        let a1 = ComplexNum::new(one - phi1 * freq.cos, phi1 * freq.sin);
        let a2 = ComplexNum::new(one - phi2 * freq.cos, phi2 * freq.sin);
        let noise = log_chi2_variance::<T>();
        let cross = a2 * a1.conj();
        SpectralMatrix::Hermitian2 {
            f11: s11 / a1.norm_sqr() + noise,
            f22: s22 / a2.norm_sqr() + noise,
            f21: ComplexNum::new(s21, R::constant(T::zero())) / cross,
        }
    }

    fn prepare(&self, y: &TimeSeries<T>) -> Result<TimeSeries<T>> {
        if y.dim() != 2 {
            return Err(Error::InvalidInput(format!(
                "bsv expects a bivariate series, got d = {}",
                y.dim()
            )));
        }
        log_squared_demean(y)
    }
}
