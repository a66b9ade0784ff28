//! Frequency-domain Bayesian inference for linear state space models.
//!
//! The crate builds periodograms of observed series, evaluates the Whittle
//! log-likelihood of three model families (a linear Gaussian state space
//! model and univariate/bivariate stochastic volatility models), and runs
//! three inference engines on top of it:
//!
//! * [`rvga`]: a sequential Gaussian variational approximation that updates
//!   once per frequency (or per block of frequencies);
//! * [`hmc`]: Hamiltonian Monte Carlo on the Whittle posterior, or on the
//!   exact Kalman-filter posterior of the linear Gaussian model;
//! * [`mle`]: Newton maximization of either likelihood.
//!
//! Numerical code is generic over [`Scalar`] (`f32`/`f64`); the `*64`
//! aliases below name the usual double-precision instantiations.

// Index loops mirror the matrix algebra they implement.
#![allow(clippy::needless_range_loop)]
// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dual-number products and quotients legitimately mix operators.
#![allow(clippy::suspicious_arithmetic_impl)]

pub mod autodiff;
pub mod diagnostics;
pub mod error;
pub mod hmc;
pub mod kalman;
pub mod linalg;
pub mod mle;
pub mod models;
pub mod rng;
pub mod rvga;
mod scalar;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use autodiff::{ComplexNum, Dual, Real, SecondOrder};
pub use models::{BivariateSv, Family, Lgss, SpectralMatrix, SpectralModel, UnivariateSv};
pub use spectral::{BlockPlan, Periodogram, SmoothedSpectrum, TimeSeries};
pub use rvga::{RvgaConfig, VariationalState};
pub use hmc::{GaussianPrior, HmcConfig};

pub type TimeSeries64 = spectral::TimeSeries<f64>;
pub type Periodogram64 = spectral::Periodogram<f64>;
pub type SmoothedSpectrum64 = spectral::SmoothedSpectrum<f64>;
pub type LgssParams64 = models::LgssParams<f64>;
pub type SvParams64 = models::SvParams<f64>;
pub type BsvParams64 = models::BsvParams<f64>;
pub type VariationalState64<const P: usize> = rvga::VariationalState<f64, P>;
pub type GaussianPrior64<const P: usize> = hmc::GaussianPrior<f64, P>;
pub type Chain64 = hmc::Chain<f64>;
pub type SecondOrder64<const N: usize> = autodiff::SecondOrder<f64, N>;

pub type TimeSeries32 = spectral::TimeSeries<f32>;
pub type Periodogram32 = spectral::Periodogram<f32>;
