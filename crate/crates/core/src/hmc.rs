//! Hamiltonian Monte Carlo with a fixed number of leapfrog steps.
//!
//! Targets are log-densities written against [`Real`], so gradients come from
//! forward-mode autodiff. The Whittle posterior and the Kalman-exact LGSS
//! posterior are provided. Step size may be tuned by dual averaging during
//! burn-in; the diagonal mass matrix defaults to the prior precision and may
//! optionally be re-estimated from burn-in draws.

use rayon::prelude::*;

use crate::autodiff::{self, Dual, Real};
use crate::error::{Error, Result};
use crate::kalman::kalman_loglik;
use crate::linalg::{self, Matrix};
use crate::models::{whittle_loglik, SpectralModel};
use crate::rng::{self, Rng};
use crate::rvga::VariationalState;
use crate::spectral::Periodogram;
use crate::Scalar;

/// Energy error beyond which a proposal counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Multivariate normal prior on the transformed parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPrior<T, const P: usize> {
    mean: [T; P],
    cov: Matrix<T, P>,
    precision: Matrix<T, P>,
    chol: Matrix<T, P>,
    log_norm: T,
}

impl<T: Scalar, const P: usize> GaussianPrior<T, P> {
    pub fn new(mean: [T; P], cov: Matrix<T, P>) -> Result<Self> {
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("prior mean".into()));
        }
        let cov = linalg::symmetrize(&cov);
        let chol = linalg::cholesky(&cov).ok_or_else(|| Error::NotPositiveDefinite("prior covariance".into()))?;
        let precision = linalg::chol_inverse(&chol);
        let log_norm = -T::lit(0.5) * (T::from_usize_lossy(P) * T::TAU().ln() + linalg::chol_log_det(&chol));
        Ok(Self {
            mean,
            cov,
            precision,
            chol,
            log_norm,
        })
    }

    pub fn diagonal(mean: [T; P], variances: [T; P]) -> Result<Self> {
        Self::new(mean, linalg::diag(&variances))
    }

    pub fn mean(&self) -> &[T; P] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix<T, P> {
        &self.cov
    }

    pub fn precision(&self) -> &Matrix<T, P> {
        &self.precision
    }

    /// Normalized log-density.
    pub fn log_density<R: Real<T>>(&self, theta: &[R; P]) -> R {
        let d: [R; P] = std::array::from_fn(|i| theta[i] - self.mean[i]);
        let mut quad = R::constant(T::zero());
        for i in 0..P {
            let mut row = R::constant(T::zero());
            for j in 0..P {
                row = row + d[j] * self.precision[i][j];
            }
            quad = quad + d[i] * row;
        }
        quad * T::lit(-0.5) + self.log_norm
    }

    pub fn sample(&self, rng: &mut Rng) -> [T; P] {
        let z: [T; P] = std::array::from_fn(|_| rng::normal(rng));
        let lz = linalg::mat_vec(&self.chol, &z);
        std::array::from_fn(|i| self.mean[i] + lz[i])
    }

    /// The same Gaussian as a starting point for the variational recursion.
    pub fn to_variational(&self) -> Result<VariationalState<T, P>> {
        VariationalState::new(self.mean, self.cov)
    }
}

/// Unnormalized log-density over `P` unconstrained parameters.
pub trait LogDensity<T: Scalar, const P: usize>: Sync {
    fn log_density<R: Real<T>>(&self, theta: &[R; P]) -> R;

    /// Value and gradient; errors when either is non-finite.
    fn value_grad(&self, theta: &[T; P]) -> Result<(T, [T; P])> {
        autodiff::gradient(|x: &[Dual<T, P>; P]| self.log_density(x), theta)
    }
}

/// Whittle log-likelihood plus Gaussian prior.
pub struct WhittlePosterior<'a, T, M, const P: usize> {
    pub model: &'a M,
    pub pgram: &'a Periodogram<T>,
    pub prior: &'a GaussianPrior<T, P>,
}

impl<T, M, const P: usize> LogDensity<T, P> for WhittlePosterior<'_, T, M, P>
where
    T: Scalar,
    M: SpectralModel<T, P>,
{
    fn log_density<R: Real<T>>(&self, theta: &[R; P]) -> R {
        whittle_loglik(self.model, theta, self.pgram) + self.prior.log_density(theta)
    }
}

/// Exact LGSS log-likelihood (states marginalized by the Kalman filter) plus
/// Gaussian prior.
pub struct KalmanPosterior<'a, T> {
    pub y: &'a [T],
    pub prior: &'a GaussianPrior<T, 3>,
}

impl<T: Scalar> LogDensity<T, 3> for KalmanPosterior<'_, T> {
    fn log_density<R: Real<T>>(&self, theta: &[R; 3]) -> R {
        kalman_loglik(theta, self.y) + self.prior.log_density(theta)
    }
}

/// Value and gradient of the Whittle log-posterior at `theta`.
pub fn log_posterior_whittle<T, M, const P: usize>(
    model: &M,
    theta: &[T; P],
    pgram: &Periodogram<T>,
    prior: &GaussianPrior<T, P>,
) -> Result<(T, [T; P])>
where
    T: Scalar,
    M: SpectralModel<T, P>,
{
    WhittlePosterior { model, pgram, prior }.value_grad(theta)
}

/// One leapfrog step for `L(θ)` with diagonal inverse mass:
/// `r½ = r + ε/2 ∇L(θ)`, `θ* = θ + ε M⁻¹ r½`, `r* = r½ + ε/2 ∇L(θ*)`.
pub fn leapfrog<T, G, const P: usize>(
    theta: &[T; P],
    r: &[T; P],
    epsilon: T,
    inv_mass: &[T; P],
    mut grad_fn: G,
) -> Result<([T; P], [T; P])>
where
    T: Scalar,
    G: FnMut(&[T; P]) -> Result<[T; P]>,
{
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let half = epsilon * T::lit(0.5);
    let g0 = grad_fn(theta)?;
    let r_half: [T; P] = std::array::from_fn(|i| r[i] + half * g0[i]);
    let theta_new: [T; P] = std::array::from_fn(|i| theta[i] + epsilon * inv_mass[i] * r_half[i]);
    let g1 = grad_fn(&theta_new)?;
    let r_new = std::array::from_fn(|i| r_half[i] + half * g1[i]);
    Ok((theta_new, r_new))
}

/// `½ rᵀ M⁻¹ r`.
pub fn kinetic_energy<T: Scalar, const P: usize>(r: &[T; P], inv_mass: &[T; P]) -> T {
    (0..P).fold(T::zero(), |acc, i| acc + r[i] * r[i] * inv_mass[i]) * T::lit(0.5)
}

/// Metropolis acceptance probability `min(1, exp(−ΔH))`; zero for divergent
/// or non-finite energy errors.
pub fn acceptance_probability<T: Scalar>(delta_h: T) -> T {
    if !delta_h.is_finite() || delta_h.abs() > T::lit(DIVERGENCE_THRESHOLD) {
        T::zero()
    } else if delta_h <= T::zero() {
        T::one()
    } else {
        (-delta_h).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HmcConfig {
    pub epsilon: f64,
    /// Leapfrog steps per iteration.
    pub n_leapfrog: usize,
    /// Kept iterations per chain.
    pub n_keep: usize,
    pub burnin: usize,
    pub n_chains: usize,
    /// Diagonal of the mass matrix; `None` uses the prior precision diagonal.
    pub mass_diag: Option<Vec<f64>>,
    pub seed: u64,
    /// Dual-averaging step-size tuning during burn-in.
    pub adapt_epsilon: bool,
    /// Re-estimate the diagonal mass from burn-in draws.
    pub adapt_mass: bool,
    pub target_accept: f64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            n_leapfrog: 20,
            n_keep: 10_000,
            burnin: 5_000,
            n_chains: 2,
            mass_diag: None,
            seed: 0,
            adapt_epsilon: true,
            adapt_mass: false,
            target_accept: 0.8,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.n_leapfrog == 0 {
            return Err(Error::InvalidInput("n_leapfrog must be >= 1".into()));
        }
        if self.n_keep == 0 {
            return Err(Error::InvalidInput("n_keep must be >= 1".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::InvalidInput("n_chains must be >= 1".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidInput("target_accept must lie in (0, 1)".into()));
        }
        if let Some(m) = &self.mass_diag {
            if m.len() != p {
                return Err(Error::InvalidInput(format!("mass_diag has {} entries, expected {p}", m.len())));
            }
            if m.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput("mass_diag entries must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chain<T> {
    /// Kept draws, one row per iteration, transformed scale.
    pub draws: Vec<Vec<T>>,
    pub log_post: Vec<T>,
    /// Fraction of kept iterations whose proposal was accepted.
    pub accept_rate: f64,
    pub divergences: usize,
    /// Step size used for the kept iterations.
    pub epsilon: T,
    pub mass_diag: Vec<T>,
}

impl<T: Scalar> Chain<T> {
    pub fn column(&self, j: usize) -> Vec<T> {
        self.draws.iter().map(|d| d[j]).collect()
    }
}

/// Dual-averaging step-size adaptation.
struct DualAveraging {
    mu: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
    t: f64,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * eps).ln(),
            h_bar: 0.0,
            log_eps: eps.ln(),
            log_eps_bar: 0.0,
            t: 0.0,
            target,
        }
    }

    fn update(&mut self, accept_prob: f64) -> f64 {
        self.t += 1.0;
        let w = 1.0 / (self.t + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_prob);
        self.log_eps = self.mu - self.t.sqrt() / Self::GAMMA * self.h_bar;
        let eta = self.t.powf(-Self::KAPPA);
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar;
        self.log_eps.exp()
    }

    fn final_epsilon(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

struct Position<T, const P: usize> {
    theta: [T; P],
    log_post: T,
    grad: [T; P],
}

struct Transition<T, const P: usize> {
    next: Option<Position<T, P>>,
    accept_prob: T,
    divergent: bool,
}

fn transition<T, D, const P: usize>(
    target: &D,
    current: &Position<T, P>,
    epsilon: T,
    n_leapfrog: usize,
    mass: &[T; P],
    inv_mass: &[T; P],
    rng: &mut Rng,
) -> Transition<T, P>
where
    T: Scalar,
    D: LogDensity<T, P>,
{
    let r0: [T; P] = std::array::from_fn(|i| mass[i].sqrt() * rng::normal::<T>(rng));
    let u: T = rng::uniform(rng);
    let h0 = -current.log_post + kinetic_energy(&r0, inv_mass);
    let half = epsilon * T::lit(0.5);

    let mut theta = current.theta;
    let mut r: [T; P] = std::array::from_fn(|i| r0[i] + half * current.grad[i]);
    let mut end = None;
    for step in 0..n_leapfrog {
        for i in 0..P {
            theta[i] = theta[i] + epsilon * inv_mass[i] * r[i];
        }
        let Ok((lp, g)) = target.value_grad(&theta) else {
            break;
        };
        let w = if step + 1 == n_leapfrog { half } else { epsilon };
        for i in 0..P {
            r[i] = r[i] + w * g[i];
        }
        if step + 1 == n_leapfrog {
            end = Some((lp, g));
        }
    }
    let Some((log_post, grad)) = end else {
        return Transition {
            next: None,
            accept_prob: T::zero(),
            divergent: true,
        };
    };
    let h1 = -log_post + kinetic_energy(&r, inv_mass);
    let delta_h = h1 - h0;
    let divergent = !delta_h.is_finite() || delta_h.abs() > T::lit(DIVERGENCE_THRESHOLD);
    let accept_prob = acceptance_probability(delta_h);
    let next = (u < accept_prob).then_some(Position { theta, log_post, grad });
    Transition {
        next,
        accept_prob,
        divergent,
    }
}

fn initial_position<T, D, const P: usize>(
    target: &D,
    prior: &GaussianPrior<T, P>,
    rng: &mut Rng,
) -> Result<Position<T, P>>
where
    T: Scalar,
    D: LogDensity<T, P>,
{
    const MAX_TRIES: usize = 100;
    for _ in 0..MAX_TRIES {
        let theta = prior.sample(rng);
        if let Ok((log_post, grad)) = target.value_grad(&theta) {
            return Ok(Position { theta, log_post, grad });
        }
    }
    Err(Error::NonFinite(format!(
        "target not finite at {MAX_TRIES} initial draws from the prior"
    )))
}

/// Regularized variance estimate, shrunk towards `1e-3`.
fn regularized_variance<T: Scalar>(xs: &[T]) -> T {
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / (n - T::one());
    let five = T::lit(5.0);
    (n / (n + five)) * var + T::lit(1e-3) * (five / (n + five))
}

fn run_chain<T, D, const P: usize>(
    target: &D,
    prior: &GaussianPrior<T, P>,
    config: &HmcConfig,
    mut rng: Rng,
) -> Result<Chain<T>>
where
    T: Scalar,
    D: LogDensity<T, P>,
{
    let mut mass: [T; P] = match &config.mass_diag {
        Some(m) => std::array::from_fn(|i| T::lit(m[i])),
        None => linalg::diagonal(prior.precision()),
    };
    let mut inv_mass = mass.map(|m| T::one() / m);
    let mut current = initial_position(target, prior, &mut rng)?;
    let mut epsilon = T::lit(config.epsilon);
    let mut averaging = DualAveraging::new(config.epsilon, config.target_accept);

    // Mass is estimated from the middle of burn-in, after which step-size
    // adaptation restarts.
    let window = (config.burnin * 15 / 100, config.burnin * 75 / 100);
    let mut window_draws: Vec<[T; P]> = Vec::new();

    for it in 0..config.burnin {
        let tr = transition(target, &current, epsilon, config.n_leapfrog, &mass, &inv_mass, &mut rng);
        if let Some(next) = tr.next {
            current = next;
        }
        if config.adapt_epsilon {
            epsilon = T::lit(averaging.update(tr.accept_prob.as_f64()));
        }
        if config.adapt_mass && it >= window.0 && it < window.1 {
            window_draws.push(current.theta);
            if it + 1 == window.1 && window_draws.len() >= 10 {
                inv_mass = std::array::from_fn(|i| {
                    regularized_variance(&window_draws.iter().map(|d| d[i]).collect::<Vec<_>>())
                });
                mass = inv_mass.map(|v| T::one() / v);
                let restart = if config.adapt_epsilon { epsilon.as_f64() } else { config.epsilon };
                averaging = DualAveraging::new(restart, config.target_accept);
            }
        }
    }
    if config.adapt_epsilon && config.burnin > 0 {
        epsilon = T::lit(averaging.final_epsilon());
    }

    let mut draws = Vec::with_capacity(config.n_keep);
    let mut log_post = Vec::with_capacity(config.n_keep);
    let mut accepted = 0usize;
    let mut divergences = 0usize;
    for _ in 0..config.n_keep {
        let tr = transition(target, &current, epsilon, config.n_leapfrog, &mass, &inv_mass, &mut rng);
        if tr.divergent {
            divergences += 1;
        }
        if let Some(next) = tr.next {
            current = next;
            accepted += 1;
        }
        draws.push(current.theta.to_vec());
        log_post.push(current.log_post);
    }
    Ok(Chain {
        draws,
        log_post,
        accept_rate: accepted as f64 / config.n_keep as f64,
        divergences,
        epsilon,
        mass_diag: mass.to_vec(),
    })
}

/// Runs `n_chains` independent chains, each on its own random stream derived
/// from `config.seed`, starting from a prior draw.
pub fn run_hmc<T, D, const P: usize>(
    target: &D,
    prior: &GaussianPrior<T, P>,
    config: &HmcConfig,
) -> Result<Vec<Chain<T>>>
where
    T: Scalar,
    D: LogDensity<T, P>,
{
    config.validate(P)?;
    (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(target, prior, config, rng::stream(config.seed, &[c as u64])))
        .collect()
}
