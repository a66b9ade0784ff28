//! Sequential Gaussian variational approximation driven by the Whittle
//! likelihood.
//!
//! The posterior approximation `q = N(μ, Σ)` is updated once per frequency
//! with Monte Carlo estimates of the expected gradient and Hessian of that
//! frequency's log-likelihood contribution:
//!
//! ```text
//! Σ_new⁻¹ = Σ⁻¹ − a E_q[∇²ℓ_k]
//! μ_new   = μ + a Σ_new E_q[∇ℓ_k]
//! ```
//!
//! The first `n_damp` frequencies are split into `D` sub-steps with `a = 1/D`.
//! Frequencies past the spectral cutoff are folded into blocks, each block
//! contributing one update with the summed log-likelihood.

use rayon::prelude::*;

use crate::autodiff::SecondOrder;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::models::{whittle_loglik_block, whittle_loglik_freq, SpectralModel};
use crate::rng::{self, Rng};
use crate::spectral::{
    compute_periodogram, find_cutoff, make_block_plan, welch_smooth, BlockPlan, Periodogram, TimeSeries,
    WelchConfig,
};
use crate::Scalar;

/// Gaussian `N(μ, Σ)` with cached precision and Cholesky factor of `Σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalState<T, const P: usize> {
    mu: [T; P],
    sigma: Matrix<T, P>,
    precision: Matrix<T, P>,
    chol_sigma: Matrix<T, P>,
}

impl<T: Scalar, const P: usize> VariationalState<T, P> {
    pub fn new(mu: [T; P], sigma: Matrix<T, P>) -> Result<Self> {
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("variational mean".into()));
        }
        let sigma = linalg::symmetrize(&sigma);
        let chol_sigma =
            linalg::cholesky(&sigma).ok_or_else(|| Error::NotPositiveDefinite("covariance".into()))?;
        let precision = linalg::chol_inverse(&chol_sigma);
        Ok(Self {
            mu,
            sigma,
            precision,
            chol_sigma,
        })
    }

    pub fn from_precision(mu: [T; P], precision: Matrix<T, P>) -> Result<Self> {
        let precision = linalg::symmetrize(&precision);
        let chol_prec =
            linalg::cholesky(&precision).ok_or_else(|| Error::NotPositiveDefinite("precision".into()))?;
        let sigma = linalg::chol_inverse(&chol_prec);
        let chol_sigma =
            linalg::cholesky(&sigma).ok_or_else(|| Error::NotPositiveDefinite("covariance".into()))?;
        Ok(Self {
            mu,
            sigma,
            precision,
            chol_sigma,
        })
    }

    /// Independent components with the given standard deviations.
    pub fn diagonal(mu: [T; P], variances: [T; P]) -> Result<Self> {
        Self::new(mu, linalg::diag(&variances))
    }

    pub fn mu(&self) -> &[T; P] {
        &self.mu
    }

    pub fn sigma(&self) -> &Matrix<T, P> {
        &self.sigma
    }

    pub fn precision(&self) -> &Matrix<T, P> {
        &self.precision
    }

    pub fn chol_sigma(&self) -> &Matrix<T, P> {
        &self.chol_sigma
    }

    pub fn sd(&self) -> [T; P] {
        linalg::diagonal(&self.sigma).map(|v| v.sqrt())
    }

    /// `μ + L z`.
    pub fn point(&self, z: &[T; P]) -> [T; P] {
        let lz = linalg::mat_vec(&self.chol_sigma, z);
        std::array::from_fn(|i| self.mu[i] + lz[i])
    }

    pub fn sample(&self, rng: &mut Rng) -> [T; P] {
        let z: [T; P] = std::array::from_fn(|_| rng::normal(rng));
        self.point(&z)
    }

    pub fn sample_n(&self, n: usize, rng: &mut Rng) -> Vec<[T; P]> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RvgaConfig {
    /// Monte Carlo draws per expectation.
    pub n_samples: usize,
    /// Number of leading frequencies updated with damping.
    pub n_damp: usize,
    /// Sub-steps per damped frequency.
    pub damping_steps: usize,
    /// Power ratio defining the blocking cutoff (0.5 is the 3dB point).
    pub cutoff_ratio: f64,
    /// Target block length; `None` updates every frequency individually.
    pub block_size: Option<usize>,
    pub welch: WelchConfig,
    pub master_seed: u64,
    /// Maximum step-halving depth when an update loses positive definiteness.
    pub max_retries: usize,
    /// Evaluate Monte Carlo draws on the rayon pool.
    pub parallel: bool,
}

impl Default for RvgaConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_damp: 5,
            damping_steps: 100,
            cutoff_ratio: 0.5,
            block_size: Some(100),
            welch: WelchConfig::default(),
            master_seed: 0,
            max_retries: 8,
            parallel: false,
        }
    }
}

impl RvgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidInput("n_samples must be >= 1".into()));
        }
        if self.damping_steps == 0 {
            return Err(Error::InvalidInput("damping_steps must be >= 1".into()));
        }
        if self.block_size == Some(0) {
            return Err(Error::InvalidInput("block_size must be >= 1".into()));
        }
        if !(self.cutoff_ratio > 0.0 && self.cutoff_ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "cutoff_ratio must lie in (0, 1), got {}",
                self.cutoff_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateKind {
    Individual,
    Block,
}

impl UpdateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateKind::Individual => "individual",
            UpdateKind::Block => "block",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEntry<T, const P: usize> {
    /// 1-based outer update index.
    pub index: usize,
    pub kind: UpdateKind,
    pub mu: [T; P],
    pub sigma_diag: [T; P],
    pub retries: usize,
}

pub type Trajectory<T, const P: usize> = Vec<TrajectoryEntry<T, P>>;

#[derive(Clone, Debug)]
pub struct RvgaOutput<T, const P: usize> {
    pub state: VariationalState<T, P>,
    pub trajectory: Trajectory<T, P>,
    pub plan: BlockPlan,
}

/// Monte Carlo estimates of `E_q[∇ℓ]` and `E_q[∇²ℓ]` from `n_samples` draws
/// `θ = μ + L z`.
///
/// Draws are generated sequentially from `rng`; evaluation may run on the
/// rayon pool but the reduction always follows sample order.
pub fn mc_grad_hess_expectation<T, F, const P: usize>(
    state: &VariationalState<T, P>,
    loglik: F,
    n_samples: usize,
    rng: &mut Rng,
    parallel: bool,
) -> Result<([T; P], Matrix<T, P>)>
where
    T: Scalar,
    F: Fn(&[SecondOrder<T, P>; P]) -> SecondOrder<T, P> + Sync,
{
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be >= 1".into()));
    }
    let thetas: Vec<[T; P]> = state.sample_n(n_samples, rng);
    let eval = |theta: &[T; P]| loglik(&SecondOrder::seed(theta));
    let evals: Vec<SecondOrder<T, P>> = if parallel {
        thetas.par_iter().map(eval).collect()
    } else {
        thetas.iter().map(eval).collect()
    };
    let mut g = [T::zero(); P];
    let mut h = linalg::zeros::<T, P>();
    for (theta, e) in thetas.iter().zip(&evals) {
        if !e.is_finite() {
            return Err(Error::NonFiniteGradient {
                theta: theta.iter().map(|t| t.as_f64()).collect(),
            });
        }
        for i in 0..P {
            g[i] = g[i] + e.grad[i];
            for j in 0..P {
                h[i][j] = h[i][j] + e.hess[i][j];
            }
        }
    }
    let inv = T::one() / T::from_usize_lossy(n_samples);
    Ok((g.map(|v| v * inv), linalg::scale(&h, inv)))
}

/// One (possibly damped) update: precision first, then the mean with the
/// updated covariance.
pub fn rvga_update<T: Scalar, const P: usize>(
    state: &VariationalState<T, P>,
    gbar: &[T; P],
    hbar: &Matrix<T, P>,
    a: T,
) -> Result<VariationalState<T, P>> {
    let unchanged_precision = hbar.iter().flatten().all(|h| *h == T::zero());
    let (sigma, precision, chol_sigma) = if unchanged_precision {
        (state.sigma, state.precision, state.chol_sigma)
    } else {
        let precision = linalg::symmetrize(&linalg::sub(&state.precision, &linalg::scale(hbar, a)));
        let chol_prec = linalg::cholesky(&precision)
            .ok_or_else(|| Error::NotPositiveDefinite("updated precision".into()))?;
        let sigma = linalg::chol_inverse(&chol_prec);
        let chol_sigma = linalg::cholesky(&sigma)
            .ok_or_else(|| Error::NotPositiveDefinite("updated covariance".into()))?;
        (sigma, precision, chol_sigma)
    };
    let step = linalg::mat_vec(&sigma, gbar);
    let mu = std::array::from_fn(|i| state.mu[i] + a * step[i]);
    if mu.iter().any(|m: &T| !m.is_finite()) {
        return Err(Error::NonFinite("updated mean".into()));
    }
    Ok(VariationalState {
        mu,
        sigma,
        precision,
        chol_sigma,
    })
}

struct Stepper<'c> {
    config: &'c RvgaConfig,
}

impl Stepper<'_> {
    /// Applies weight `a` of `loglik`. When the precision loses positive
    /// definiteness the step is split into two half-weight steps with fresh
    /// draws, recursively up to `max_retries` levels. Returns the number of
    /// halvings used.
    fn step<T, F, const P: usize>(
        &self,
        state: &VariationalState<T, P>,
        loglik: &F,
        a: T,
        stream: [u64; 3],
        depth: usize,
    ) -> std::result::Result<(VariationalState<T, P>, usize), Error>
    where
        T: Scalar,
        F: Fn(&[SecondOrder<T, P>; P]) -> SecondOrder<T, P> + Sync,
    {
        let mut rng = rng::stream(self.config.master_seed, &stream);
        let (g, h) = mc_grad_hess_expectation(state, loglik, self.config.n_samples, &mut rng, self.config.parallel)?;
        match rvga_update(state, &g, &h, a) {
            Ok(next) => Ok((next, 0)),
            Err(Error::NotPositiveDefinite(_)) if depth < self.config.max_retries => {
                let half = a / T::lit(2.0);
                let [u, l, path] = stream;
                let (mid, r1) = self.step(state, loglik, half, [u, l, 2 * path + 1], depth + 1)?;
                let (end, r2) = self.step(&mid, loglik, half, [u, l, 2 * path + 2], depth + 1)?;
                Ok((end, 1 + r1 + r2))
            }
            Err(Error::NotPositiveDefinite(_)) => Err(Error::UpdateFailed {
                update: stream[0] as usize,
                retries: depth,
            }),
            Err(e) => Err(e),
        }
    }
}

/// Number of individually updated frequencies and block plan for a prepared
/// series: Welch-smoothed spectrum, cutoff at `cutoff_ratio`, then balanced
/// blocks. The individual prefix always covers the damped frequencies.
pub fn plan_updates<T: Scalar>(z: &TimeSeries<T>, config: &RvgaConfig) -> Result<BlockPlan> {
    let k_max = crate::spectral::retained_len(z.n_obs());
    let Some(block_size) = config.block_size else {
        return make_block_plan(k_max, k_max, 1);
    };
    let smooth = welch_smooth(z, &config.welch)?;
    let cutoff = find_cutoff(&smooth, T::lit(config.cutoff_ratio));
    let n_individual = cutoff.max(config.n_damp.min(k_max));
    make_block_plan(k_max, n_individual, block_size)
}

/// Runs the recursion over a given periodogram and plan.
pub fn run_rvga_on_periodogram<T, M, const P: usize>(
    model: &M,
    pgram: &Periodogram<T>,
    plan: &BlockPlan,
    prior: &VariationalState<T, P>,
    config: &RvgaConfig,
) -> Result<RvgaOutput<T, P>>
where
    T: Scalar,
    M: SpectralModel<T, P>,
{
    config.validate()?;
    if pgram.dim() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "periodogram dimension {} does not match model dimension {}",
            pgram.dim(),
            model.dim()
        )));
    }
    let stepper = Stepper { config };
    let mut state = prior.clone();
    let mut trajectory = Vec::with_capacity(plan.total_updates());
    let damp_weight = T::one() / T::from_usize_lossy(config.damping_steps);

    let record = |trajectory: &mut Trajectory<T, P>, state: &VariationalState<T, P>, kind, retries| {
        trajectory.push(TrajectoryEntry {
            index: trajectory.len() + 1,
            kind,
            mu: state.mu,
            sigma_diag: linalg::diagonal(&state.sigma),
            retries,
        });
    };

    for k in 1..=plan.n_individual {
        let freq = pgram.freq(k);
        let ord = pgram.ordinate(k);
        let loglik = |theta: &[SecondOrder<T, P>; P]| whittle_loglik_freq(model, theta, freq, &ord);
        let mut retries = 0;
        if k <= config.n_damp {
            for l in 0..config.damping_steps {
                let (next, r) = stepper.step(&state, &loglik, damp_weight, [k as u64, l as u64, 0], 0)?;
                state = next;
                retries += r;
            }
        } else {
            let (next, r) = stepper.step(&state, &loglik, T::one(), [k as u64, 0, 0], 0)?;
            state = next;
            retries = r;
        }
        record(&mut trajectory, &state, UpdateKind::Individual, retries);
    }

    for (b, block) in plan.blocks.iter().enumerate() {
        let update = plan.n_individual + b + 1;
        let loglik =
            |theta: &[SecondOrder<T, P>; P]| whittle_loglik_block(model, theta, block.clone(), pgram);
        let (next, retries) = stepper.step(&state, &loglik, T::one(), [update as u64, 0, 0], 0)?;
        state = next;
        record(&mut trajectory, &state, UpdateKind::Block, retries);
    }

    Ok(RvgaOutput {
        state,
        trajectory,
        plan: plan.clone(),
    })
}

/// Full pipeline from raw observations: model-specific preparation,
/// periodogram, cutoff and block plan, then the damped/blocked recursion.
pub fn run_rvga_whittle<T, M, const P: usize>(
    model: &M,
    y: &TimeSeries<T>,
    prior: &VariationalState<T, P>,
    config: &RvgaConfig,
) -> Result<RvgaOutput<T, P>>
where
    T: Scalar,
    M: SpectralModel<T, P>,
{
    config.validate()?;
    let z = model.prepare(y)?;
    let pgram = compute_periodogram(&z)?;
    let plan = plan_updates(&z, config)?;
    run_rvga_on_periodogram(model, &pgram, &plan, prior, config)
}
