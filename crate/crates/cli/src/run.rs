//! Engine dispatch: data in, posterior draws and diagnostics out.

use std::time::Instant;

use whittle_core::diagnostics::ess_chains;
use whittle_core::hmc::{run_hmc, Chain, KalmanPosterior, WhittlePosterior};
use whittle_core::models::estimate_mu_kappa;
use whittle_core::rvga::run_rvga_whittle;
use whittle_core::sim::simulate;
use whittle_core::spectral::{compute_periodogram, find_cutoff, welch_smooth};
use whittle_core::{
    rng, BivariateSv, BlockPlan, Family, Lgss, Periodogram, SmoothedSpectrum, SpectralModel, TimeSeries,
    UnivariateSv,
};

use crate::config::{DataSource, Engine, RunConfig};
use crate::data::load_series;
use crate::error::{CliError, Result};

/// Stream tag for draws from the final variational Gaussian, distinct from
/// the per-update Monte Carlo streams.
pub const DRAW_STREAM: u64 = 0xD4A5;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub index: usize,
    pub kind: &'static str,
    pub mu: Vec<f64>,
    pub sigma_diag: Vec<f64>,
    pub retries: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainInfo {
    pub accept_rate: f64,
    pub divergences: usize,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultBundle {
    pub family: Family,
    pub engine: Engine,
    /// Transformed names followed by natural names.
    pub names: Vec<String>,
    pub n_transformed: usize,
    /// One row per draw, laid out like `names`.
    pub draws: Vec<Vec<f64>>,
    /// Chain of each draw (always 0 for variational draws).
    pub chain: Vec<usize>,
    pub trajectory: Vec<TrajectoryRow>,
    pub plan: Option<BlockPlan>,
    pub chains: Vec<ChainInfo>,
    /// Multi-chain ESS per column; empty for independent variational draws.
    pub ess: Vec<f64>,
    pub kappa: Option<f64>,
    pub n_obs: usize,
    pub seconds: f64,
    pub config_echo: String,
}

impl ResultBundle {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|r| r[j]).collect()
    }
}

/// Loads or simulates the configured series and checks its dimension.
pub fn load_data(cfg: &RunConfig) -> Result<TimeSeries<f64>> {
    let y = match &cfg.data {
        None => return Err(CliError::Config("no data: set `data` or `sim.*` keys".into())),
        Some(DataSource::File { path, mode }) => load_series(path, *mode)?,
        Some(DataSource::Simulate(spec)) => simulate(spec).map_err(CliError::config)?,
    };
    if y.dim() != cfg.family.dim() {
        return Err(CliError::Data(format!(
            "family {} expects {} column(s), data has {}",
            cfg.family,
            cfg.family.dim(),
            y.dim()
        )));
    }
    Ok(y)
}

/// The series each family's Whittle likelihood is built on, with its
/// periodogram, Welch spectrum and update plan.
pub struct SpectralReport {
    pub prepared: TimeSeries<f64>,
    pub periodogram: Periodogram<f64>,
    pub smoothed: SmoothedSpectrum<f64>,
    pub cutoff: usize,
    pub plan: BlockPlan,
}

pub fn spectral_report(cfg: &RunConfig, y: &TimeSeries<f64>) -> Result<SpectralReport> {
    let prepared = match cfg.family {
        Family::Lgss => Lgss.prepare(y),
        Family::Sv1 => UnivariateSv::default().prepare(y),
        Family::Bsv => BivariateSv.prepare(y),
    }
    .map_err(CliError::engine)?;
    let periodogram = compute_periodogram(&prepared).map_err(CliError::engine)?;
    let smoothed = welch_smooth(&prepared, &cfg.rvga.welch).map_err(CliError::engine)?;
    let cutoff = find_cutoff(&smoothed, cfg.rvga.cutoff_ratio);
    let plan = whittle_core::rvga::plan_updates(&prepared, &cfg.rvga).map_err(CliError::engine)?;
    Ok(SpectralReport { prepared, periodogram, smoothed, cutoff, plan })
}

struct Fitted<const P: usize> {
    theta: Vec<[f64; P]>,
    chain: Vec<usize>,
    trajectory: Vec<TrajectoryRow>,
    plan: Option<BlockPlan>,
    chains: Vec<ChainInfo>,
    ess: Vec<f64>,
    seconds: f64,
}

fn from_chains<const P: usize>(chains: Vec<Chain<f64>>, seconds: f64) -> Result<Fitted<P>> {
    let mut theta = Vec::new();
    let mut chain = Vec::new();
    for (c, ch) in chains.iter().enumerate() {
        for d in &ch.draws {
            let row: [f64; P] = d.as_slice().try_into().map_err(|_| CliError::Numerical("draw width".into()))?;
            theta.push(row);
            chain.push(c);
        }
    }
    let info = chains
        .iter()
        .map(|c| ChainInfo { accept_rate: c.accept_rate, divergences: c.divergences, epsilon: c.epsilon })
        .collect();
    Ok(Fitted { theta, chain, trajectory: Vec::new(), plan: None, chains: info, ess: Vec::new(), seconds })
}

fn fit<M: SpectralModel<f64, P>, const P: usize>(model: &M, y: &TimeSeries<f64>, cfg: &RunConfig) -> Result<Fitted<P>> {
    let prior = cfg.prior::<P>()?;
    match cfg.engine {
        Engine::RvgaWhittle => {
            let start = Instant::now();
            let init = prior.to_variational().map_err(CliError::config)?;
            let out = run_rvga_whittle(model, y, &init, &cfg.rvga).map_err(CliError::engine)?;
            let seconds = start.elapsed().as_secs_f64();
            let mut r = rng::stream(cfg.seed, &[DRAW_STREAM]);
            let theta = out.state.sample_n(cfg.n_draws, &mut r);
            let trajectory = out
                .trajectory
                .iter()
                .map(|e| TrajectoryRow {
                    index: e.index,
                    kind: e.kind.as_str(),
                    mu: e.mu.to_vec(),
                    sigma_diag: e.sigma_diag.to_vec(),
                    retries: e.retries,
                })
                .collect();
            Ok(Fitted {
                chain: vec![0; theta.len()],
                theta,
                trajectory,
                plan: Some(out.plan),
                chains: Vec::new(),
                ess: Vec::new(),
                seconds,
            })
        }
        Engine::HmcWhittle => {
            let start = Instant::now();
            let z = model.prepare(y).map_err(CliError::engine)?;
            let pgram = compute_periodogram(&z).map_err(CliError::engine)?;
            let target = WhittlePosterior { model, pgram: &pgram, prior: &prior };
            let chains = run_hmc(&target, &prior, &cfg.hmc).map_err(CliError::engine)?;
            from_chains(chains, start.elapsed().as_secs_f64())
        }
        Engine::HmcExact => Err(CliError::Config(format!(
            "engine hmc-exact is only available for family lgss, not {}",
            cfg.family
        ))),
    }
}

fn fit_exact(y: &TimeSeries<f64>, cfg: &RunConfig) -> Result<Fitted<3>> {
    let prior = cfg.prior::<3>()?;
    let col = y.column(0);
    let start = Instant::now();
    let chains = run_hmc(&KalmanPosterior { y: &col, prior: &prior }, &prior, &cfg.hmc).map_err(CliError::engine)?;
    from_chains(chains, start.elapsed().as_secs_f64())
}

fn assemble<M: SpectralModel<f64, P>, const P: usize>(
    model: &M,
    fitted: Fitted<P>,
    cfg: &RunConfig,
    n_obs: usize,
    kappa: Option<f64>,
) -> Result<ResultBundle> {
    let mut names: Vec<String> = model.param_names().iter().map(|s| s.to_string()).collect();
    names.extend(model.natural_names().iter().map(|s| s.to_string()));
    let draws = fitted
        .theta
        .iter()
        .map(|t| {
            let natural = model.natural_from_theta(t).map_err(CliError::engine)?;
            Ok(t.iter().copied().chain(natural).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut bundle = ResultBundle {
        family: cfg.family,
        engine: cfg.engine,
        names,
        n_transformed: P,
        draws,
        chain: fitted.chain,
        trajectory: fitted.trajectory,
        plan: fitted.plan,
        chains: fitted.chains,
        ess: fitted.ess,
        kappa,
        n_obs,
        seconds: fitted.seconds,
        config_echo: cfg.source.clone(),
    };
    if !bundle.chains.is_empty() {
        bundle.ess = ess_by_chain(&bundle.draws, &bundle.chain)?;
    }
    Ok(bundle)
}

/// Multi-chain ESS of every column, with draws grouped by chain label.
pub fn ess_by_chain(draws: &[Vec<f64>], chain: &[usize]) -> Result<Vec<f64>> {
    let n_chains = chain.iter().max().map_or(0, |m| m + 1);
    let width = draws.first().map_or(0, Vec::len);
    (0..width)
        .map(|j| {
            let cols: Vec<Vec<f64>> = (0..n_chains)
                .map(|c| draws.iter().zip(chain).filter(|(_, &k)| k == c).map(|(r, _)| r[j]).collect())
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            ess_chains(&refs).map_err(CliError::data)
        })
        .collect()
}

/// Runs the configured engine end to end.
pub fn run(cfg: &RunConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let y = load_data(cfg)?;
    let n = y.n_obs();
    match (cfg.family, cfg.engine) {
        (Family::Lgss, Engine::HmcExact) => assemble(&Lgss, fit_exact(&y, cfg)?, cfg, n, None),
        (Family::Lgss, _) => assemble(&Lgss, fit(&Lgss, &y, cfg)?, cfg, n, None),
        (Family::Sv1, _) => {
            let (_, kappa) = estimate_mu_kappa(&y).map_err(CliError::engine)?;
            let model = UnivariateSv { kappa };
            assemble(&model, fit(&model, &y, cfg)?, cfg, n, Some(kappa))
        }
        (Family::Bsv, _) => assemble(&BivariateSv, fit(&BivariateSv, &y, cfg)?, cfg, n, None),
    }
}
