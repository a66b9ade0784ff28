//! Command-line driver for Whittle-likelihood inference: configuration,
//! data loading, engine dispatch and result files.

pub mod config;
pub mod data;
pub mod error;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

use whittle_core::diagnostics::summarize;
use whittle_core::sim::simulate as simulate_series;

pub use config::{Engine, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, ResultBundle};

use crate::config::DataSource;
use crate::report::DrawsFile;

/// Output directory when neither `--out` nor `out` is given.
pub const DEFAULT_OUT: &str = "whittle-out";

pub fn out_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Simulates the configured series into `dir/data.csv`.
pub fn simulate_to(cfg: &RunConfig, seed: Option<u64>, dir: &Path) -> Result<PathBuf> {
    let Some(DataSource::Simulate(spec)) = &cfg.data else {
        return Err(CliError::Config("simulate needs `sim.*` keys in the configuration".into()));
    };
    let mut spec = spec.clone();
    if let Some(s) = seed {
        spec.seed = s;
    }
    let y = simulate_series(&spec).map_err(CliError::config)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("data.csv");
    data::write_series(&path, &y)?;
    Ok(path)
}

/// Writes the periodogram and Welch spectrum of the prepared series.
pub fn periodogram_to(cfg: &RunConfig, dir: &Path) -> Result<run::SpectralReport> {
    let y = run::load_data(cfg)?;
    let report = run::spectral_report(cfg, &y)?;
    report::write_spectral(&report, dir)?;
    Ok(report)
}

/// Runs the engine and writes the result files.
pub fn fit_to(cfg: &RunConfig, dir: &Path) -> Result<ResultBundle> {
    let bundle = run(cfg)?;
    report::write_bundle(&bundle, dir)?;
    Ok(bundle)
}

/// ESS of every parameter column of a draws file. Chains come from the
/// `chain` column, or from splitting into `n_chains` equal runs when given.
pub fn ess_report(path: &Path, n_chains: Option<usize>) -> Result<Vec<(String, f64)>> {
    let file = DrawsFile::read(path)?;
    let n = file.columns[0].len();
    let labels: Vec<usize> = match (n_chains, file.get("chain")) {
        (Some(0), _) => return Err(CliError::Config("--chains must be >= 1".into())),
        (Some(c), _) => {
            if n % c != 0 {
                return Err(CliError::Data(format!("{n} draws do not split into {c} equal chains")));
            }
            (0..n).map(|i| i / (n / c)).collect()
        }
        (None, Some(col)) => col.iter().map(|&c| c as usize).collect(),
        (None, None) => vec![0; n],
    };
    file.parameters()
        .map(|(name, col)| {
            let rows: Vec<Vec<f64>> = col.iter().map(|&v| vec![v]).collect();
            Ok((name.to_string(), run::ess_by_chain(&rows, &labels)?[0]))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub name: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub sd_a: f64,
    pub sd_b: f64,
    /// `(mean_a − mean_b) / sqrt((sd_a² + sd_b²) / 2)`.
    pub z: f64,
}

/// Compares posterior means of the parameter columns both files share.
pub fn compare(a: &Path, b: &Path) -> Result<Vec<Comparison>> {
    let fa = DrawsFile::read(a)?;
    let fb = DrawsFile::read(b)?;
    let out: Vec<Comparison> = fa
        .parameters()
        .filter_map(|(name, ca)| fb.get(name).map(|cb| (name, ca, cb)))
        .map(|(name, ca, cb)| {
            let sa = summarize(ca).map_err(CliError::data)?;
            let sb = summarize(cb).map_err(CliError::data)?;
            let pooled = ((sa.sd * sa.sd + sb.sd * sb.sd) / 2.0).sqrt();
            Ok(Comparison {
                name: name.to_string(),
                mean_a: sa.mean,
                mean_b: sb.mean,
                sd_a: sa.sd,
                sd_b: sb.sd,
                z: (sa.mean - sb.mean) / pooled,
            })
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(CliError::Data("the draws files share no parameter columns".into()));
    }
    Ok(out)
}
