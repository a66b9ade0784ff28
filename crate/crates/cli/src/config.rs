//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment. Values are scalars, bracketed
//! comma lists (`[0, -1, -1]`), or row-major matrices (`[[1, 0], [0, 1]]`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use whittle_core::hmc::HmcConfig;
use whittle_core::models::{BsvParams, LgssParams, SvParams};
use whittle_core::sim::{SimModel, SimSpec};
use whittle_core::spectral::{WelchConfig, Window};
use whittle_core::{Family, GaussianPrior, RvgaConfig};

use crate::data::DataMode;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Atom(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(s) => f.write_str(s),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Parses one value. Lists nest to any depth; atoms are kept as text.
pub fn parse_value(text: &str) -> std::result::Result<Value, String> {
    let mut chars = text.trim().chars().peekable();
    let v = parse_item(&mut chars)?;
    if chars.any(|c| !c.is_whitespace()) {
        return Err(format!("trailing characters after value in `{text}`"));
    }
    Ok(v)
}

fn parse_item(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> std::result::Result<Value, String> {
    while chars.next_if(|c| c.is_whitespace()).is_some() {}
    if chars.next_if_eq(&'[').is_none() {
        let atom: String = std::iter::from_fn(|| chars.next_if(|c| !matches!(c, ',' | ']'))).collect();
        let atom = atom.trim();
        if atom.is_empty() {
            return Err("empty value".into());
        }
        return Ok(Value::Atom(atom.to_string()));
    }
    let mut items = Vec::new();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        if chars.next_if_eq(&']').is_some() {
            return Ok(Value::List(items));
        }
        items.push(parse_item(chars)?);
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        match chars.next() {
            Some(',') => {}
            Some(']') => return Ok(Value::List(items)),
            Some(c) => return Err(format!("unexpected `{c}` in list")),
            None => return Err("unterminated list".into()),
        }
    }
}

/// Parsed entries with their line numbers. Entries are consumed as they are
/// read so that leftovers can be reported as unknown keys.
#[derive(Clone, Debug, Default)]
pub struct Entries {
    map: BTreeMap<String, (usize, Value)>,
}

impl Entries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_string();
            let value = parse_value(value).map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
            if map.insert(key.clone(), (i + 1, value)).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { map })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<(usize, Value)> {
        self.map.remove(key)
    }

    fn bad(key: &str, line: usize, what: &str, v: &Value) -> CliError {
        CliError::Config(format!("line {line}: `{key}` expects {what}, got `{v}`"))
    }

    pub fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some((_, Value::Atom(s))) => Ok(Some(s)),
            Some((line, v)) => Err(Self::bad(key, line, "a scalar", &v)),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => match &v {
                Value::Atom(s) => s.parse().map(Some).map_err(|_| Self::bad(key, line, what, &v)),
                _ => Err(Self::bad(key, line, what, &v)),
            },
        }
    }

    pub fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, "a number")
    }

    pub fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.parsed(key, "a non-negative integer")
    }

    pub fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.parsed(key, "a non-negative integer")
    }

    pub fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.parsed(key, "true or false")
    }

    pub fn vector(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => as_vector(&v).map(Some).ok_or_else(|| Self::bad(key, line, "a list of numbers", &v)),
        }
    }

    pub fn matrix(&mut self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => {
                let rows = match &v {
                    Value::List(rows) => rows.iter().map(as_vector).collect::<Option<Vec<_>>>(),
                    _ => None,
                };
                rows.map(Some).ok_or_else(|| Self::bad(key, line, "a matrix `[[..], [..]]`", &v))
            }
        }
    }

    /// Errors on the first key that no reader consumed.
    pub fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(CliError::Config(format!("line {line}: unknown key `{key}`"))),
        }
    }
}

fn as_vector(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::List(items) => items
            .iter()
            .map(|x| match x {
                Value::Atom(s) => s.parse().ok(),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    RvgaWhittle,
    HmcWhittle,
    HmcExact,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::RvgaWhittle => "rvga-whittle",
            Engine::HmcWhittle => "hmc-whittle",
            Engine::HmcExact => "hmc-exact",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rvga-whittle" => Ok(Engine::RvgaWhittle),
            "hmc-whittle" => Ok(Engine::HmcWhittle),
            "hmc-exact" => Ok(Engine::HmcExact),
            _ => Err(CliError::Config(format!(
                "unknown engine `{s}` (expected rvga-whittle, hmc-whittle or hmc-exact)"
            ))),
        }
    }
}

pub fn parse_family(s: &str) -> Result<Family> {
    s.parse().map_err(CliError::config)
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File { path: PathBuf, mode: DataMode },
    Simulate(SimSpec<f64>),
}

/// Default prior on the transformed scale: mean and covariance.
pub fn default_prior(family: Family) -> (Vec<f64>, Vec<Vec<f64>>) {
    let diag = |v: &[f64]| -> Vec<Vec<f64>> {
        (0..v.len()).map(|i| (0..v.len()).map(|j| if i == j { v[i] } else { 0.0 }).collect()).collect()
    };
    match family {
        Family::Lgss => (vec![0.0, -1.0, -1.0], diag(&[1.0; 3])),
        Family::Sv1 => (vec![2.0, -3.0], diag(&[0.5; 2])),
        Family::Bsv => (vec![2.0, 2.0, -2.0, -3.0, 0.0], diag(&[0.5, 0.5, 0.5, 0.05, 0.05])),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub engine: Engine,
    pub data: Option<DataSource>,
    pub prior_mean: Vec<f64>,
    pub prior_cov: Vec<Vec<f64>>,
    pub rvga: RvgaConfig,
    pub hmc: HmcConfig,
    /// Posterior draws taken from the final variational Gaussian.
    pub n_draws: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Configuration text, echoed into the result bundle.
    pub source: String,
}

fn sim_spec(family: Family, e: &mut Entries) -> Result<Option<SimSpec<f64>>> {
    let sim_keys = ["sim.phi", "sim.sigma_eta", "sim.sigma_eps", "sim.kappa", "sim.n_obs", "sim.seed"];
    if !sim_keys.iter().any(|k| e.contains(k)) {
        return Ok(None);
    }
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::Config(format!("`{key}` is required to simulate")));
    let n_obs = e.usize("sim.n_obs")?.unwrap_or(10_000);
    let seed = e.u64("sim.seed")?.unwrap_or(0);
    let model = match family {
        Family::Lgss => SimModel::Lgss(
            LgssParams::new(
                need(e.f64("sim.phi")?, "sim.phi")?,
                need(e.f64("sim.sigma_eta")?, "sim.sigma_eta")?,
                need(e.f64("sim.sigma_eps")?, "sim.sigma_eps")?,
            )
            .map_err(CliError::config)?,
        ),
        Family::Sv1 => SimModel::Sv1(
            SvParams::new(
                need(e.f64("sim.phi")?, "sim.phi")?,
                need(e.f64("sim.sigma_eta")?, "sim.sigma_eta")?,
                e.f64("sim.kappa")?.unwrap_or(1.0),
            )
            .map_err(CliError::config)?,
        ),
        Family::Bsv => {
            let phi = e.vector("sim.phi")?.ok_or_else(|| CliError::Config("`sim.phi` is required to simulate".into()))?;
            let sigma = e
                .matrix("sim.sigma_eta")?
                .ok_or_else(|| CliError::Config("`sim.sigma_eta` is required to simulate".into()))?;
            if phi.len() != 2 || sigma.len() != 2 || sigma.iter().any(|r| r.len() != 2) {
                return Err(CliError::Config("bsv simulation needs `sim.phi` of length 2 and a 2x2 `sim.sigma_eta`".into()));
            }
            SimModel::Bsv(
                BsvParams::new([phi[0], phi[1]], [[sigma[0][0], sigma[0][1]], [sigma[1][0], sigma[1][1]]])
                    .map_err(CliError::config)?,
            )
        }
    };
    Ok(Some(SimSpec { model, n_obs, seed }))
}

impl RunConfig {
    /// Reads a configuration file. Relative data paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(DataSource::File { path: data, .. }) = &mut cfg.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let family = parse_family(&e.string("family")?.ok_or_else(|| CliError::Config("`family` is required".into()))?)?;
        let engine: Engine = e.string("engine")?.as_deref().unwrap_or("rvga-whittle").parse()?;
        let seed = e.u64("seed")?.unwrap_or(0);

        let sim = sim_spec(family, &mut e)?;
        let file = e.string("data")?;
        let mode: DataMode = e.string("data_mode")?.as_deref().unwrap_or("raw_series").parse()?;
        let data = match (file, sim) {
            (Some(_), Some(_)) => return Err(CliError::Config("set either `data` or `sim.*` keys, not both".into())),
            (Some(path), None) => Some(DataSource::File { path: PathBuf::from(path), mode }),
            (None, Some(spec)) => Some(DataSource::Simulate(spec)),
            (None, None) => None,
        };

        let (default_mean, default_cov) = default_prior(family);
        let prior_mean = e.vector("prior.mean")?.unwrap_or(default_mean);
        let prior_cov = match (e.matrix("prior.cov")?, e.vector("prior.var")?) {
            (Some(_), Some(_)) => return Err(CliError::Config("set either `prior.cov` or `prior.var`, not both".into())),
            (Some(c), None) => c,
            (None, Some(v)) => (0..v.len()).map(|i| (0..v.len()).map(|j| if i == j { v[i] } else { 0.0 }).collect()).collect(),
            (None, None) => default_cov,
        };

        let d = RvgaConfig::default();
        let w = WelchConfig::default();
        let block_size = match e.string("rvga.block_size")?.as_deref() {
            None => d.block_size,
            Some("none") => None,
            Some(s) => Some(s.parse().map_err(|_| CliError::Config(format!("`rvga.block_size` expects an integer or none, got `{s}`")))?),
        };
        let window = match e.string("rvga.welch_window")?.as_deref() {
            None => w.window,
            Some("hann") => Window::Hann,
            Some("rectangular") => Window::Rectangular,
            Some(s) => return Err(CliError::Config(format!("unknown window `{s}` (expected hann or rectangular)"))),
        };
        let rvga = RvgaConfig {
            n_samples: e.usize("rvga.n_samples")?.unwrap_or(d.n_samples),
            n_damp: e.usize("rvga.n_damp")?.unwrap_or(d.n_damp),
            damping_steps: e.usize("rvga.damping_steps")?.unwrap_or(d.damping_steps),
            cutoff_ratio: e.f64("rvga.cutoff_ratio")?.unwrap_or(d.cutoff_ratio),
            block_size,
            welch: WelchConfig {
                n_segments: e.usize("rvga.welch_segments")?.unwrap_or(w.n_segments),
                overlap: e.f64("rvga.welch_overlap")?.unwrap_or(w.overlap),
                window,
            },
            master_seed: seed,
            max_retries: e.usize("rvga.max_retries")?.unwrap_or(d.max_retries),
            parallel: e.bool("rvga.parallel")?.unwrap_or(true),
        };

        let h = HmcConfig::default();
        let hmc = HmcConfig {
            epsilon: e.f64("hmc.epsilon")?.unwrap_or(h.epsilon),
            n_leapfrog: e.usize("hmc.n_leapfrog")?.unwrap_or(h.n_leapfrog),
            n_keep: e.usize("hmc.n_keep")?.unwrap_or(h.n_keep),
            burnin: e.usize("hmc.burnin")?.unwrap_or(h.burnin),
            n_chains: e.usize("hmc.n_chains")?.unwrap_or(h.n_chains),
            mass_diag: e.vector("hmc.mass_diag")?,
            seed,
            adapt_epsilon: e.bool("hmc.adapt_epsilon")?.unwrap_or(h.adapt_epsilon),
            adapt_mass: e.bool("hmc.adapt_mass")?.unwrap_or(h.adapt_mass),
            target_accept: e.f64("hmc.target_accept")?.unwrap_or(h.target_accept),
        };
        let n_draws = e.usize("n_draws")?.unwrap_or(10_000);
        let out = e.string("out")?.map(PathBuf::from);
        e.finish()?;

        let cfg = Self {
            family,
            engine,
            data,
            prior_mean,
            prior_cov,
            rvga,
            hmc,
            n_draws,
            seed,
            out,
            source: text.to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the master seed of both engines.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.rvga.master_seed = seed;
        self.hmc.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        if self.engine == Engine::HmcExact && self.family != Family::Lgss {
            return Err(CliError::Config(format!(
                "engine hmc-exact is only available for family lgss, not {}",
                self.family
            )));
        }
        let p = self.family.n_params();
        if self.prior_mean.len() != p || self.prior_cov.len() != p || self.prior_cov.iter().any(|r| r.len() != p) {
            return Err(CliError::Config(format!(
                "prior for {} needs a mean of length {p} and a {p}x{p} covariance",
                self.family
            )));
        }
        match self.family {
            Family::Lgss => self.prior::<3>().map(|_| ())?,
            Family::Sv1 => self.prior::<2>().map(|_| ())?,
            Family::Bsv => self.prior::<5>().map(|_| ())?,
        }
        self.rvga.validate().map_err(CliError::config)?;
        self.hmc.validate(p).map_err(CliError::config)?;
        if self.n_draws == 0 {
            return Err(CliError::Config("`n_draws` must be >= 1".into()));
        }
        if let Some(DataSource::Simulate(spec)) = &self.data {
            if spec.model.family() != self.family {
                return Err(CliError::Config("simulation family does not match `family`".into()));
            }
        }
        Ok(())
    }

    /// The configured prior as a fixed-size Gaussian.
    pub fn prior<const P: usize>(&self) -> Result<GaussianPrior<f64, P>> {
        let mean: [f64; P] = self
            .prior_mean
            .as_slice()
            .try_into()
            .map_err(|_| CliError::Config(format!("prior mean must have length {P}")))?;
        let mut cov = [[0.0; P]; P];
        for (i, row) in self.prior_cov.iter().enumerate().take(P) {
            for (j, v) in row.iter().enumerate().take(P) {
                cov[i][j] = *v;
            }
        }
        GaussianPrior::new(mean, cov).map_err(|e| CliError::Config(format!("prior covariance: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_lists() {
        let v = parse_value("[[1, 0.5], [ -2 ,3e-1]]").unwrap();
        let expect = Value::List(vec![
            Value::List(vec![Value::Atom("1".into()), Value::Atom("0.5".into())]),
            Value::List(vec![Value::Atom("-2".into()), Value::Atom("3e-1".into())]),
        ]);
        assert_eq!(v, expect);
        assert!(parse_value("[1, 2").is_err());
        assert!(parse_value("[1, 2] x").is_err());
        assert!(parse_value("").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let mut e = Entries::parse("# header\n\nfamily = lgss # trailing\n").unwrap();
        assert_eq!(e.string("family").unwrap().as_deref(), Some("lgss"));
        e.finish().unwrap();
    }

    #[test]
    fn duplicate_and_unknown_keys_are_rejected() {
        assert!(matches!(Entries::parse("a = 1\na = 2"), Err(CliError::Config(_))));
        let err = RunConfig::parse("family = lgss\nhmc.epsilonn = 0.1").unwrap_err();
        assert!(err.to_string().contains("hmc.epsilonn"), "{err}");
    }

    #[test]
    fn defaults_follow_family() {
        let cfg = RunConfig::parse("family = bsv").unwrap();
        assert_eq!(cfg.engine, Engine::RvgaWhittle);
        assert_eq!(cfg.prior_mean, vec![2.0, 2.0, -2.0, -3.0, 0.0]);
        assert_eq!(cfg.prior_cov[3][3], 0.05);
        assert_eq!(cfg.rvga.n_samples, 1000);
        assert_eq!(cfg.hmc.n_keep, 10_000);
        assert!(cfg.data.is_none());
    }

    #[test]
    fn exact_engine_requires_lgss() {
        let err = RunConfig::parse("family = sv1\nengine = hmc-exact").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn prior_shape_and_definiteness_are_checked() {
        assert!(RunConfig::parse("family = sv1\nprior.mean = [1, 2, 3]").is_err());
        assert!(RunConfig::parse("family = sv1\nprior.cov = [[1, 2], [2, 1]]").is_err());
        let cfg = RunConfig::parse("family = sv1\nprior.var = [0.3, 0.4]").unwrap();
        assert_eq!(cfg.prior_cov, vec![vec![0.3, 0.0], vec![0.0, 0.4]]);
    }

    #[test]
    fn simulation_keys_build_a_spec() {
        let cfg = RunConfig::parse(
            "family = bsv\nsim.phi = [0.99, 0.98]\nsim.sigma_eta = [[0.02, 0.005], [0.005, 0.01]]\nsim.n_obs = 500\nsim.seed = 7",
        )
        .unwrap();
        match cfg.data {
            Some(DataSource::Simulate(spec)) => {
                assert_eq!((spec.n_obs, spec.seed), (500, 7));
                assert_eq!(spec.model.family(), Family::Bsv);
            }
            other => panic!("unexpected data source {other:?}"),
        }
        assert!(RunConfig::parse("family = lgss\nsim.phi = 0.9").is_err());
        assert!(RunConfig::parse("family = lgss\nsim.phi = 1.5\nsim.sigma_eta = 1\nsim.sigma_eps = 1").is_err());
    }

    #[test]
    fn block_size_accepts_none() {
        let cfg = RunConfig::parse("family = lgss\nrvga.block_size = none").unwrap();
        assert_eq!(cfg.rvga.block_size, None);
        assert!(RunConfig::parse("family = lgss\nrvga.block_size = 0").is_err());
    }

    #[test]
    fn seed_override_reaches_both_engines() {
        let mut cfg = RunConfig::parse("family = lgss\nseed = 3").unwrap();
        assert_eq!((cfg.rvga.master_seed, cfg.hmc.seed), (3, 3));
        cfg.set_seed(9);
        assert_eq!((cfg.seed, cfg.rvga.master_seed, cfg.hmc.seed), (9, 9, 9));
    }
}
