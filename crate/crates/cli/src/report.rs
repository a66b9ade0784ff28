//! Result files. Numbers are written with 17 significant digits so values
//! read back from disk are bit-identical to the ones in memory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use whittle_core::diagnostics::{summarize, Summary};

use crate::data::{parse_columns, CsvColumns};
use crate::error::{CliError, Result};
use crate::run::{ResultBundle, SpectralReport};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn summaries(bundle: &ResultBundle) -> Result<Vec<Summary<f64>>> {
    (0..bundle.names.len()).map(|j| summarize(&bundle.column(j)).map_err(CliError::data)).collect()
}

/// Aligned table of per-parameter summaries. Diagnostics follow as `#` lines.
pub fn summary_text(bundle: &ResultBundle) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "# family {}", bundle.family);
    let _ = writeln!(s, "# engine {}", bundle.engine.as_str());
    let _ = writeln!(s, "# observations {}", bundle.n_obs);
    let _ = writeln!(s, "# draws {}", bundle.draws.len());
    if let Some(k) = bundle.kappa {
        let _ = writeln!(s, "# kappa_hat {}", num(k));
    }
    if let Some(plan) = &bundle.plan {
        let _ = writeln!(
            s,
            "# updates individual {} blocks {} total {}",
            plan.n_individual,
            plan.n_blocks(),
            plan.total_updates()
        );
    }
    for (c, info) in bundle.chains.iter().enumerate() {
        let _ = writeln!(
            s,
            "# chain {c} accept_rate {:.4} divergences {} epsilon {}",
            info.accept_rate,
            info.divergences,
            num(info.epsilon)
        );
    }
    let _ = writeln!(
        s,
        "{:<14} {:>24} {:>24} {:>24} {:>24} {:>24}{}",
        "parameter",
        "mean",
        "sd",
        "q025",
        "q50",
        "q975",
        if bundle.ess.is_empty() { "" } else { "                      ess" }
    );
    for (j, sm) in summaries(bundle)?.iter().enumerate() {
        let _ = write!(
            s,
            "{:<14} {:>24} {:>24} {:>24} {:>24} {:>24}",
            bundle.names[j],
            num(sm.mean),
            num(sm.sd),
            num(sm.q025),
            num(sm.q50),
            num(sm.q975)
        );
        if let Some(e) = bundle.ess.get(j) {
            let _ = write!(s, " {:>24}", num(*e));
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn draws_csv(bundle: &ResultBundle) -> String {
    let mut s = String::from("sample,chain");
    for n in &bundle.names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (i, (row, c)) in bundle.draws.iter().zip(&bundle.chain).enumerate() {
        let _ = write!(s, "{},{c}", i + 1);
        for v in row {
            s.push(',');
            s.push_str(&num(*v));
        }
        s.push('\n');
    }
    s
}

pub fn trajectory_csv(bundle: &ResultBundle) -> String {
    let p = bundle.n_transformed;
    let mut s = String::from("update_index,kind");
    for j in 1..=p {
        let _ = write!(s, ",mu_{j}");
    }
    for j in 1..=p {
        let _ = write!(s, ",sigma_diag_{j}");
    }
    s.push_str(",retries\n");
    for r in &bundle.trajectory {
        let _ = write!(s, "{},{}", r.index, r.kind);
        for v in r.mu.iter().chain(&r.sigma_diag) {
            s.push(',');
            s.push_str(&num(*v));
        }
        let _ = writeln!(s, ",{}", r.retries);
    }
    s
}

/// Writes draws.csv, summary.txt, timing.txt, config.txt and, for the
/// variational engine, trajectory.csv.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_file(&dir.join("draws.csv"), &draws_csv(bundle))?;
    write_file(&dir.join("summary.txt"), &summary_text(bundle)?)?;
    write_file(
        &dir.join("timing.txt"),
        &format!("engine {}\nseconds {:.6}\n", bundle.engine.as_str(), bundle.seconds),
    )?;
    write_file(&dir.join("config.txt"), &bundle.config_echo)?;
    if !bundle.trajectory.is_empty() {
        write_file(&dir.join("trajectory.csv"), &trajectory_csv(bundle))?;
    }
    Ok(())
}

/// Writes periodogram.csv (diagonal ordinates) and smoothed.csv (Welch
/// power).
pub fn write_spectral(report: &SpectralReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let pg = &report.periodogram;
    let d = pg.dim();
    let mut s = String::from("k,omega");
    for j in 1..=d {
        let _ = write!(s, ",i_{j}{j}");
    }
    s.push('\n');
    for f in pg.freqs() {
        let _ = write!(s, "{},{}", f.index, num(f.omega));
        let ord = pg.ordinate(f.index);
        for j in 0..d {
            s.push(',');
            s.push_str(&num(ord.get(j, j).re));
        }
        s.push('\n');
    }
    write_file(&dir.join("periodogram.csv"), &s)?;

    let sm = &report.smoothed;
    let mut s = String::from("omega");
    for j in 1..=sm.power.len() {
        let _ = write!(s, ",power_{j}");
    }
    s.push('\n');
    for (i, w) in sm.frequencies.iter().enumerate() {
        s.push_str(&num(*w));
        for col in &sm.power {
            s.push(',');
            s.push_str(&num(col[i]));
        }
        s.push('\n');
    }
    write_file(&dir.join("smoothed.csv"), &s)
}

/// Named numeric columns of a draws file.
pub struct DrawsFile {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl DrawsFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let CsvColumns { header, columns } = parse_columns(&text)?;
        let names = header.ok_or_else(|| CliError::Data(format!("{}: missing header", path.display())))?;
        if columns.is_empty() || names.len() != columns.len() {
            return Err(CliError::Data(format!("{}: no draws", path.display())));
        }
        Ok(Self { names, columns })
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|j| self.columns[j].as_slice())
    }

    /// Parameter columns, excluding the `sample` and `chain` bookkeeping.
    pub fn parameters(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .zip(&self.columns)
            .filter(|(n, _)| n.as_str() != "sample" && n.as_str() != "chain")
            .map(|(n, c)| (n.as_str(), c.as_slice()))
    }
}
