//! Loading observed series from CSV.

use std::path::Path;

use whittle_core::TimeSeries;

use crate::error::{CliError, Result};

/// Fewest data rows accepted from a file.
pub const MIN_ROWS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataMode {
    /// Columns are used as given.
    RawSeries,
    /// Columns are positive prices, converted to de-meaned log returns.
    ExchangeRates,
}

impl std::str::FromStr for DataMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw_series" => Ok(DataMode::RawSeries),
            "exchange_rates" => Ok(DataMode::ExchangeRates),
            _ => Err(CliError::Config(format!(
                "unknown data_mode `{s}` (expected raw_series or exchange_rates)"
            ))),
        }
    }
}

/// Log differences of each column, minus the column mean. Each output column
/// is one shorter than its input.
pub fn demeaned_log_returns(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    columns
        .iter()
        .map(|c| {
            let r: Vec<f64> = c.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
            let mean = r.iter().sum::<f64>() / r.len().max(1) as f64;
            r.into_iter().map(|x| x - mean).collect()
        })
        .collect()
}

/// Numeric CSV columns with the header row, if one was present.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvColumns {
    pub header: Option<Vec<String>>,
    pub columns: Vec<Vec<f64>>,
}

/// Reads numeric columns from CSV text. A first row with any non-numeric cell
/// is taken as a header.
pub fn parse_columns(text: &str) -> Result<CsvColumns> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, &str>> =
            record.iter().map(|c| c.parse::<f64>().map_err(|_| c)).collect();
        if i == 0 && parsed.iter().any(|p| p.is_err()) {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); record.len()];
        }
        for (j, cell) in parsed.into_iter().enumerate() {
            match cell {
                Ok(v) if v.is_finite() => columns[j].push(v),
                Ok(_) | Err(_) => {
                    return Err(CliError::Data(format!(
                        "line {} column {}: not a finite number: `{}`",
                        i + 1,
                        j + 1,
                        &record[j]
                    )))
                }
            }
        }
    }
    Ok(CsvColumns { header, columns })
}

/// Loads a one- or two-column series. In exchange-rate mode every value must
/// be positive and the result is the de-meaned log returns.
pub fn load_series(path: &Path, mode: DataMode) -> Result<TimeSeries<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let CsvColumns { columns, .. } = parse_columns(&text).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if columns.is_empty() || columns.len() > 2 {
        return Err(CliError::Data(format!(
            "{}: expected 1 or 2 numeric columns, found {}",
            path.display(),
            columns.len()
        )));
    }
    let n = columns[0].len();
    if n < MIN_ROWS {
        return Err(CliError::Data(format!(
            "{}: {n} data rows, at least {MIN_ROWS} required",
            path.display()
        )));
    }
    let columns = match mode {
        DataMode::RawSeries => columns,
        DataMode::ExchangeRates => {
            for (j, c) in columns.iter().enumerate() {
                if let Some(t) = c.iter().position(|&v| v <= 0.0) {
                    return Err(CliError::Data(format!(
                        "{}: row {} column {}: exchange rate must be positive, got {}",
                        path.display(),
                        t + 1,
                        j + 1,
                        c[t]
                    )));
                }
            }
            demeaned_log_returns(&columns)
        }
    };
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    TimeSeries::from_columns(&columns, label).map_err(CliError::data)
}

/// Writes a series with a `y` or `y1,y2` header.
pub fn write_series(path: &Path, y: &TimeSeries<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = if y.dim() == 1 {
        vec!["y".into()]
    } else {
        (1..=y.dim()).map(|j| format!("y{j}")).collect()
    };
    let io = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(io)?;
    for t in 0..y.n_obs() {
        w.write_record(y.row(t).iter().map(|v| crate::report::num(*v))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_returns_example() {
        let r = demeaned_log_returns(&[vec![100.0, 110.0, 121.0]]);
        assert_eq!(r[0].len(), 2);
        assert!(r[0].iter().all(|x| x.abs() < 1e-15), "{r:?}");
    }

    #[test]
    fn header_is_detected() {
        let t = parse_columns("a,b\n1,2\n3,4\n").unwrap();
        assert_eq!(t.header, Some(vec!["a".to_string(), "b".to_string()]));
        assert_eq!(t.columns, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        let t = parse_columns("1.5\n-2\n").unwrap();
        assert_eq!(t.header, None);
        assert_eq!(t.columns, vec![vec![1.5, -2.0]]);
    }

    #[test]
    fn bad_cell_is_located() {
        let err = parse_columns("y\n1\n2\nabc\n").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("line 4 column 1"), "{err}");
        assert!(parse_columns("1\nnan\n").is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(parse_columns("1,2\n3\n").is_err());
    }
}
