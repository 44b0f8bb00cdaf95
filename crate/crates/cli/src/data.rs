//! Delimited-text ingestion into a [`TimeSeries`].

use std::path::PathBuf;

use clap::Args;
use hetport::model::TimeSeries;

use crate::error::CliError;

/// Where the series come from and how they are prepared.
#[derive(Debug, Clone, Args)]
pub struct DatasetSpec {
    /// Delimited text file, one observation per row.
    #[arg(long, short = 'd')]
    pub data: PathBuf,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The first row holds values, not column names.
    #[arg(long)]
    pub no_header: bool,
    /// Columns to use, by header name or 1-based position (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Replace the series by their first differences.
    #[arg(long)]
    pub diff: bool,
}

impl DatasetSpec {
    pub fn load(&self) -> Result<TimeSeries, CliError> {
        let text = std::fs::read_to_string(&self.data)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", self.data.display())))?;
        let x = parse_series(&text, self.delimiter, !self.no_header, &self.columns)?;
        if self.diff {
            Ok(x.first_difference()?)
        } else {
            Ok(x)
        }
    }
}

fn column_index(sel: &str, header: Option<&csv::StringRecord>, width: usize) -> Result<usize, CliError> {
    if let Some(h) = header {
        if let Some(i) = h.iter().position(|name| name.trim() == sel) {
            return Ok(i);
        }
    }
    match sel.parse::<usize>() {
        Ok(k) if k >= 1 && k <= width => Ok(k - 1),
        _ => Err(CliError::Input(format!("unknown column {sel:?}"))),
    }
}

/// Parses numeric columns; any empty or non-numeric selected cell is an
/// error.
pub fn parse_series(text: &str, delimiter: char, has_header: bool, columns: &[String]) -> Result<TimeSeries, CliError> {
    if !delimiter.is_ascii() {
        return Err(CliError::Input("delimiter must be an ASCII character".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = if has_header {
        Some(reader.headers().map_err(|e| CliError::Input(format!("bad header: {e}")))?.clone())
    } else {
        None
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut selected: Option<Vec<usize>> = None;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("malformed record: {e}")))?;
        let idx = match &selected {
            Some(s) => s.clone(),
            None => {
                let s = if columns.is_empty() {
                    (0..rec.len()).collect()
                } else {
                    columns
                        .iter()
                        .map(|c| column_index(c, header.as_ref(), rec.len()))
                        .collect::<Result<Vec<_>, _>>()?
                };
                selected = Some(s.clone());
                s
            }
        };
        let row_no = line + 1 + usize::from(has_header);
        let mut row = Vec::with_capacity(idx.len());
        for &i in &idx {
            let cell = rec
                .get(i)
                .ok_or_else(|| CliError::Input(format!("row {row_no}: missing column {}", i + 1)))?;
            if cell.is_empty() {
                return Err(CliError::Input(format!("row {row_no}: missing value in column {}", i + 1)));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| CliError::Input(format!("row {row_no}: {cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("row {row_no}: non-finite value {cell:?}")));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input("no observations".into()));
    }
    Ok(TimeSeries::from_rows(&rows)?)
}

/// CSV text of a series with 17 significant digits.
pub fn series_csv(x: &TimeSeries) -> String {
    let d = x.dim();
    let header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for obs in x.observations() {
        let cells: Vec<String> = obs.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
