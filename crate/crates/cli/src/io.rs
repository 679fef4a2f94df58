//! File formats: dataset CSV, symmetric matrix CSV and target-spectrum files.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use spectral_dp_core::ingest::Table;
use spectral_dp_core::{SymMatrix, TargetSpectrum};

use crate::error::{CliError, CliResult};

/// What to do with cells that do not parse as numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DropPolicy {
    /// Any unparseable cell is an error.
    #[default]
    Strict,
    /// Columns with non-numeric cells are dropped; rows with empty cells are rejected.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub policy: DropPolicy,
    /// Columns to drop up front, by header name or 1-based index.
    pub drop_columns: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', has_header: true, policy: DropPolicy::Strict, drop_columns: Vec::new() }
    }
}

/// Columns and rows removed while reading a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RejectionReport {
    pub dropped_columns: Vec<String>,
    pub non_numeric_columns: Vec<String>,
    /// 1-based line numbers of rejected rows.
    pub rejected_rows: Vec<usize>,
}

fn open(path: &Path) -> CliResult<String> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(text)
}

pub fn read_csv(path: &Path, options: &CsvOptions) -> CliResult<(Table, RejectionReport)> {
    parse_csv(&open(path)?, options)
}

/// Parses delimited text into a numeric [`Table`].
pub fn parse_csv(text: &str, options: &CsvOptions) -> CliResult<(Table, RejectionReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        records.push((line, record.iter().map(str::to_owned).collect::<Vec<_>>()));
    }
    let mut records = records.into_iter();
    let header = if options.has_header {
        match records.next() {
            Some((_, names)) => Some(names),
            None => return Err(CliError::input("empty file")),
        }
    } else {
        None
    };
    let rows: Vec<(usize, Vec<String>)> = records.collect();
    let width = header.as_ref().map(Vec::len).or_else(|| rows.first().map(|r| r.1.len())).unwrap_or(0);
    if let Some((line, row)) = rows.iter().find(|(_, r)| r.len() != width) {
        return Err(CliError::input(format!("line {line}: expected {width} fields, found {}", row.len())));
    }
    let names: Vec<String> = header.unwrap_or_else(|| (1..=width).map(|j| format!("col{j}")).collect());

    let mut report = RejectionReport::default();
    let mut keep = vec![true; width];
    for wanted in &options.drop_columns {
        let idx = names
            .iter()
            .position(|n| n == wanted)
            .or_else(|| wanted.parse::<usize>().ok().filter(|&i| (1..=width).contains(&i)).map(|i| i - 1))
            .ok_or_else(|| CliError::input(format!("no column named '{wanted}'")))?;
        if keep[idx] {
            keep[idx] = false;
            report.dropped_columns.push(names[idx].clone());
        }
    }

    if options.policy == DropPolicy::Auto {
        for j in 0..width {
            if !keep[j] {
                continue;
            }
            let numeric = rows.iter().all(|(_, r)| r[j].is_empty() || r[j].parse::<f64>().is_ok_and(f64::is_finite));
            if !numeric {
                keep[j] = false;
                report.non_numeric_columns.push(names[j].clone());
            }
        }
    }

    let columns: Vec<String> = (0..width).filter(|&j| keep[j]).map(|j| names[j].clone()).collect();
    let mut data = Vec::with_capacity(rows.len() * columns.len());
    'rows: for (line, row) in &rows {
        let start = data.len();
        for j in (0..width).filter(|&j| keep[j]) {
            match row[j].parse::<f64>() {
                Ok(x) if x.is_finite() => data.push(x),
                _ if options.policy == DropPolicy::Auto => {
                    data.truncate(start);
                    report.rejected_rows.push(*line);
                    continue 'rows;
                }
                _ => {
                    return Err(CliError::input(format!(
                        "line {line}, column '{}': cannot parse '{}' as a number",
                        names[j], row[j]
                    )))
                }
            }
        }
    }
    Ok((Table::new(columns, data)?, report))
}

/// Reads a square symmetric matrix from headerless CSV (lines starting with
/// `#` are skipped).
pub fn read_matrix(path: &Path) -> CliResult<SymMatrix> {
    parse_matrix(&open(path)?)
}

pub fn parse_matrix(text: &str) -> CliResult<SymMatrix> {
    let options = CsvOptions { has_header: false, ..CsvOptions::default() };
    let (table, _) = parse_csv(text, &options)?;
    let d = table.cols();
    if d == 0 || table.rows != d {
        return Err(CliError::input(format!("matrix is {}x{d}, expected square", table.rows)));
    }
    Ok(SymMatrix::from_row_major(d, table.data)?)
}

/// Matrix rows as CSV, shortest round-trip decimal formatting.
pub fn matrix_csv(m: &SymMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_target(path: &Path, d: usize, k: Option<usize>) -> CliResult<TargetSpectrum> {
    parse_target(&open(path)?, d, k)
}

/// One decimal per line (blank lines and `#` comments ignored), exactly
/// `d` values. Without an explicit `k`, the cutoff is the last nonzero entry.
pub fn parse_target(text: &str, d: usize, k: Option<usize>) -> CliResult<TargetSpectrum> {
    let mut lambdas = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: f64 =
            line.parse().map_err(|_| CliError::input(format!("lambda line {}: cannot parse '{line}'", n + 1)))?;
        lambdas.push(x);
    }
    if lambdas.len() != d {
        return Err(CliError::input(format!("lambda file has {} values, matrix dimension is {d}", lambdas.len())));
    }
    let k = k.unwrap_or_else(|| lambdas.iter().rposition(|&x| x != 0.0).map_or(1, |i| i + 1));
    Ok(TargetSpectrum::new(lambdas, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_table() {
        let (t, r) = parse_csv("a,b\n1,2\n3,4\n", &CsvOptions::default()).unwrap();
        assert_eq!((t.rows, t.cols()), (2, 2));
        assert_eq!(t.data, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r, RejectionReport::default());
    }

    #[test]
    fn auto_drops_text_column() {
        let opts = CsvOptions { policy: DropPolicy::Auto, ..CsvOptions::default() };
        let (t, r) = parse_csv("x,name,y\n1,ann,2\n3,bo,4\n", &opts).unwrap();
        assert_eq!(t.columns, vec!["x", "y"]);
        assert_eq!(r.non_numeric_columns, vec!["name"]);
        let err = parse_csv("x,name,y\n1,ann,2\n", &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn auto_rejects_rows_with_missing_cells() {
        let opts = CsvOptions { policy: DropPolicy::Auto, ..CsvOptions::default() };
        let (t, r) = parse_csv("x,y\n1,2\n3,\n5,6\n", &opts).unwrap();
        assert_eq!(t.data, vec![1.0, 2.0, 5.0, 6.0]);
        assert_eq!(r.rejected_rows, vec![3]);
    }

    #[test]
    fn ragged_rows_are_named() {
        let err = parse_csv("a,b\n1,2\n3\n", &CsvOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn explicit_drop_and_delimiter() {
        let opts =
            CsvOptions { delimiter: b';', has_header: false, drop_columns: vec!["2".into()], ..CsvOptions::default() };
        let (t, r) = parse_csv("1;9;2\n3;9;4\n", &opts).unwrap();
        assert_eq!(t.data, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.dropped_columns, vec!["col2"]);
    }

    #[test]
    fn matrix_round_trip() {
        let m = SymMatrix::from_rows(&[[1.0, 0.1], [0.1, -3.25e-7]]).unwrap();
        let text = format!("# comment\n{}", matrix_csv(&m));
        assert_eq!(parse_matrix(&text).unwrap(), m);
        assert!(parse_matrix("1,2\n3,4\n").is_err());
        assert!(parse_matrix("1,2,3\n4,5,6\n").is_err());
    }

    #[test]
    fn target_file() {
        let t = parse_target("3\n1\n\n0\n", 3, None).unwrap();
        assert_eq!(t.k(), 2);
        assert!(parse_target("1\n2\n", 2, None).is_err());
        assert!(parse_target("1\n0\n", 3, None).is_err());
        assert!(parse_target("1\n1\n", 2, Some(1)).is_err());
    }
}
