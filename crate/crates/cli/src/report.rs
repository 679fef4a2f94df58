//! Report envelopes and their JSON / CSV renderings.

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "spectral-dp";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rows for the CSV rendering. A table without a header is written as bare
/// rows (matrix outputs).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn with_header<S: AsRef<str>>(header: &[S]) -> Self {
        CsvTable { header: Some(header.iter().map(|s| s.as_ref().to_owned()).collect()), rows: Vec::new() }
    }

    pub fn push<I, C>(&mut self, row: I)
    where
        I: IntoIterator<Item = C>,
        C: Cell,
    {
        self.rows.push(row.into_iter().map(|c| c.cell()).collect());
    }
}

/// A value that can appear in a CSV cell.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for bool {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        (*self).to_owned()
    }
}

impl<T: Cell> Cell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map_or_else(String::new, Cell::cell)
    }
}

/// Result of one subcommand before rendering.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
    pub result: Value,
    pub table: CsvTable,
    /// Extra `# key=value` lines for the CSV rendering.
    pub notes: Vec<(String, String)>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a Value,
    result: &'a Value,
}

impl Report {
    pub fn new<C: Serialize, R: Serialize>(
        command: &'static str,
        seed: u64,
        config: &C,
        result: &R,
        table: CsvTable,
    ) -> CliResult<Self> {
        Ok(Report { command, seed, config: to_value(config)?, result: to_value(result)?, table, notes: Vec::new() })
    }

    pub fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_owned(), value.to_string()));
        self
    }

    pub fn render(&self, format: Format) -> CliResult<Vec<u8>> {
        match format {
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_json(&self) -> CliResult<Vec<u8>> {
        let envelope = Envelope {
            tool: TOOL,
            version: VERSION,
            command: self.command,
            seed: self.seed,
            config: &self.config,
            result: &self.result,
        };
        let mut out = serde_json::to_vec_pretty(&envelope).map_err(|e| CliError::input(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    fn render_csv(&self) -> CliResult<Vec<u8>> {
        let mut out = format!("# {TOOL} {VERSION} {}\n# seed={}\n# config={}\n", self.command, self.seed, self.config);
        for (k, v) in &self.notes {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(out.into_bytes());
        if let Some(header) = &self.table.header {
            writer.write_record(header)?;
        }
        for row in &self.table.rows {
            writer.write_record(row)?;
        }
        writer.into_inner().map_err(|e| CliError::input(e.to_string()))
    }
}

fn to_value<T: Serialize>(value: &T) -> CliResult<Value> {
    serde_json::to_value(value).map_err(|e| CliError::input(e.to_string()))
}
