//! CSV and JSON emitters. Both are assembled in memory on one thread, so the
//! bytes depend only on the inputs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sidonlab::rational::{format_rational_float, format_sig12, to_num_den, Rational};

use crate::CliError;

/// Top-level JSON document written by every command.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    /// All checked properties hold.
    pub holds: bool,
    pub report: T,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// The two columns used for every rational: `num/den` and a 12-digit float.
pub fn rat_cols(q: &Rational) -> [String; 2] {
    [to_num_den(q), format_rational_float(q)]
}

pub fn float_col(x: f64) -> String {
    format_sig12(x)
}

pub fn csv_bytes(schema: &str, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut out = format!("# schema={schema}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(&table.header).map_err(csv_err)?;
        for r in &table.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn json_bytes<T: Serialize>(
    schema: &str,
    holds: bool,
    report: &T,
) -> Result<Vec<u8>, CliError> {
    let env = Envelope {
        schema: schema.to_string(),
        holds,
        report,
    };
    let mut out = serde_json::to_vec_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
