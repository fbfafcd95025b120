//! Output plumbing: schema-tagged JSON documents and CSV tables whose
//! numbers round-trip exactly (Rust's shortest-representation float
//! formatting).

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Schema tag carried by every JSON document the tool emits.
pub const SCHEMA: &str = "readout/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Where a command's primary document goes.
pub fn sink(out: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(
            File::create(path)
                .map_err(|e| CliError::usage(format!("cannot create {}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn emit_json<T: Serialize>(out: Option<&PathBuf>, doc: &T) -> Result<(), CliError> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, doc)
        .map_err(|e| CliError::usage(format!("serialization failed: {e}")))?;
    writeln!(w).ok();
    Ok(())
}

/// A rectangular CSV table with a header line.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    write!(w, ",")?;
                }
                write!(w, "{v}")?;
                first = false;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_csv_to(&self, path: &Path) -> Result<(), CliError> {
        let mut f = File::create(path)
            .map_err(|e| CliError::usage(format!("cannot create {}: {e}", path.display())))?;
        self.write_csv(&mut f)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
    }

    pub fn emit(&self, out: Option<&PathBuf>) -> Result<(), CliError> {
        let mut w = sink(out)?;
        self.write_csv(&mut w)
            .map_err(|e| CliError::usage(format!("cannot write output: {e}")))
    }
}
