use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// CSV with `#` comment lines carrying provenance ahead of the header.
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        CsvTable {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, digest: &str) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# workstats {}", workstats::VERSION)?;
        writeln!(buf, "# config-sha256 {digest}")?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// JSON document with the same provenance fields as the CSV comments.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub version: &'static str,
    pub config_sha256: &'a str,
    #[serde(flatten)]
    pub body: T,
}

pub fn render_json<T: Serialize>(digest: &str, body: T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&Report {
        version: workstats::VERSION,
        config_sha256: digest,
        body,
    })?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, or stdout when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
