//! Report files: a CSV with a `#`-prefixed provenance header and a plain
//! text summary. Float formatting is fixed so identical runs serialize to
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;

pub struct Report {
    header: Vec<String>,
    columns: String,
    rows: Vec<String>,
    summary: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config_hash: u64, columns: &str) -> Self {
        let header = vec![
            format!("# mfg {command} report"),
            format!("# config_hash: {config_hash:016x}"),
        ];
        Self { header, columns: columns.to_string(), rows: Vec::new(), summary: Vec::new() }
    }

    pub fn provenance(&mut self, key: &str, value: impl std::fmt::Display) {
        self.header.push(format!("# {key}: {value}"));
    }

    pub fn row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(out, "{}", self.columns);
        for row in &self.rows {
            let _ = writeln!(out, "{row}");
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for line in &self.summary {
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn write(&self, out_dir: &Path, quiet: bool) -> anyhow::Result<()> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
        let csv_path = out_dir.join("report.csv");
        std::fs::write(&csv_path, self.csv())
            .with_context(|| format!("cannot write {}", csv_path.display()))?;
        let summary_path = out_dir.join("summary.txt");
        std::fs::write(&summary_path, self.summary_text())
            .with_context(|| format!("cannot write {}", summary_path.display()))?;
        if !quiet {
            print!("{}", self.summary_text());
            println!("wrote {} and {}", csv_path.display(), summary_path.display());
        }
        Ok(())
    }
}

/// Fixed-format float for byte-stable CSV bodies.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}
