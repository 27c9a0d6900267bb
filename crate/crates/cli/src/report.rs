use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::Config;
use crate::{CliError, Format, OutputArgs};

/// Bumped whenever a report field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report<'a, T> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: &'a Config,
    pub result: T,
}

/// Writes the JSON report to `--output` if given and prints either the table
/// or the JSON on stdout.
pub fn emit<T: Serialize>(
    command: &str,
    config: &Config,
    result: T,
    out: &OutputArgs,
    table: impl FnOnce(&T) -> String,
) -> Result<(), CliError> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        config,
        result,
    };
    let json = serde_json::to_string_pretty(&report).map_err(usage_eval::Error::from)?;
    if let Some(path) = &out.output {
        write_file(path, &format!("{json}\n"))?;
    }
    match out.format {
        Format::Json => println!("{json}"),
        Format::Table => print!("{}", table(&report.result)),
    }
    Ok(())
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| usage_eval::Error::io(path, e).into())
}

/// Left-aligned first column, right-aligned others.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    line(widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

pub fn fmt_score(v: f64) -> String {
    format!("{v:.4}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_score).unwrap_or_else(|| "n/a".into())
}
