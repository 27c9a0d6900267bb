use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use flate2::read::MultiGzDecoder;
use serde::Deserialize;

use super::html::strip_html;
use super::Review;
use crate::error::{Error, Result};

const TSV_COLUMNS: [&str; 9] = [
    "review_id",
    "customer_id",
    "product_title",
    "product_category",
    "review_headline",
    "review_body",
    "review_date",
    "verified_purchase",
    "vine",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// Tab-separated review dump with a header row.
    Tsv,
    /// One JSON `Review` per line.
    Jsonl,
}

impl InputFormat {
    /// Guesses the format from the extension, ignoring a trailing `.gz`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let name = name.strip_suffix(".gz").unwrap_or(name);
        match name.rsplit('.').next() {
            Some("tsv") => Ok(InputFormat::Tsv),
            Some("jsonl" | "json") => Ok(InputFormat::Jsonl),
            _ => Err(Error::contract(format!(
                "cannot tell the format of {}; expected .tsv or .jsonl, optionally gzipped",
                path.display()
            ))),
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(InputFormat::Tsv),
            "jsonl" => Ok(InputFormat::Jsonl),
            other => Err(Error::contract(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Deserialize)]
struct TsvRow {
    review_id: String,
    customer_id: String,
    product_title: String,
    product_category: String,
    review_headline: String,
    review_body: String,
    review_date: String,
    verified_purchase: String,
    vine: String,
}

fn flag(value: &str, column: &str) -> std::result::Result<bool, String> {
    match value.trim() {
        "Y" | "y" => Ok(true),
        "N" | "n" => Ok(false),
        other => Err(format!("{column}: expected Y or N, got {other:?}")),
    }
}

impl TryFrom<TsvRow> for Review {
    type Error = String;

    fn try_from(row: TsvRow) -> std::result::Result<Self, String> {
        if row.review_id.trim().is_empty() {
            return Err("empty review_id".into());
        }
        let review_date = NaiveDate::parse_from_str(row.review_date.trim(), "%Y-%m-%d")
            .map_err(|e| format!("review_date {:?}: {e}", row.review_date))?;
        Ok(Review {
            review_id: row.review_id,
            customer_id: row.customer_id,
            product_title: row.product_title,
            product_category: row.product_category,
            review_headline: row.review_headline,
            review_body: strip_html(&row.review_body),
            review_date,
            verified_purchase: flag(&row.verified_purchase, "verified_purchase")?,
            vine: flag(&row.vine, "vine")?,
        })
    }
}

enum Inner {
    Tsv {
        records: csv::StringRecordsIntoIter<Box<dyn Read>>,
        headers: csv::StringRecord,
    },
    Jsonl {
        lines: std::io::Lines<BufReader<Box<dyn Read>>>,
        line: usize,
    },
}

/// Iterator over the reviews of a file. Bad records are yielded as
/// [`Error::Format`] with their line number, and iteration continues.
pub struct ReviewReader {
    source: String,
    inner: Inner,
}

pub fn read_reviews(path: &Path, format: Option<InputFormat>) -> Result<ReviewReader> {
    let format = match format {
        Some(f) => f,
        None => InputFormat::from_path(path)?,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let raw: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let source = path.display().to_string();
    let inner = match format {
        InputFormat::Tsv => {
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(b'\t')
                .quoting(false)
                .from_reader(raw);
            let headers = reader
                .headers()
                .map_err(|e| Error::format(Some(&source), 1, e.to_string()))?
                .clone();
            let missing: Vec<&str> = TSV_COLUMNS
                .iter()
                .copied()
                .filter(|c| !headers.iter().any(|h| h == *c))
                .collect();
            if !missing.is_empty() {
                return Err(Error::format(
                    Some(&source),
                    1,
                    format!("header lacks columns: {}", missing.join(", ")),
                ));
            }
            Inner::Tsv {
                records: reader.into_records(),
                headers,
            }
        }
        InputFormat::Jsonl => Inner::Jsonl {
            lines: BufReader::new(raw).lines(),
            line: 0,
        },
    };
    Ok(ReviewReader { source, inner })
}

impl Iterator for ReviewReader {
    type Item = Result<Review>;

    fn next(&mut self) -> Option<Self::Item> {
        let source = Some(self.source.as_str());
        match &mut self.inner {
            Inner::Tsv { records, headers } => {
                let record = records.next()?;
                Some(match record {
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        Err(Error::format(source, line, e.to_string()))
                    }
                    Ok(rec) => {
                        let line = rec.position().map_or(0, |p| p.line() as usize);
                        rec.deserialize::<TsvRow>(Some(headers))
                            .map_err(|e| e.to_string())
                            .and_then(Review::try_from)
                            .map_err(|m| Error::format(source, line, m))
                    }
                })
            }
            Inner::Jsonl { lines, line } => loop {
                let text = lines.next()?;
                *line += 1;
                let text = match text {
                    Ok(t) => t,
                    Err(e) => return Some(Err(Error::format(source, *line, e.to_string()))),
                };
                if text.trim().is_empty() {
                    continue;
                }
                return Some(
                    serde_json::from_str::<Review>(&text).map_err(|e| Error::format(source, *line, e.to_string())),
                );
            },
        }
    }
}

pub fn write_reviews_jsonl<'r>(out: &mut dyn Write, reviews: impl IntoIterator<Item = &'r Review>) -> Result<()> {
    for r in reviews {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}
