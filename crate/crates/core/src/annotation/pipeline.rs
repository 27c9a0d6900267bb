use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::client::ChatClient;
use super::parse::{parse_response, ParseConfig, ParseStatus};
use super::prompts::{build_prompt, PromptTemplate, DEFAULT_TEMPERATURE};
use crate::dataset::Review;
use crate::error::{Error, Result};
use crate::set_metrics::UsageOptionSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub review_id: String,
    /// Model and prompt, e.g. `gpt-4/plain-6`, or a human source tag.
    pub source: String,
    pub usage_options: UsageOptionSet,
    pub raw_response: String,
    pub parse_status: ParseStatus,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct AnnotateConfig {
    pub template: PromptTemplate,
    pub model: String,
    pub temperature: f64,
    pub concurrency: usize,
    /// Upper bound on request starts per second; `None` for no limit.
    pub requests_per_second: Option<f64>,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub dry_run: bool,
    pub parse: ParseConfig,
}

impl AnnotateConfig {
    pub fn new(template: PromptTemplate, model: impl Into<String>) -> Self {
        AnnotateConfig {
            template,
            model: model.into(),
            temperature: DEFAULT_TEMPERATURE,
            concurrency: 4,
            requests_per_second: None,
            max_retries: 5,
            initial_backoff: Duration::from_millis(500),
            dry_run: false,
            parse: ParseConfig::default(),
        }
    }

    pub fn source(&self) -> String {
        format!("{}/{}", self.model, self.template.name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotateSummary {
    pub total: usize,
    /// Already present in the output file.
    pub skipped: usize,
    pub ok: usize,
    pub format_violation: usize,
    pub transport_error: usize,
}

/// Spaces request starts at least `interval` apart.
struct RateLimiter {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateLimiter {
    fn new(per_second: Option<f64>) -> Self {
        let interval = per_second
            .filter(|r| *r > 0.0)
            .map_or(Duration::ZERO, |r| Duration::from_secs_f64(1.0 / r));
        RateLimiter {
            interval,
            next: Mutex::new(Instant::now()),
        }
    }

    fn wait(&self) {
        if self.interval.is_zero() {
            return;
        }
        let slot = {
            let mut next = self.next.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

/// Reads the records of a label file in JSON Lines form.
pub fn read_label_records(path: &Path) -> Result<Vec<LabelRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(Some(&name), i + 1, e.to_string()))?);
    }
    Ok(out)
}

fn label_one(review: &Review, client: Option<&dyn ChatClient>, cfg: &AnnotateConfig, limiter: &RateLimiter) -> Result<LabelRecord> {
    let record = |raw: String, options: UsageOptionSet, status: ParseStatus| LabelRecord {
        review_id: review.review_id.clone(),
        source: cfg.source(),
        usage_options: options,
        raw_response: raw,
        parse_status: status,
        timestamp: Utc::now(),
    };
    let Some(client) = client.filter(|_| !cfg.dry_run) else {
        return Ok(record(String::new(), UsageOptionSet::empty(), ParseStatus::FormatViolation));
    };
    let request = build_prompt(&cfg.template, &review.review_body, &cfg.model, Some(cfg.temperature))?;
    let mut attempt = 0;
    loop {
        limiter.wait();
        match client.complete(&request) {
            Ok(raw) => {
                let (options, status) = parse_response(&raw, cfg.template.style, &cfg.parse);
                return Ok(record(raw, options, status));
            }
            Err(e) if e.is_retriable() && attempt < cfg.max_retries => {
                let delay = cfg.initial_backoff * 2u32.pow(attempt);
                log::warn!("review {}: {e}; retrying in {delay:?}", review.review_id);
                std::thread::sleep(delay);
                attempt += 1;
            }
            Err(e) if e.is_retriable() => {
                log::error!("review {}: giving up after {} retries: {e}", review.review_id, cfg.max_retries);
                return Ok(record(String::new(), UsageOptionSet::empty(), ParseStatus::TransportError));
            }
            Err(e) => return Err(e),
        }
    }
}

/// Labels every review not yet present in `output`, appending one JSON line
/// per review in input order.
///
/// A non-retriable endpoint error stops the run; records completed up to
/// that point stay in `output`, and rerunning resumes after them.
pub fn annotate_corpus(
    reviews: &[Review],
    client: Option<&dyn ChatClient>,
    cfg: &AnnotateConfig,
    output: &Path,
) -> Result<AnnotateSummary> {
    if client.is_none() && !cfg.dry_run {
        return Err(Error::contract("annotation needs a chat client unless running dry"));
    }
    if cfg.concurrency == 0 {
        return Err(Error::contract("concurrency must be at least 1"));
    }
    let done: HashSet<String> = if output.exists() {
        read_label_records(output)?.into_iter().map(|r| r.review_id).collect()
    } else {
        HashSet::new()
    };
    let todo: Vec<&Review> = reviews.iter().filter(|r| !done.contains(&r.review_id)).collect();
    let mut summary = AnnotateSummary {
        total: reviews.len(),
        skipped: reviews.len() - todo.len(),
        ..Default::default()
    };

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(output)
        .map_err(|e| Error::io(output, e))?;
    let mut writer = std::io::BufWriter::new(file);
    let limiter = RateLimiter::new(cfg.requests_per_second);
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<LabelRecord>)>();

    let mut failure = None;
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..cfg.concurrency.min(todo.len().max(1)) {
            let tx = tx.clone();
            let (todo, next, abort, limiter) = (&todo, &next, &abort, &limiter);
            scope.spawn(move || loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(review) = todo.get(i) else { break };
                let result = label_one(review, client, cfg, limiter);
                if result.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Reorder buffer: write strictly in input order.
        let mut pending = BTreeMap::new();
        let mut written = 0;
        for (i, result) in rx {
            pending.insert(i, result);
            while let Some(result) = pending.remove(&written) {
                match result {
                    Ok(record) => {
                        serde_json::to_writer(&mut writer, &record)?;
                        writer.write_all(b"\n").map_err(|e| Error::io(output, e))?;
                        writer.flush().map_err(|e| Error::io(output, e))?;
                        match record.parse_status {
                            ParseStatus::Ok => summary.ok += 1,
                            ParseStatus::FormatViolation => summary.format_violation += 1,
                            ParseStatus::TransportError => summary.transport_error += 1,
                        }
                        written += 1;
                    }
                    Err(e) => {
                        failure = Some((written, e));
                        abort.store(true, Ordering::SeqCst);
                        return Ok(());
                    }
                }
            }
        }
        Ok(())
    })?;

    if let Some((written, e)) = failure {
        let class_preserving = match e {
            Error::Transport { message, retriable } => Error::Transport {
                message: format!(
                    "{message}; stopped after writing {} of {} new records to {}, rerun to resume",
                    written,
                    todo.len(),
                    output.display()
                ),
                retriable,
            },
            other => other,
        };
        return Err(class_preserving);
    }
    Ok(summary)
}
