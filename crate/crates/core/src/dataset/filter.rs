use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::io::{read_reviews, InputFormat};
use super::Review;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Category names, compared case-insensitively.
    pub excluded_categories: Vec<String>,
    pub min_words: usize,
    pub max_words: usize,
    /// A customer with more reviews than this on one day is treated as a bot.
    pub bot_threshold: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let categories = [
            "Books",
            "Digital_Ebook_Purchase",
            "Digital_Music_Purchase",
            "Digital_Video_Download",
            "Music",
            "Video",
            "Video DVD",
            "Gift Card",
            "Health & Personal Care",
            "Personal_Care_Appliances",
        ];
        FilterConfig {
            excluded_categories: categories.iter().map(|c| c.to_string()).collect(),
            min_words: 5,
            max_words: 400,
            bot_threshold: 30,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_words == 0 {
            return Err(Error::contract("min_words must be at least 1"));
        }
        if self.max_words <= self.min_words {
            return Err(Error::contract("max_words must exceed min_words"));
        }
        Ok(())
    }
}

/// Removal counts per rule. Every input record is either kept or counted
/// under exactly one removal rule; truncations are counted separately.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input: usize,
    pub kept: usize,
    pub malformed: usize,
    pub excluded_category: usize,
    pub unverified: usize,
    pub too_short: usize,
    pub bot: usize,
    pub truncated: usize,
}

impl FilterStats {
    pub fn removed(&self) -> usize {
        self.malformed + self.excluded_category + self.unverified + self.too_short + self.bot
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterOutcome {
    Keep { review: Review, truncated: bool },
    ExcludedCategory,
    Unverified,
    TooShort,
    Bot,
}

/// The filtering rules, with per-(customer, day) counts from a pre-pass.
pub struct Filter {
    cfg: FilterConfig,
    excluded: Vec<String>,
    day_counts: HashMap<(String, NaiveDate), usize>,
}

impl Filter {
    pub fn new<'r>(cfg: FilterConfig, reviews: impl IntoIterator<Item = &'r Review>) -> Result<Self> {
        cfg.validate()?;
        let mut day_counts = HashMap::new();
        for r in reviews {
            *day_counts
                .entry((r.customer_id.clone(), r.review_date))
                .or_insert(0) += 1;
        }
        let excluded = cfg.excluded_categories.iter().map(|c| c.to_lowercase()).collect();
        Ok(Filter {
            cfg,
            excluded,
            day_counts,
        })
    }

    pub fn apply(&self, mut review: Review) -> FilterOutcome {
        if self.excluded.contains(&review.product_category.to_lowercase()) {
            return FilterOutcome::ExcludedCategory;
        }
        if !review.verified_purchase && !review.vine {
            return FilterOutcome::Unverified;
        }
        let words = word_count(&review.review_body);
        if words < self.cfg.min_words {
            return FilterOutcome::TooShort;
        }
        let key = (review.customer_id.clone(), review.review_date);
        if self.day_counts.get(&key).copied().unwrap_or(0) > self.cfg.bot_threshold {
            return FilterOutcome::Bot;
        }
        let truncated = words > self.cfg.max_words;
        if truncated {
            review.review_body = review
                .review_body
                .split_whitespace()
                .take(self.cfg.max_words)
                .collect::<Vec<_>>()
                .join(" ");
        }
        FilterOutcome::Keep { review, truncated }
    }
}

impl FilterStats {
    fn record(&mut self, outcome: &FilterOutcome) {
        self.input += 1;
        match outcome {
            FilterOutcome::Keep { truncated, .. } => {
                self.kept += 1;
                self.truncated += usize::from(*truncated);
            }
            FilterOutcome::ExcludedCategory => self.excluded_category += 1,
            FilterOutcome::Unverified => self.unverified += 1,
            FilterOutcome::TooShort => self.too_short += 1,
            FilterOutcome::Bot => self.bot += 1,
        }
    }
}

/// Applies all rules to an in-memory collection.
pub fn preprocess(reviews: Vec<Review>, cfg: &FilterConfig) -> Result<(Vec<Review>, FilterStats)> {
    let filter = Filter::new(cfg.clone(), &reviews)?;
    let mut stats = FilterStats::default();
    let mut kept = Vec::new();
    for r in reviews {
        let outcome = filter.apply(r);
        stats.record(&outcome);
        if let FilterOutcome::Keep { review, .. } = outcome {
            kept.push(review);
        }
    }
    Ok((kept, stats))
}

/// Streams `input` twice (bot counts, then filtering) and writes kept reviews
/// to `output` as JSON Lines. Malformed records are logged and skipped.
pub fn preprocess_file(
    input: &Path,
    format: Option<InputFormat>,
    cfg: &FilterConfig,
    output: &mut dyn Write,
) -> Result<FilterStats> {
    let mut counting = Vec::new();
    for r in read_reviews(input, format)?.flatten() {
        counting.push((r.customer_id, r.review_date));
    }
    let mut filter = Filter::new(cfg.clone(), std::iter::empty())?;
    for key in counting {
        *filter.day_counts.entry(key).or_insert(0) += 1;
    }

    let mut stats = FilterStats::default();
    for item in read_reviews(input, format)? {
        let review = match item {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping malformed record: {e}");
                stats.input += 1;
                stats.malformed += 1;
                continue;
            }
        };
        let outcome = filter.apply(review);
        stats.record(&outcome);
        if let FilterOutcome::Keep { review, .. } = outcome {
            serde_json::to_writer(&mut *output, &review)?;
            output
                .write_all(b"\n")
                .map_err(|e| Error::io("<output>", e))?;
        }
    }
    Ok(stats)
}
