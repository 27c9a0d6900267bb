//! Review ingestion, filtering and splitting.

mod filter;
mod html;
mod io;
mod split;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use filter::{preprocess, preprocess_file, word_count, FilterConfig, FilterOutcome, FilterStats, Filter};
pub use html::strip_html;
pub use io::{read_reviews, write_reviews_jsonl, InputFormat, ReviewReader};
pub use split::{split, SplitSizes, Splits};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub customer_id: String,
    pub product_title: String,
    pub product_category: String,
    pub review_headline: String,
    pub review_body: String,
    pub review_date: NaiveDate,
    pub verified_purchase: bool,
    pub vine: bool,
}

#[cfg(test)]
pub(crate) fn sample_review(id: &str, body: &str) -> Review {
    Review {
        review_id: id.into(),
        customer_id: "c1".into(),
        product_title: "Portable grill".into(),
        product_category: "Outdoors".into(),
        review_headline: "Nice".into(),
        review_body: body.into(),
        review_date: NaiveDate::from_ymd_opt(2015, 6, 1).unwrap(),
        verified_purchase: true,
        vine: false,
    }
}
