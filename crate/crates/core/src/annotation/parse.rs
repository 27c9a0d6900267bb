use serde::{Deserialize, Serialize};

use super::prompts::PromptStyle;
use crate::set_metrics::UsageOptionSet;

pub const NO_USAGE_OPTIONS: &str = "No usage options";
const RESULT_MARKER: &str = "Result:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    FormatViolation,
    /// No response was obtained; the request failed after all retries.
    TransportError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParseConfig {
    /// Options longer than this many whitespace tokens are prose, not labels.
    pub max_option_tokens: usize,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig { max_option_tokens: 15 }
    }
}

fn is_sentinel(text: &str) -> bool {
    text.trim_matches(|c: char| !c.is_alphanumeric())
        .eq_ignore_ascii_case(NO_USAGE_OPTIONS)
}

/// Extracts the usage options from a model answer.
pub fn parse_response(raw: &str, style: PromptStyle, cfg: &ParseConfig) -> (UsageOptionSet, ParseStatus) {
    let violation = (UsageOptionSet::empty(), ParseStatus::FormatViolation);
    let text = match style {
        PromptStyle::Plain => raw,
        PromptStyle::ChainOfThought => match raw.rfind(RESULT_MARKER) {
            Some(pos) => &raw[pos + RESULT_MARKER.len()..],
            None => return violation,
        },
    };
    let text = text.trim();
    if is_sentinel(text) {
        return (UsageOptionSet::empty(), ParseStatus::Ok);
    }
    let options = UsageOptionSet::new(text.split(';'));
    if options.is_empty()
        || options
            .iter()
            .any(|o| o.split_whitespace().count() > cfg.max_option_tokens)
    {
        return violation;
    }
    (options, ParseStatus::Ok)
}

/// The answer format the prompts ask for.
pub fn render_options(set: &UsageOptionSet) -> String {
    if set.is_empty() {
        NO_USAGE_OPTIONS.to_owned()
    } else {
        set.options().join("; ")
    }
}
