//! FLOPs break-even between labeling with a large model and serving a small
//! fine-tuned one.
//!
//! Training the small model costs its own training FLOPs plus the large-model
//! requests spent annotating its training data. Every request afterwards
//! saves the difference between the two per-request inference costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean generated tokens per labeling request.
pub const TOKENS_PER_REQUEST: f64 = 5.5065;
/// Labeled training examples.
pub const ANNOTATION_REQUESTS: u64 = 2000;
/// Inference cost of the fine-tuned small model per request.
pub const SMALL_MODEL_FLOPS_PER_REQUEST: f64 = 0.206e12;
/// Small-model training FLOPs excluding annotation: the 17.5e15 total of the
/// 0.35e12 FLOPs/token scenario minus its annotation requests.
pub const BASE_TRAINING_FLOPS: f64 =
    17.5e15 - ANNOTATION_REQUESTS as f64 * 0.35e12 * TOKENS_PER_REQUEST;

/// Forward-pass FLOPs per token, `2N`.
pub fn flops_per_token(params_count: f64) -> Result<f64> {
    if params_count > 0.0 && params_count.is_finite() {
        Ok(2.0 * params_count)
    } else {
        Err(Error::contract(format!("parameter count must be positive, got {params_count}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityModel {
    pub llm_flops_per_token: f64,
    pub tokens_per_request: f64,
    pub n_annotation_requests: u64,
    pub base_training_flops: f64,
    pub small_model_flops_per_request: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "requests")]
pub enum BreakEven {
    Requests(u64),
    /// The small model is not cheaper per request.
    Never,
}

impl std::fmt::Display for BreakEven {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BreakEven::Requests(n) => write!(f, "{n} requests"),
            BreakEven::Never => f.write_str("never"),
        }
    }
}

impl FeasibilityModel {
    /// Default model around a given large-model per-token cost.
    pub fn with_llm_flops_per_token(llm_flops_per_token: f64) -> Self {
        FeasibilityModel {
            llm_flops_per_token,
            tokens_per_request: TOKENS_PER_REQUEST,
            n_annotation_requests: ANNOTATION_REQUESTS,
            base_training_flops: BASE_TRAINING_FLOPS,
            small_model_flops_per_request: SMALL_MODEL_FLOPS_PER_REQUEST,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("llm_flops_per_token", self.llm_flops_per_token),
            ("tokens_per_request", self.tokens_per_request),
            ("base_training_flops", self.base_training_flops),
            ("small_model_flops_per_request", self.small_model_flops_per_request),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::contract(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn llm_request_cost(&self) -> f64 {
        self.llm_flops_per_token * self.tokens_per_request
    }

    /// Annotation plus training.
    pub fn total_training_cost(&self) -> f64 {
        self.base_training_flops + self.n_annotation_requests as f64 * self.llm_request_cost()
    }

    /// Requests after which the small model has used fewer FLOPs in total.
    pub fn break_even(&self) -> BreakEven {
        let saving = self.llm_request_cost() - self.small_model_flops_per_request;
        if saving <= 0.0 {
            BreakEven::Never
        } else {
            BreakEven::Requests((self.total_training_cost() / saving).ceil() as u64)
        }
    }

    pub fn summary(&self) -> FeasibilityRow {
        FeasibilityRow {
            llm_flops_per_token: self.llm_flops_per_token,
            llm_request_flops: self.llm_request_cost(),
            training_flops: self.total_training_cost(),
            small_model_request_flops: self.small_model_flops_per_request,
            break_even: self.break_even(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub llm_flops_per_token: f64,
    pub llm_request_flops: f64,
    pub training_flops: f64,
    pub small_model_request_flops: f64,
    pub break_even: BreakEven,
}

/// Per-token costs of the standard scenarios: a 175B-parameter model scaled
/// by 1, 2, 4 and 8, and a 560e12 FLOPs/token estimate.
pub fn standard_scenarios() -> Vec<FeasibilityModel> {
    let base = 0.35e12;
    [base, 2.0 * base, 4.0 * base, 8.0 * base, 560e12]
        .into_iter()
        .map(FeasibilityModel::with_llm_flops_per_token)
        .collect()
}
