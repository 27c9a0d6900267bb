use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Review;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSizes {
    pub prompt_selection: usize,
    pub evaluation: usize,
    /// Training pool; `validation` of it is held out.
    pub training_pool: usize,
    pub validation: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes {
            prompt_selection: 252,
            evaluation: 2000,
            training_pool: 2000,
            validation: 200,
        }
    }
}

impl SplitSizes {
    pub fn required(&self) -> usize {
        self.prompt_selection + self.evaluation + self.training_pool
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub prompt_selection: Vec<Review>,
    pub evaluation: Vec<Review>,
    pub train: Vec<Review>,
    pub validation: Vec<Review>,
}

/// Uniform random disjoint splits, deterministic in `seed`. Reviews beyond
/// the required count are left out.
pub fn split(reviews: Vec<Review>, sizes: SplitSizes, seed: u64) -> Result<Splits> {
    if sizes.validation > sizes.training_pool {
        return Err(Error::contract("validation split is larger than the training pool"));
    }
    let required = sizes.required();
    if reviews.len() < required {
        return Err(Error::contract(format!(
            "splitting needs at least {required} reviews, got {}",
            reviews.len()
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = reviews.iter().find(|r| !seen.insert(r.review_id.as_str())) {
        return Err(Error::contract(format!("duplicate review_id {}", dup.review_id)));
    }
    let mut reviews = reviews;
    reviews.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut it = reviews.into_iter();
    let prompt_selection: Vec<Review> = it.by_ref().take(sizes.prompt_selection).collect();
    let evaluation: Vec<Review> = it.by_ref().take(sizes.evaluation).collect();
    let validation: Vec<Review> = it.by_ref().take(sizes.validation).collect();
    let train: Vec<Review> = it.take(sizes.training_pool - sizes.validation).collect();
    Ok(Splits {
        prompt_selection,
        evaluation,
        train,
        validation,
    })
}
