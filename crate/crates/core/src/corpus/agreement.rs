use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set_metrics::{SetScorer, UsageOptionSet};

/// One annotator's labels, keyed by review id.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatorLabels {
    pub annotator: String,
    pub labels: BTreeMap<String, UsageOptionSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Mean S4 over every (annotator pair, review) score.
    pub mean: f64,
    /// Population standard deviation over the same scores.
    pub std: f64,
    pub annotators: Vec<String>,
    /// Per-pair mean S4; the diagonal is 1.
    pub pairwise: Vec<Vec<f64>>,
    pub n_scores: usize,
}

/// Mean pairwise S4 between annotators on a shared pool of reviews.
pub fn inter_annotator_agreement(
    label_sets: &[AnnotatorLabels],
    scorer: &SetScorer<'_>,
) -> Result<AgreementReport> {
    if label_sets.len() < 2 {
        return Err(Error::contract("agreement needs at least two annotators"));
    }
    let all_ids: BTreeSet<&str> = label_sets
        .iter()
        .flat_map(|a| a.labels.keys().map(String::as_str))
        .collect();
    let mut problems = Vec::new();
    for a in label_sets {
        let missing: Vec<&str> = all_ids
            .iter()
            .copied()
            .filter(|id| !a.labels.contains_key(*id))
            .collect();
        if !missing.is_empty() {
            problems.push(format!("{} is missing {}", a.annotator, missing.join(", ")));
        }
    }
    if !problems.is_empty() {
        return Err(Error::contract(format!(
            "annotators do not cover the same reviews: {}",
            problems.join("; ")
        )));
    }
    if all_ids.is_empty() {
        return Err(Error::contract("no labeled reviews"));
    }

    let k = label_sets.len();
    let mut pairwise = vec![vec![1.0; k]; k];
    let mut scores = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let mut pair_scores = Vec::with_capacity(all_ids.len());
            for id in &all_ids {
                pair_scores.push(scorer.s4(&label_sets[i].labels[*id], &label_sets[j].labels[*id])?);
            }
            let m = pair_scores.iter().sum::<f64>() / pair_scores.len() as f64;
            pairwise[i][j] = m;
            pairwise[j][i] = m;
            scores.extend(pair_scores);
        }
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(AgreementReport {
        mean,
        std: var.sqrt(),
        annotators: label_sets.iter().map(|a| a.annotator.clone()).collect(),
        pairwise,
        n_scores: scores.len(),
    })
}
