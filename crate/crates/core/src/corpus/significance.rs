//! Paired permutation test on the HAMS4 difference between two systems.
//!
//! Both systems predict on the same reviews. Each resample swaps the two
//! systems' predictions on every review independently with probability ½
//! and recomputes `HAMS4(A) - HAMS4(B)`. The two-sided p-value uses the
//! add-one estimator `(1 + #{|t| ≥ |t_obs|}) / (R + 1)`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate_by_class, classify, per_example_ms4, ExampleClass, LabeledExample};
use crate::error::{Error, Result};
use crate::set_metrics::SetScorer;

/// Statistics within this distance of the observed value count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignificanceConfig {
    pub resamples: usize,
    pub alpha: f64,
    /// Number of tests the family-wise alpha is divided over.
    pub corrections: usize,
    pub seed: u64,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig {
            resamples: 10_000,
            alpha: 0.05,
            corrections: 7,
            seed: 0,
        }
    }
}

impl SignificanceConfig {
    pub fn alpha_corrected(&self) -> f64 {
        self.alpha / self.corrections as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(Error::contract("resamples must be at least 1"));
        }
        if self.corrections == 0 {
            return Err(Error::contract("corrections must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::contract(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationOutcome {
    pub hams4_a: f64,
    pub hams4_b: f64,
    pub observed_diff: f64,
    pub p_value: f64,
    pub alpha_corrected: f64,
    pub significant: bool,
    pub resamples: usize,
}

/// One review's score and class under each system.
#[derive(Debug, Clone, Copy)]
struct PairedScore {
    a: (f64, ExampleClass),
    b: (f64, ExampleClass),
}

pub fn permutation_test(
    corpus_a: &[LabeledExample],
    corpus_b: &[LabeledExample],
    cfg: &SignificanceConfig,
    scorer: &SetScorer<'_>,
) -> Result<PermutationOutcome> {
    cfg.validate()?;
    permutation_test_scores(&paired_scores(corpus_a, corpus_b, scorer)?, cfg)
}

/// Exact p-value of the same test, enumerating all 2^n swap patterns.
/// Limited to 20 reviews.
pub fn exact_permutation_test(
    corpus_a: &[LabeledExample],
    corpus_b: &[LabeledExample],
    scorer: &SetScorer<'_>,
) -> Result<f64> {
    if corpus_a.len() > 20 {
        return Err(Error::contract("exact enumeration is limited to 20 reviews"));
    }
    exact_p_value(&paired_scores(corpus_a, corpus_b, scorer)?)
}

fn paired_scores(
    corpus_a: &[LabeledExample],
    corpus_b: &[LabeledExample],
    scorer: &SetScorer<'_>,
) -> Result<Vec<PairedScore>> {
    let corpus_b = align(corpus_a, corpus_b)?;
    let ms_a = per_example_ms4(corpus_a, scorer)?;
    let ms_b = per_example_ms4(&corpus_b, scorer)?;
    Ok(corpus_a
        .iter()
        .zip(&corpus_b)
        .zip(ms_a.iter().zip(&ms_b))
        .map(|((ea, eb), (&sa, &sb))| PairedScore {
            a: (sa, classify(&ea.prediction, &ea.references)),
            b: (sb, classify(&eb.prediction, &eb.references)),
        })
        .collect())
}

/// Reorders `b` to follow `a`'s review order, checking the paired design.
fn align(a: &[LabeledExample], b: &[LabeledExample]) -> Result<Vec<LabeledExample>> {
    if a.is_empty() {
        return Err(Error::contract("corpus is empty"));
    }
    let by_id: HashMap<&str, &LabeledExample> = b.iter().map(|e| (e.review_id.as_str(), e)).collect();
    if by_id.len() != b.len() || a.len() != b.len() {
        return Err(Error::contract("paired corpora differ in size or contain duplicate review_ids"));
    }
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(a.len());
    for ea in a {
        match by_id.get(ea.review_id.as_str()) {
            Some(eb) if eb.references == ea.references => out.push((*eb).clone()),
            Some(_) => {
                return Err(Error::contract(format!(
                    "review {} has different references in the two corpora",
                    ea.review_id
                )))
            }
            None => missing.push(ea.review_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::contract(format!(
            "review_ids missing from the second corpus: {}",
            missing.join(", ")
        )));
    }
    Ok(out)
}

fn statistic(paired: &[PairedScore], swap: impl Fn(usize) -> bool) -> Result<(f64, f64)> {
    let a = aggregate_by_class(
        paired
            .iter()
            .enumerate()
            .map(|(i, p)| if swap(i) { p.b } else { p.a }),
    )?;
    let b = aggregate_by_class(
        paired
            .iter()
            .enumerate()
            .map(|(i, p)| if swap(i) { p.a } else { p.b }),
    )?;
    Ok((a.value, b.value))
}

fn resample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Permutation test on precomputed per-review scores.
fn permutation_test_scores(
    paired: &[PairedScore],
    cfg: &SignificanceConfig,
) -> Result<PermutationOutcome> {
    cfg.validate()?;
    let (hams4_a, hams4_b) = statistic(paired, |_| false)?;
    let observed = hams4_a - hams4_b;
    let threshold = observed.abs() - TIE_TOLERANCE;
    let extreme: usize = (0..cfg.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = resample_rng(cfg.seed, r);
            let swaps: Vec<bool> = (0..paired.len()).map(|_| rng.random::<bool>()).collect();
            let (a, b) = statistic(paired, |i| swaps[i])?;
            Ok(usize::from((a - b).abs() >= threshold))
        })
        .sum::<Result<usize>>()?;
    let p_value = (1 + extreme) as f64 / (cfg.resamples + 1) as f64;
    let alpha_corrected = cfg.alpha_corrected();
    Ok(PermutationOutcome {
        hams4_a,
        hams4_b,
        observed_diff: observed,
        p_value,
        alpha_corrected,
        significant: p_value < alpha_corrected,
        resamples: cfg.resamples,
    })
}

fn exact_p_value(paired: &[PairedScore]) -> Result<f64> {
    let (a, b) = statistic(paired, |_| false)?;
    let threshold = (a - b).abs() - TIE_TOLERANCE;
    let total = 1usize << paired.len();
    let mut extreme = 0usize;
    for mask in 0..total {
        let (x, y) = statistic(paired, |i| mask >> i & 1 == 1)?;
        if (x - y).abs() >= threshold {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{refs, set};
    use crate::similarity::ExactMatch;

    fn perfect_vs_wrong(n: usize) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            let id = format!("r{i}");
            if i % 2 == 0 {
                let opt = format!("use {i}");
                let r = refs(&[&[opt.as_str()]]);
                a.push(LabeledExample::new(&id, set(&[opt.as_str()]), r.clone()));
                b.push(LabeledExample::new(&id, set(&[]), r));
            } else {
                let r = refs(&[&[]]);
                a.push(LabeledExample::new(&id, set(&[]), r.clone()));
                b.push(LabeledExample::new(&id, set(&["wrong"]), r));
            }
        }
        (a, b)
    }

    #[test]
    fn identical_corpora_give_p_one() {
        let scorer = SetScorer::new(&ExactMatch);
        let (a, _) = perfect_vs_wrong(12);
        let cfg = SignificanceConfig {
            resamples: 500,
            ..Default::default()
        };
        let out = permutation_test(&a, &a, &cfg, &scorer).unwrap();
        assert_eq!(out.observed_diff, 0.0);
        assert_eq!(out.p_value, 1.0);
        assert!(!out.significant);
    }

    #[test]
    fn extreme_difference_is_significant() {
        let scorer = SetScorer::new(&ExactMatch);
        let (a, b) = perfect_vs_wrong(20);
        let cfg = SignificanceConfig::default();
        let out = permutation_test(&a, &b, &cfg, &scorer).unwrap();
        assert_eq!(out.observed_diff, 1.0);
        assert!(out.p_value < 0.05 / 7.0);
        assert!(out.significant);
    }

    #[test]
    fn monte_carlo_tracks_exact_enumeration() {
        let scorer = SetScorer::new(&ExactMatch);
        let (a, b) = perfect_vs_wrong(10);
        let exact = exact_permutation_test(&a, &b, &scorer).unwrap();
        // only the identity and the full swap reach |diff| = 1
        assert!((exact - 2.0 / 1024.0).abs() < 1e-15);
        let mc = permutation_test(&a, &b, &SignificanceConfig::default(), &scorer).unwrap();
        assert!((mc.p_value - exact).abs() < 0.005, "mc {} exact {exact}", mc.p_value);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let scorer = SetScorer::new(&ExactMatch);
        let (a, mut b) = perfect_vs_wrong(14);
        // make the comparison non-degenerate
        b[0].prediction = a[0].prediction.clone();
        b[3].prediction = a[3].prediction.clone();
        let cfg = SignificanceConfig {
            resamples: 2000,
            seed: 42,
            ..Default::default()
        };
        let p1 = permutation_test(&a, &b, &cfg, &scorer).unwrap().p_value;
        let p2 = permutation_test(&a, &b, &cfg, &scorer).unwrap().p_value;
        assert_eq!(p1, p2);
    }

    #[test]
    fn unpaired_inputs_are_rejected() {
        let scorer = SetScorer::new(&ExactMatch);
        let (a, mut b) = perfect_vs_wrong(4);
        b[1].review_id = "other".into();
        let err = permutation_test(&a, &b, &SignificanceConfig::default(), &scorer).unwrap_err();
        assert!(matches!(err, Error::Contract(ref m) if m.contains("r1")));

        let (a, mut b) = perfect_vs_wrong(4);
        b[0].references = refs(&[&["different"]]);
        assert!(permutation_test(&a, &b, &SignificanceConfig::default(), &scorer).is_err());
    }

    #[test]
    fn order_of_second_corpus_does_not_matter() {
        let scorer = SetScorer::new(&ExactMatch);
        let (a, b) = perfect_vs_wrong(8);
        let mut reversed = b.clone();
        reversed.reverse();
        let cfg = SignificanceConfig {
            resamples: 300,
            seed: 7,
            ..Default::default()
        };
        let x = permutation_test(&a, &b, &cfg, &scorer).unwrap();
        let y = permutation_test(&a, &reversed, &cfg, &scorer).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = SignificanceConfig::default();
        assert_eq!(cfg.resamples, 10_000);
        assert!((cfg.alpha_corrected() - 0.00714).abs() < 1e-5);
        assert!(SignificanceConfig { resamples: 0, ..cfg }.validate().is_err());
    }
}
