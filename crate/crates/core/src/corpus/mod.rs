//! Corpus-level scores.
//!
//! Reviews without usage options can only score 0 or 1, so HAMS4 averages
//! the two kinds of reviews separately and combines the two class means with
//! a harmonic mean. A review whose reference sets disagree on emptiness is
//! assigned to a class by its prediction.

mod agreement;
mod significance;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use agreement::{inter_annotator_agreement, AgreementReport, AnnotatorLabels};
pub use significance::{exact_permutation_test, permutation_test, PermutationOutcome, SignificanceConfig};

use crate::error::{Error, Result};
use crate::set_metrics::{harmonic_mean, ReferenceSets, SetScorer, UsageOptionSet};

/// The per-review scoring unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub review_id: String,
    pub prediction: UsageOptionSet,
    pub references: ReferenceSets,
}

impl LabeledExample {
    pub fn new(review_id: impl Into<String>, prediction: UsageOptionSet, references: ReferenceSets) -> Self {
        LabeledExample {
            review_id: review_id.into(),
            prediction,
            references,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleClass {
    /// "No usage options".
    EmptyClass,
    UsageClass,
}

/// Class used for the HAMS4 partition.
pub fn classify_example(ex: &LabeledExample) -> ExampleClass {
    classify(&ex.prediction, &ex.references)
}

pub(crate) fn classify(prediction: &UsageOptionSet, refs: &ReferenceSets) -> ExampleClass {
    if refs.all_empty() {
        ExampleClass::EmptyClass
    } else if refs.all_non_empty() || !prediction.is_empty() {
        ExampleClass::UsageClass
    } else {
        ExampleClass::EmptyClass
    }
}

/// Per-class means and their harmonic aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassAggregate {
    pub value: f64,
    pub empty_class_mean: Option<f64>,
    pub usage_class_mean: Option<f64>,
    pub empty_class_count: usize,
    pub usage_class_count: usize,
}

/// Harmonic aggregation of per-example scores over the two classes. With
/// only one class present the aggregate is that class's mean.
pub fn aggregate_by_class<I>(scores: I) -> Result<ClassAggregate>
where
    I: IntoIterator<Item = (f64, ExampleClass)>,
{
    let (mut sum_e, mut n_e, mut sum_u, mut n_u) = (0.0, 0usize, 0.0, 0usize);
    for (s, class) in scores {
        match class {
            ExampleClass::EmptyClass => {
                sum_e += s;
                n_e += 1;
            }
            ExampleClass::UsageClass => {
                sum_u += s;
                n_u += 1;
            }
        }
    }
    let mean = |sum: f64, n: usize| (n > 0).then(|| sum / n as f64);
    let (empty, usage) = (mean(sum_e, n_e), mean(sum_u, n_u));
    let value = match (empty, usage) {
        (Some(e), Some(u)) => harmonic_mean(e, u),
        (Some(m), None) | (None, Some(m)) => m,
        (None, None) => return Err(Error::contract("cannot aggregate an empty corpus")),
    };
    Ok(ClassAggregate {
        value,
        empty_class_mean: empty,
        usage_class_mean: usage,
        empty_class_count: n_e,
        usage_class_count: n_u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub review_id: String,
    pub ms4: f64,
    pub class: ExampleClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub hams4: f64,
    pub empty_class_mean: Option<f64>,
    pub usage_class_mean: Option<f64>,
    pub empty_class_count: usize,
    pub usage_class_count: usize,
    pub classification: ClassificationScores,
    /// `None` when no review has both a non-empty prediction and a
    /// non-empty reference.
    pub mean_ms4_tp: Option<f64>,
    pub per_example: Vec<ExampleScore>,
}

fn ensure_non_empty(corpus: &[LabeledExample]) -> Result<()> {
    if corpus.is_empty() {
        Err(Error::contract("corpus is empty"))
    } else {
        Ok(())
    }
}

/// Per-example MS4, computed in parallel, in corpus order.
pub fn per_example_ms4(corpus: &[LabeledExample], scorer: &SetScorer<'_>) -> Result<Vec<f64>> {
    corpus
        .par_iter()
        .map(|ex| scorer.ms4(&ex.prediction, &ex.references))
        .collect()
}

/// HAMS4 together with the classification and true-positive scores.
pub fn hams4(corpus: &[LabeledExample], scorer: &SetScorer<'_>) -> Result<CorpusReport> {
    ensure_non_empty(corpus)?;
    let ms4 = per_example_ms4(corpus, scorer)?;
    let per_example: Vec<ExampleScore> = corpus
        .iter()
        .zip(&ms4)
        .map(|(ex, &s)| ExampleScore {
            review_id: ex.review_id.clone(),
            ms4: s,
            class: classify_example(ex),
        })
        .collect();
    let agg = aggregate_by_class(per_example.iter().map(|e| (e.ms4, e.class)))?;
    Ok(CorpusReport {
        hams4: agg.value,
        empty_class_mean: agg.empty_class_mean,
        usage_class_mean: agg.usage_class_mean,
        empty_class_count: agg.empty_class_count,
        usage_class_count: agg.usage_class_count,
        classification: classification_scores(corpus)?,
        mean_ms4_tp: mean_ms4_tp(corpus, scorer)?,
        per_example,
    })
}

/// Treats "has usage options" as the positive label. A prediction counts as
/// correct when its emptiness matches at least one reference set.
pub fn classification_scores(corpus: &[LabeledExample]) -> Result<ClassificationScores> {
    ensure_non_empty(corpus)?;
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for ex in corpus {
        let positive = !ex.prediction.is_empty();
        let matches = ex.references.iter().any(|r| r.is_empty() != positive);
        match (positive, matches) {
            (true, true) => tp += 1,
            (false, true) => tn += 1,
            (true, false) => fp += 1,
            (false, false) => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(ClassificationScores {
        f1: harmonic_mean(precision, recall),
        precision,
        recall,
        tp,
        fp,
        fn_,
        tn,
    })
}

/// Mean MS4 over reviews where the prediction and at least one reference set
/// are non-empty, scoring against the non-empty reference sets only.
pub fn mean_ms4_tp(corpus: &[LabeledExample], scorer: &SetScorer<'_>) -> Result<Option<f64>> {
    let scores: Vec<f64> = corpus
        .par_iter()
        .filter(|ex| !ex.prediction.is_empty() && ex.references.any_non_empty())
        .map(|ex| {
            let refs = ReferenceSets::new(
                ex.references.iter().filter(|r| !r.is_empty()).cloned().collect(),
            )?;
            scorer.ms4(&ex.prediction, &refs)
        })
        .collect::<Result<_>>()?;
    Ok((!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::similarity::ExactMatch;

    #[test]
    fn classification_rule() {
        let ex = |p: &[&str], r: &[&[&str]]| LabeledExample::new("x", set(p), refs(r));
        assert_eq!(classify_example(&ex(&["a"], &[&[]])), ExampleClass::EmptyClass);
        assert_eq!(classify_example(&ex(&[], &[&[], &["a"]])), ExampleClass::EmptyClass);
        assert_eq!(classify_example(&ex(&["z"], &[&[], &["a"]])), ExampleClass::UsageClass);
        assert_eq!(classify_example(&ex(&[], &[&["a"]])), ExampleClass::UsageClass);
    }

    #[test]
    fn four_review_fixture() {
        let scorer = SetScorer::new(&ExactMatch);
        let report = hams4(&four_reviews(), &scorer).unwrap();
        assert_eq!(report.hams4, 0.5);
        assert_eq!(report.empty_class_mean, Some(0.5));
        assert_eq!(report.usage_class_mean, Some(0.5));
        assert_eq!((report.empty_class_count, report.usage_class_count), (2, 2));
        let c = report.classification;
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (1, 1, 1, 1));
        assert_eq!(c.f1, 0.5);
        assert_eq!(report.mean_ms4_tp, Some(1.0));
        let ms4: Vec<f64> = report.per_example.iter().map(|e| e.ms4).collect();
        assert_eq!(ms4, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn perfect_and_zero_usage() {
        let scorer = SetScorer::new(&ExactMatch);
        let perfect = vec![
            LabeledExample::new("1", set(&["a"]), refs(&[&["a"]])),
            LabeledExample::new("2", set(&[]), refs(&[&[]])),
        ];
        let r = hams4(&perfect, &scorer).unwrap();
        assert_eq!(r.hams4, 1.0);
        assert_eq!(r.classification.f1, 1.0);

        let zero_usage = vec![
            LabeledExample::new("1", set(&["q"]), refs(&[&["a"]])),
            LabeledExample::new("2", set(&[]), refs(&[&[]])),
        ];
        assert_eq!(hams4(&zero_usage, &scorer).unwrap().hams4, 0.0);
    }

    #[test]
    fn single_class_corpus_uses_that_mean() {
        let scorer = SetScorer::new(&ExactMatch);
        let only_usage = vec![
            LabeledExample::new("1", set(&["a"]), refs(&[&["a"]])),
            LabeledExample::new("2", set(&["x"]), refs(&[&["b"]])),
        ];
        let r = hams4(&only_usage, &scorer).unwrap();
        assert_eq!(r.hams4, 0.5);
        assert_eq!(r.empty_class_mean, None);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let scorer = SetScorer::new(&ExactMatch);
        assert!(matches!(hams4(&[], &scorer), Err(Error::Contract(_))));
        assert!(classification_scores(&[]).is_err());
    }

    #[test]
    fn all_empty_predictions_on_usage_references() {
        let corpus = vec![
            LabeledExample::new("1", set(&[]), refs(&[&["a"]])),
            LabeledExample::new("2", set(&[]), refs(&[&["b"]])),
        ];
        let c = classification_scores(&corpus).unwrap();
        assert_eq!((c.recall, c.f1), (0.0, 0.0));
    }

    #[test]
    fn mean_ms4_tp_cases() {
        let scorer = SetScorer::new(&ExactMatch);
        let none = vec![LabeledExample::new("1", set(&[]), refs(&[&["a"]]))];
        assert_eq!(mean_ms4_tp(&none, &scorer).unwrap(), None);
        let single = vec![LabeledExample::new("1", set(&["a"]), refs(&[&["a"]]))];
        assert_eq!(mean_ms4_tp(&single, &scorer).unwrap(), Some(1.0));
        // the empty alternative would otherwise not matter, but must be skipped
        let mixed = vec![LabeledExample::new("1", set(&["z"]), refs(&[&[], &["a"]]))];
        assert_eq!(mean_ms4_tp(&mixed, &scorer).unwrap(), Some(0.0));
    }

    #[test]
    fn mixed_reference_counts_either_class_as_correct() {
        let corpus = vec![
            LabeledExample::new("1", set(&[]), refs(&[&[], &["a"]])),
            LabeledExample::new("2", set(&["z"]), refs(&[&[], &["a"]])),
        ];
        let c = classification_scores(&corpus).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (1, 0, 0, 1));
    }
}
