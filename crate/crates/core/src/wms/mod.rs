//! Word mover's similarity between usage option sets.
//!
//! A variant of the word mover's distance: each unit carries a weight
//! proportional to its average distance `1 - sim` to the units of its own set,
//! and moving mass between units costs `-ln sim`, with `sim` floored at
//! `sim_floor`. The similarity is `-ln` of the optimal transport cost.

mod transport;

use serde::{Deserialize, Serialize};

pub use transport::{solve_transport, TransportProblem, TransportSolution};

use crate::corpus::{aggregate_by_class, classify_example, ClassAggregate, LabeledExample};
use crate::error::{Error, Result};
use crate::set_metrics::{ReferenceSets, UsageOptionSet, WEIGHT_EPSILON};
use crate::similarity::Similarity;

/// Distances below this are treated as this value before taking `-ln`.
pub const WMD_FLOOR: f64 = 1e-9;

/// What a transported "word" is.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WmsUnit {
    /// Whole usage option strings.
    #[default]
    UsageOption,
    /// Distinct whitespace-separated tokens across all options of the set.
    WhitespaceToken,
}

impl std::str::FromStr for WmsUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "usage-option" => Ok(WmsUnit::UsageOption),
            "whitespace-token" => Ok(WmsUnit::WhitespaceToken),
            other => Err(Error::contract(format!("unknown WMS unit {other:?}"))),
        }
    }
}

/// How scores against several reference sets are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiRef {
    #[default]
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WmsConfig {
    pub sim_floor: f64,
    pub unit: WmsUnit,
    pub multi_ref: MultiRef,
    /// Clamp per-reference scores to [0, 1].
    pub clamp: bool,
}

impl Default for WmsConfig {
    fn default() -> Self {
        WmsConfig {
            sim_floor: 1e-6,
            unit: WmsUnit::UsageOption,
            multi_ref: MultiRef::Max,
            clamp: true,
        }
    }
}

impl WmsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sim_floor > 0.0 && self.sim_floor < 1.0 {
            Ok(())
        } else {
            Err(Error::contract(format!("sim_floor {} outside (0, 1)", self.sim_floor)))
        }
    }
}

/// Units of `set` under the configured granularity.
pub fn extract_units(set: &UsageOptionSet, unit: WmsUnit) -> Vec<String> {
    match unit {
        WmsUnit::UsageOption => set.options().to_vec(),
        WmsUnit::WhitespaceToken => {
            let mut out: Vec<String> = Vec::new();
            for tok in set.iter().flat_map(|o| o.split_whitespace()) {
                if !out.iter().any(|t| t == tok) {
                    out.push(tok.to_owned());
                }
            }
            out
        }
    }
}

pub struct WmsScorer<'a> {
    sim: &'a dyn Similarity,
    cfg: WmsConfig,
}

impl<'a> WmsScorer<'a> {
    pub fn new(sim: &'a dyn Similarity, cfg: WmsConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(WmsScorer { sim, cfg })
    }

    pub fn config(&self) -> &WmsConfig {
        &self.cfg
    }

    /// Normalized average distance of each unit to its own set, self included.
    pub fn unit_weights(&self, units: &[String]) -> Result<Vec<f64>> {
        if units.is_empty() {
            return Err(Error::contract("unit weights need at least one unit"));
        }
        let m = self.sim.matrix(units, units)?;
        let n = units.len() as f64;
        let raw: Vec<f64> = (0..m.rows())
            .map(|i| m.row(i).iter().map(|s| 1.0 - s).sum::<f64>() / n)
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(if total < WEIGHT_EPSILON {
            vec![1.0 / n; units.len()]
        } else {
            raw.iter().map(|w| w / total).collect()
        })
    }

    /// Optimal transport cost between two non-empty sets.
    pub fn wmd(&self, pred: &UsageOptionSet, reference: &UsageOptionSet) -> Result<f64> {
        let a = extract_units(pred, self.cfg.unit);
        let b = extract_units(reference, self.cfg.unit);
        if a.is_empty() || b.is_empty() {
            return Err(Error::contract("WMD is undefined for empty sets"));
        }
        let sims = self.sim.matrix(&a, &b)?;
        let cost = (0..a.len())
            .map(|i| {
                sims.row(i)
                    .iter()
                    .map(|&s| (-s.max(self.cfg.sim_floor).ln()).max(0.0))
                    .collect()
            })
            .collect();
        let problem = TransportProblem::new(self.unit_weights(&a)?, self.unit_weights(&b)?, cost)?;
        Ok(solve_transport(&problem)?.objective)
    }

    /// Score against a single reference set.
    pub fn wms(&self, pred: &UsageOptionSet, reference: &UsageOptionSet) -> Result<f64> {
        let has_units = |s: &UsageOptionSet| !extract_units(s, self.cfg.unit).is_empty();
        match (has_units(pred), has_units(reference)) {
            (false, false) => return Ok(1.0),
            (true, false) | (false, true) => return Ok(0.0),
            (true, true) => {}
        }
        let raw = -self.wmd(pred, reference)?.max(WMD_FLOOR).ln();
        Ok(if self.cfg.clamp { raw.clamp(0.0, 1.0) } else { raw })
    }

    pub fn wms_example(&self, pred: &UsageOptionSet, refs: &ReferenceSets) -> Result<f64> {
        if refs.is_empty() {
            return Err(Error::contract("WMS needs at least one reference set"));
        }
        match self.cfg.multi_ref {
            MultiRef::Max => {
                let mut best = f64::NEG_INFINITY;
                for r in refs.iter() {
                    best = best.max(self.wms(pred, r)?);
                }
                Ok(best)
            }
        }
    }
}

/// Per-example WMS in corpus order.
pub fn per_example_wms(corpus: &[LabeledExample], scorer: &WmsScorer<'_>) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    corpus
        .par_iter()
        .map(|ex| scorer.wms_example(&ex.prediction, &ex.references))
        .collect()
}

/// Corpus WMS with the same class partition and harmonic aggregation as HAMS4.
pub fn corpus_wms(corpus: &[LabeledExample], scorer: &WmsScorer<'_>) -> Result<ClassAggregate> {
    if corpus.is_empty() {
        return Err(Error::contract("corpus is empty"));
    }
    let scores = per_example_wms(corpus, scorer)?;
    aggregate_by_class(corpus.iter().zip(scores).map(|(ex, s)| (s, classify_example(ex))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{four_reviews, refs, set};
    use crate::embedding::HashingEmbedder;
    use crate::similarity::{EmbeddingSimilarity, ExactMatch, SimilarityConfig};
    use proptest::prelude::*;

    fn exact() -> WmsScorer<'static> {
        WmsScorer::new(&ExactMatch, WmsConfig::default()).unwrap()
    }

    #[test]
    fn unit_weight_examples() {
        let s = exact();
        assert_eq!(s.unit_weights(&["a".into()]).unwrap(), vec![1.0]);
        assert_eq!(s.unit_weights(&["a".into(), "b".into()]).unwrap(), vec![0.5, 0.5]);
        let w = s.unit_weights(&["a".into(), "b".into(), "c".into()]).unwrap();
        assert!(w.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert!(s.unit_weights(&[]).is_err());
    }

    #[test]
    fn disjoint_singletons_hit_the_floor() {
        let s = exact();
        let d = s.wmd(&set(&["a"]), &set(&["b"])).unwrap();
        assert!((d - 13.815_510_557_964_274).abs() < 1e-12);
        let raw = WmsScorer::new(&ExactMatch, WmsConfig { clamp: false, ..Default::default() }).unwrap();
        let w = raw.wms(&set(&["a"]), &set(&["b"])).unwrap();
        assert!((w - -(13.815_510_557_964_274f64).ln()).abs() < 1e-12);
        assert!((w + 2.626).abs() < 1e-3);
        assert_eq!(s.wms(&set(&["a"]), &set(&["b"])).unwrap(), 0.0);
    }

    #[test]
    fn singleton_cost_is_neg_log_sim() {
        let sim = EmbeddingSimilarity::new(HashingEmbedder::new(), Default::default());
        let s = WmsScorer::new(&sim, WmsConfig::default()).unwrap();
        let (a, b) = ("charging a phone", "charging phones");
        let expected = -sim.sim(a, b).unwrap().max(1e-6).ln();
        assert!((s.wmd(&set(&[a]), &set(&[b])).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_sets() {
        let s = exact();
        let a = set(&["grilling", "smoking meat", "camping"]);
        assert_eq!(s.wmd(&a, &a).unwrap(), 0.0);
        let raw = WmsScorer::new(&ExactMatch, WmsConfig { clamp: false, ..Default::default() }).unwrap();
        assert!((raw.wms(&a, &a).unwrap() - 20.723_265_836_946_41).abs() < 1e-9);
        assert_eq!(s.wms(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn empty_conventions_and_max() {
        let s = exact();
        assert_eq!(s.wms(&set(&[]), &set(&[])).unwrap(), 1.0);
        assert_eq!(s.wms(&set(&["a"]), &set(&[])).unwrap(), 0.0);
        assert_eq!(s.wms(&set(&[]), &set(&["a"])).unwrap(), 0.0);
        assert!(s.wmd(&set(&[]), &set(&["a"])).is_err());
        assert_eq!(s.wms_example(&set(&["a"]), &refs(&[&["b"], &["a"]])).unwrap(), 1.0);
        assert_eq!(s.wms_example(&set(&[]), &refs(&[&["b"], &[]])).unwrap(), 1.0);
    }

    #[test]
    fn whitespace_units() {
        let units = extract_units(&set(&["smoke meat", "smoke fish"]), WmsUnit::WhitespaceToken);
        assert_eq!(units, vec!["smoke", "meat", "fish"]);
        let cfg = WmsConfig {
            unit: WmsUnit::WhitespaceToken,
            ..Default::default()
        };
        let s = WmsScorer::new(&ExactMatch, cfg).unwrap();
        assert_eq!(s.wmd(&set(&["smoke meat"]), &set(&["meat smoke"])).unwrap(), 0.0);
        assert_eq!("whitespace-token".parse::<WmsUnit>().unwrap(), WmsUnit::WhitespaceToken);
        assert!("words".parse::<WmsUnit>().is_err());
    }

    #[test]
    fn corpus_fixture() {
        let s = exact();
        assert_eq!(corpus_wms(&four_reviews(), &s).unwrap().value, 0.5);
        let perfect: Vec<LabeledExample> = four_reviews()
            .into_iter()
            .map(|mut ex| {
                ex.prediction = ex.references.sets()[0].clone();
                ex
            })
            .collect();
        assert_eq!(corpus_wms(&perfect, &s).unwrap().value, 1.0);
        assert!(corpus_wms(&[], &s).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(WmsScorer::new(&ExactMatch, WmsConfig { sim_floor: 0.0, ..Default::default() }).is_err());
        assert!(WmsScorer::new(&ExactMatch, WmsConfig { sim_floor: 1.0, ..Default::default() }).is_err());
        let cfg: WmsConfig = serde_json::from_str(r#"{"unit":"whitespace-token"}"#).unwrap();
        assert_eq!(cfg.sim_floor, 1e-6);
        assert!(cfg.clamp);
    }

    fn option_set() -> impl Strategy<Value = UsageOptionSet> {
        let words = prop_oneof![
            Just("grill"),
            Just("grilling steaks"),
            Just("camping"),
            Just("camp stove"),
            Just("charging phones"),
            Just("phone charging"),
            Just("gift"),
            Just("travel"),
        ];
        proptest::collection::vec(words, 1..=4).prop_map(UsageOptionSet::new)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn wmd_properties(a in option_set(), b in option_set(), lo in 1e-8f64..1e-3, bump in 1.0f64..100.0) {
            let sim = SimilarityConfig::default().build().unwrap();
            let s = WmsScorer::new(sim.as_ref(), WmsConfig::default()).unwrap();
            prop_assert!(s.wmd(&a, &a).unwrap().abs() < 1e-12);
            let ab = s.wmd(&a, &b).unwrap();
            let ba = s.wmd(&b, &a).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-9);
            let w = s.wms_example(&a, &ReferenceSets::single(b.clone())).unwrap();
            prop_assert!((0.0..=1.0).contains(&w));

            let low = WmsScorer::new(sim.as_ref(), WmsConfig { sim_floor: lo, ..Default::default() }).unwrap();
            let high = WmsScorer::new(sim.as_ref(), WmsConfig { sim_floor: (lo * bump).min(0.5), ..Default::default() }).unwrap();
            prop_assert!(high.wmd(&a, &b).unwrap() <= low.wmd(&a, &b).unwrap() + 1e-12);
        }
    }
}
