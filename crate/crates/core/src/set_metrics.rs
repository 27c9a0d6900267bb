//! S4 and MS4: similarity between sets of short strings.
//!
//! For a prediction set P and reference set R, precision is the weighted
//! average over p ∈ P of `max_r sim(p, r)`, where the weight of p is its
//! mean distance `1 - sim` to all members of P (itself included). Recall is
//! the same quantity with the roles swapped, and S4 is the harmonic mean of
//! the two. MS4 takes the best S4 over several alternative reference sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{SimMatrix, Similarity};

/// Weight totals below this are treated as zero and replaced by uniform
/// weights.
pub const WEIGHT_EPSILON: f64 = 1e-12;

/// A set of usage options. Members are trimmed, non-empty and unique;
/// insertion order is kept for stable output but never affects scores.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct UsageOptionSet(Vec<String>);

impl UsageOptionSet {
    pub fn new<I, S>(options: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for o in options {
            let o = o.as_ref().trim();
            if !o.is_empty() && !out.iter().any(|x| x == o) {
                out.push(o.to_owned());
            }
        }
        UsageOptionSet(out)
    }

    pub fn empty() -> Self {
        UsageOptionSet(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn options(&self) -> &[String] {
        &self.0
    }

    pub fn contains(&self, x: &str) -> bool {
        self.0.iter().any(|o| o == x)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    /// Order-insensitive equality.
    pub fn same_members(&self, other: &UsageOptionSet) -> bool {
        self.len() == other.len() && self.0.iter().all(|o| other.contains(o))
    }
}

impl From<Vec<String>> for UsageOptionSet {
    fn from(v: Vec<String>) -> Self {
        UsageOptionSet::new(v)
    }
}

impl From<UsageOptionSet> for Vec<String> {
    fn from(s: UsageOptionSet) -> Self {
        s.0
    }
}

impl<'a> IntoIterator for &'a UsageOptionSet {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// One or more alternative reference sets for a single example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<UsageOptionSet>", into = "Vec<UsageOptionSet>")]
pub struct ReferenceSets(Vec<UsageOptionSet>);

impl ReferenceSets {
    pub fn new(sets: Vec<UsageOptionSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::contract("at least one reference set is required"));
        }
        Ok(ReferenceSets(sets))
    }

    pub fn single(set: UsageOptionSet) -> Self {
        ReferenceSets(vec![set])
    }

    pub fn sets(&self) -> &[UsageOptionSet] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UsageOptionSet> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_empty(&self) -> bool {
        self.0.iter().all(UsageOptionSet::is_empty)
    }

    pub fn all_non_empty(&self) -> bool {
        self.0.iter().all(|s| !s.is_empty())
    }

    pub fn any_non_empty(&self) -> bool {
        self.0.iter().any(|s| !s.is_empty())
    }
}

impl TryFrom<Vec<UsageOptionSet>> for ReferenceSets {
    type Error = Error;

    fn try_from(v: Vec<UsageOptionSet>) -> Result<Self> {
        ReferenceSets::new(v)
    }
}

impl From<ReferenceSets> for Vec<UsageOptionSet> {
    fn from(r: ReferenceSets) -> Self {
        r.0
    }
}

/// How the intra-set weight of a string is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// `(1/|s|) Σ_{u∈s} (1 - sim(x, u))`, self term included.
    #[default]
    IncludeSelf,
    /// Mean distance to the other members only; singletons get weight 0.
    ExcludeSelf,
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include-self" => Ok(WeightScheme::IncludeSelf),
            "exclude-self" => Ok(WeightScheme::ExcludeSelf),
            other => Err(Error::contract(format!("unknown weight scheme {other:?}"))),
        }
    }
}

/// Scores sets of strings against each other with a fixed similarity.
#[derive(Clone, Copy)]
pub struct SetScorer<'a> {
    sim: &'a dyn Similarity,
    scheme: WeightScheme,
}

impl<'a> SetScorer<'a> {
    pub fn new(sim: &'a dyn Similarity) -> Self {
        SetScorer {
            sim,
            scheme: WeightScheme::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: WeightScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn similarity(&self) -> &'a dyn Similarity {
        self.sim
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    /// Intra-set weight of `x`, which must be a member of `set`.
    pub fn weight(&self, x: &str, set: &UsageOptionSet) -> Result<f64> {
        if !set.contains(x) {
            return Err(Error::contract(format!("{x:?} is not a member of the set")));
        }
        let sims = set
            .iter()
            .map(|u| self.sim.sim(x, u))
            .collect::<Result<Vec<_>>>()?;
        let self_index = set.iter().position(|u| u == x).expect("checked above");
        Ok(weight_from_row(&sims, self_index, self.scheme))
    }

    /// Weights of every member of `set`.
    pub fn weights(&self, set: &UsageOptionSet) -> Result<Vec<f64>> {
        let m = self.sim.matrix(set.options(), set.options())?;
        Ok(weights_from_matrix(&m, self.scheme))
    }

    /// Weighted greedy precision of `pred` against `reference`; both must be
    /// non-empty.
    pub fn precision(&self, pred: &UsageOptionSet, reference: &UsageOptionSet) -> Result<f64> {
        if pred.is_empty() || reference.is_empty() {
            return Err(Error::contract("S4 precision is undefined for empty sets"));
        }
        let cross = self.sim.matrix(pred.options(), reference.options())?;
        let weights = self.weights(pred)?;
        Ok(directional(&weights, &cross))
    }

    pub fn s4(&self, pred: &UsageOptionSet, reference: &UsageOptionSet) -> Result<f64> {
        match (pred.is_empty(), reference.is_empty()) {
            (true, true) => return Ok(1.0),
            (true, false) | (false, true) => return Ok(0.0),
            (false, false) => {}
        }
        // one cross matrix serves both directions
        let cross = self.sim.matrix(pred.options(), reference.options())?;
        let wp = self.weights(pred)?;
        let wr = self.weights(reference)?;
        let precision = directional(&wp, &cross);
        let recall = directional(&wr, &cross.transpose());
        Ok(harmonic_mean(precision, recall))
    }

    pub fn ms4(&self, pred: &UsageOptionSet, refs: &ReferenceSets) -> Result<f64> {
        if refs.is_empty() {
            return Err(Error::contract("MS4 needs at least one reference set"));
        }
        let mut best = f64::NEG_INFINITY;
        for r in refs.iter() {
            best = best.max(self.s4(pred, r)?);
        }
        Ok(best)
    }
}

fn weight_from_row(sims: &[f64], self_index: usize, scheme: WeightScheme) -> f64 {
    let n = sims.len();
    match scheme {
        WeightScheme::IncludeSelf => sims.iter().map(|s| 1.0 - s).sum::<f64>() / n as f64,
        WeightScheme::ExcludeSelf if n < 2 => 0.0,
        WeightScheme::ExcludeSelf => {
            sims.iter()
                .enumerate()
                .filter(|&(k, _)| k != self_index)
                .map(|(_, s)| 1.0 - s)
                .sum::<f64>()
                / (n - 1) as f64
        }
    }
}

fn weights_from_matrix(m: &SimMatrix, scheme: WeightScheme) -> Vec<f64> {
    (0..m.rows()).map(|i| weight_from_row(m.row(i), i, scheme)).collect()
}

/// `Σ w_i v_i / Σ w_i`, with uniform weights when `Σ w_i` is (numerically)
/// zero.
pub fn weighted_mean(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    let total: f64 = weights.iter().sum();
    if total < WEIGHT_EPSILON {
        values.iter().sum::<f64>() / values.len() as f64
    } else {
        weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / total
    }
}

fn directional(weights: &[f64], cross: &SimMatrix) -> f64 {
    let maxima: Vec<f64> = (0..cross.rows())
        .map(|i| cross.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    weighted_mean(weights, &maxima)
}

/// Harmonic mean of two non-negative scores; 0 when both are 0.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::ExactMatch;

    fn set(xs: &[&str]) -> UsageOptionSet {
        UsageOptionSet::new(xs)
    }

    #[test]
    fn set_normalizes_members() {
        let s = set(&[" a", "a ", "", "  ", "b"]);
        assert_eq!(s.options(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn weight_examples() {
        let sc = SetScorer::new(&ExactMatch);
        assert_eq!(sc.weight("x", &set(&["x"])).unwrap(), 0.0);
        assert_eq!(sc.weight("a", &set(&["a", "b"])).unwrap(), 0.5);
        for x in ["a", "b", "c"] {
            assert!((sc.weight(x, &set(&["a", "b", "c"])).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        }
        assert!(matches!(sc.weight("z", &set(&["a"])), Err(Error::Contract(_))));
    }

    #[test]
    fn precision_examples() {
        let sc = SetScorer::new(&ExactMatch);
        assert_eq!(sc.precision(&set(&["a"]), &set(&["a"])).unwrap(), 1.0);
        assert_eq!(sc.precision(&set(&["a", "b"]), &set(&["a"])).unwrap(), 0.5);
        let p = sc.precision(&set(&["a", "b", "c"]), &set(&["a", "b"])).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        assert!(sc.precision(&UsageOptionSet::empty(), &set(&["a"])).is_err());
    }

    #[test]
    fn s4_examples() {
        let sc = SetScorer::new(&ExactMatch);
        let e = UsageOptionSet::empty();
        assert_eq!(sc.s4(&e, &e).unwrap(), 1.0);
        assert_eq!(sc.s4(&set(&["x"]), &e).unwrap(), 0.0);
        assert_eq!(sc.s4(&e, &set(&["x"])).unwrap(), 0.0);
        let v = sc.s4(&set(&["a", "b"]), &set(&["a"])).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sc.s4(&set(&["a", "b"]), &set(&["b", "a"])).unwrap(), 1.0);
        assert_eq!(sc.s4(&set(&["a", "b"]), &set(&["c", "d"])).unwrap(), 0.0);
    }

    #[test]
    fn ms4_examples() {
        let sc = SetScorer::new(&ExactMatch);
        let e = UsageOptionSet::empty();
        assert_eq!(sc.ms4(&e, &ReferenceSets::single(e.clone())).unwrap(), 1.0);
        let refs = ReferenceSets::new(vec![e.clone(), set(&["a"])]).unwrap();
        assert_eq!(sc.ms4(&set(&["a"]), &refs).unwrap(), 1.0);
        assert_eq!(sc.ms4(&e, &ReferenceSets::single(set(&["b"]))).unwrap(), 0.0);
        assert!(ReferenceSets::new(vec![]).is_err());
    }

    #[test]
    fn weighted_mean_scale_invariant() {
        let w = [0.2, 0.5, 0.3];
        let v = [1.0, 0.4, 0.0];
        let base = weighted_mean(&w, &v);
        for k in [1e-6, 0.5, 3.0, 1e6] {
            let scaled: Vec<f64> = w.iter().map(|x| x * k).collect();
            assert!((weighted_mean(&scaled, &v) - base).abs() < 1e-12);
        }
        assert_eq!(weighted_mean(&[0.0, 0.0], &[1.0, 0.0]), 0.5);
    }

    #[test]
    fn exclude_self_scheme() {
        let sc = SetScorer::new(&ExactMatch).with_scheme(WeightScheme::ExcludeSelf);
        assert_eq!(sc.weight("a", &set(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(sc.weight("a", &set(&["a"])).unwrap(), 0.0);
        assert_eq!(sc.s4(&set(&["a"]), &set(&["a"])).unwrap(), 1.0);
    }

    #[test]
    fn reference_sets_json_rejects_empty_list() {
        assert!(serde_json::from_str::<ReferenceSets>("[]").is_err());
        let r: ReferenceSets = serde_json::from_str(r#"[[], ["a", " a"]]"#).unwrap();
        assert_eq!(r.sets()[1].len(), 1);
    }
}
