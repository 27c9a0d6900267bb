//! Pairwise string similarity in [0, 1].
//!
//! `sim(a, b)` is the cosine of the two embeddings, clipped at zero, then
//! passed through two beta CDFs in sequence to spread the scores more evenly
//! over the unit interval.

mod beta;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

pub use beta::{beta_cdf, ln_beta, ln_gamma, BetaParams};

use crate::embedding::{EmbeddingBackend, EmbeddingBackendConfig, EmbeddingVector};
use crate::error::{Error, Result};

/// Parameters of the two-stage score transform plus the embedding source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    /// Applied first.
    pub stage1: BetaParams,
    /// Applied to the output of `stage1`.
    pub stage2: BetaParams,
    pub backend: EmbeddingBackendConfig,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            stage1: BetaParams { alpha: 1.35, beta: 1.65 },
            stage2: BetaParams { alpha: 14.72, beta: 3.39 },
            backend: EmbeddingBackendConfig::default(),
        }
    }
}

impl SimilarityConfig {
    /// Builds the measure described by this configuration.
    pub fn build(&self) -> Result<Arc<dyn Similarity>> {
        self.stage1.validate()?;
        self.stage2.validate()?;
        Ok(match self.backend.build()? {
            None => Arc::new(ExactMatch),
            Some(backend) => Arc::new(EmbeddingSimilarity::new(
                backend,
                BetaTransform::new(self.stage1, self.stage2),
            )),
        })
    }
}

/// `max(0, cos(a, b))`.
///
/// Identical vectors score 1 (including two identical zero vectors); a zero
/// vector against anything else scores 0.
pub fn clipped_cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::contract(format!(
            "cannot compare embeddings of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if a == b {
        return Ok(1.0);
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaTransform {
    pub stage1: BetaParams,
    pub stage2: BetaParams,
}

impl BetaTransform {
    pub fn new(stage1: BetaParams, stage2: BetaParams) -> Self {
        BetaTransform { stage1, stage2 }
    }

    pub fn identity() -> Self {
        BetaTransform::new(BetaParams::UNIFORM, BetaParams::UNIFORM)
    }

    pub fn apply(&self, cosine: f64) -> Result<f64> {
        beta_cdf(beta_cdf(cosine, self.stage1)?, self.stage2)
    }
}

impl Default for BetaTransform {
    fn default() -> Self {
        let cfg = SimilarityConfig::default();
        BetaTransform::new(cfg.stage1, cfg.stage2)
    }
}

/// Dense row-major matrix of pairwise similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j)?);
            }
        }
        Ok(SimMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> SimMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        SimMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

/// A symmetric string similarity with values in [0, 1].
pub trait Similarity: Send + Sync {
    fn sim(&self, a: &str, b: &str) -> Result<f64>;

    /// All pairwise similarities between `rows` and `cols`.
    fn matrix(&self, rows: &[String], cols: &[String]) -> Result<SimMatrix> {
        SimMatrix::from_fn(rows.len(), cols.len(), |i, j| self.sim(&rows[i], &cols[j]))
    }
}

impl<S: Similarity + ?Sized> Similarity for Arc<S> {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        (**self).sim(a, b)
    }

    fn matrix(&self, rows: &[String], cols: &[String]) -> Result<SimMatrix> {
        (**self).matrix(rows, cols)
    }
}

impl<S: Similarity + ?Sized> Similarity for &S {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        (**self).sim(a, b)
    }

    fn matrix(&self, rows: &[String], cols: &[String]) -> Result<SimMatrix> {
        (**self).matrix(rows, cols)
    }
}

/// Analytic stub: 1 for strings equal after trimming, 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl Similarity for ExactMatch {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        Ok(if a.trim() == b.trim() { 1.0 } else { 0.0 })
    }
}

/// Embedding-backed similarity with the two-stage beta transform.
///
/// Embeddings are memoized per instance, so each distinct string reaches the
/// backend once.
pub struct EmbeddingSimilarity<B> {
    backend: B,
    transform: BetaTransform,
    memo: RwLock<HashMap<String, Arc<EmbeddingVector>>>,
}

impl<B: EmbeddingBackend> EmbeddingSimilarity<B> {
    pub fn new(backend: B, transform: BetaTransform) -> Self {
        EmbeddingSimilarity {
            backend,
            transform,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn transform(&self) -> BetaTransform {
        self.transform
    }

    fn embed_all(&self, texts: &[&str]) -> Result<Vec<Arc<EmbeddingVector>>> {
        let mut out: Vec<Option<Arc<EmbeddingVector>>> = {
            let memo = self.memo.read().expect("memo poisoned");
            texts.iter().map(|t| memo.get(*t).cloned()).collect()
        };
        let mut missing: Vec<&str> = texts
            .iter()
            .zip(&out)
            .filter(|(_, v)| v.is_none())
            .map(|(t, _)| *t)
            .collect();
        if !missing.is_empty() {
            missing.sort_unstable();
            missing.dedup();
            let fresh = self.backend.embed_batch(&missing)?;
            let mut memo = self.memo.write().expect("memo poisoned");
            for (t, v) in missing.iter().zip(fresh) {
                memo.entry((*t).to_owned()).or_insert_with(|| Arc::new(v));
            }
            for (t, slot) in texts.iter().zip(out.iter_mut()) {
                if slot.is_none() {
                    *slot = memo.get(*t).cloned();
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("memoized above")).collect())
    }

    fn score(&self, a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
        self.transform.apply(clipped_cosine(a, b)?)
    }
}

impl<B: EmbeddingBackend> Similarity for EmbeddingSimilarity<B> {
    fn sim(&self, a: &str, b: &str) -> Result<f64> {
        let v = self.embed_all(&[a, b])?;
        self.score(&v[0], &v[1])
    }

    fn matrix(&self, rows: &[String], cols: &[String]) -> Result<SimMatrix> {
        let texts: Vec<&str> = rows.iter().chain(cols).map(String::as_str).collect();
        let vecs = self.embed_all(&texts)?;
        let (rv, cv) = vecs.split_at(rows.len());
        SimMatrix::from_fn(rows.len(), cols.len(), |i, j| self.score(&rv[i], &cv[j]))
    }
}
