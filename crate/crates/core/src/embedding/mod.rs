//! String embedding backends.
//!
//! Every metric in this crate is defined on top of a pairwise string
//! similarity, which in turn is the cosine of two sentence embeddings. The
//! [`EmbeddingBackend`] trait hides where those vectors come from:
//!
//! * [`HashingEmbedder`]: deterministic character-trigram hashing, 256 dims.
//!   Cheap, offline and trivially reimplementable; used throughout the tests.
//! * [`FileCache`]: JSON Lines cache in front of another backend.
//! * [`RemoteEmbedder`]: HTTP client for the sentence-embedding service.
//!
//! The exact-match stub does not produce vectors at all and lives in
//! [`crate::similarity::ExactMatch`].

mod cache;
mod hashing;
pub(crate) mod remote;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cache::FileCache;
pub use hashing::{fnv1a_64, HashingEmbedder, HASHING_DIM};
pub use remote::{RemoteConfig, RemoteEmbedder, REMOTE_DIM};

use crate::error::{Error, Result};

/// A dense embedding. Backends return unit-norm vectors, except that the
/// hashing backend maps strings without trigrams (the empty string) to the
/// all-zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        EmbeddingVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Scales to unit L2 norm; the zero vector is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.0 {
                *v /= n;
            }
        }
        self
    }
}

/// Source of string embeddings. Implementations must be deterministic per
/// instance and safe to share between evaluation workers.
pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;

    /// Embeds every text in order. The default delegates to [`embed`] and
    /// tags the first failure with its index.
    ///
    /// [`embed`]: EmbeddingBackend::embed
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .enumerate()
            .map(|(index, t)| {
                self.embed(t).map_err(|e| Error::BatchItem {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    fn dim(&self) -> usize;
}

impl<B: EmbeddingBackend + ?Sized> EmbeddingBackend for Arc<B> {
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        (**self).embed(text)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed_batch(texts)
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    DeterministicTest,
    ExactMatch,
    FileCache,
    RemoteService,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic-test" => Ok(BackendKind::DeterministicTest),
            "exact-match" => Ok(BackendKind::ExactMatch),
            "file-cache" => Ok(BackendKind::FileCache),
            "remote-service" => Ok(BackendKind::RemoteService),
            other => Err(Error::contract(format!("unknown embedding backend {other:?}"))),
        }
    }
}

/// Backend selection.
///
/// `file-cache` requires `cache_path`; when `endpoint` is also set the cache
/// fronts the remote service, otherwise it is read-only and misses fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct EmbeddingBackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub cache_path: Option<PathBuf>,
    /// Upper bound on concurrent requests to the remote service.
    pub max_in_flight: Option<usize>,
}

impl EmbeddingBackendConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            BackendKind::RemoteService if self.endpoint.is_none() => Err(Error::contract(
                "remote-service backend requires an endpoint",
            )),
            BackendKind::FileCache if self.cache_path.is_none() => Err(Error::contract(
                "file-cache backend requires a cache path",
            )),
            _ => Ok(()),
        }
    }

    /// Instantiates the configured vector backend. Returns `None` for
    /// `exact-match`, which bypasses embeddings.
    pub fn build(&self) -> Result<Option<Arc<dyn EmbeddingBackend>>> {
        self.validate()?;
        let remote = || -> Result<RemoteEmbedder> {
            let mut cfg = RemoteConfig::new(self.endpoint.clone().unwrap_or_default());
            if let Some(limit) = self.max_in_flight {
                cfg.max_in_flight = limit.max(1);
            }
            RemoteEmbedder::new(cfg)
        };
        Ok(match self.kind {
            BackendKind::ExactMatch => None,
            BackendKind::DeterministicTest => Some(Arc::new(HashingEmbedder::new())),
            BackendKind::RemoteService => Some(Arc::new(remote()?)),
            BackendKind::FileCache => {
                let path = self.cache_path.clone().unwrap_or_default();
                let cache = if self.endpoint.is_some() {
                    FileCache::open(path, Some(Arc::new(remote()?)))?
                } else {
                    FileCache::open(path, None)?
                };
                Some(Arc::new(cache))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_requires_endpoint_and_cache_path() {
        let remote = EmbeddingBackendConfig {
            kind: BackendKind::RemoteService,
            ..Default::default()
        };
        assert!(matches!(remote.validate(), Err(Error::Contract(_))));
        let cache = EmbeddingBackendConfig {
            kind: BackendKind::FileCache,
            ..Default::default()
        };
        assert!(matches!(cache.validate(), Err(Error::Contract(_))));
        assert!(EmbeddingBackendConfig::default().validate().is_ok());
    }

    #[test]
    fn exact_match_builds_no_vector_backend() {
        let cfg = EmbeddingBackendConfig {
            kind: BackendKind::ExactMatch,
            ..Default::default()
        };
        assert!(cfg.build().unwrap().is_none());
    }

    #[test]
    fn batch_error_carries_index() {
        struct FailOn(&'static str);
        impl EmbeddingBackend for FailOn {
            fn embed(&self, text: &str) -> Result<EmbeddingVector> {
                if text == self.0 {
                    Err(Error::transport("down", true))
                } else {
                    Ok(EmbeddingVector::new(vec![1.0]))
                }
            }
            fn dim(&self) -> usize {
                1
            }
        }
        let err = FailOn("bad").embed_batch(&["ok", "bad", "bad"]).unwrap_err();
        match err {
            Error::BatchItem { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(FailOn("bad").embed_batch(&["ok", "bad"]).unwrap_err().is_retriable());
    }

    #[test]
    fn normalized_keeps_zero_vector() {
        let z = EmbeddingVector::zeros(4).normalized();
        assert!(z.is_zero());
        let v = EmbeddingVector::new(vec![3.0, 4.0]).normalized();
        assert_eq!(v.values(), &[0.6, 0.8]);
    }
}
