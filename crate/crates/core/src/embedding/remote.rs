use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingBackend, EmbeddingVector};
use crate::error::{Error, Result};

/// Dimension of the service's sentence-embedding model.
pub const REMOTE_DIM: usize = 768;

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL; requests go to `{endpoint}/embed`.
    pub endpoint: String,
    pub max_in_flight: usize,
    /// Texts per HTTP request; must not exceed the service's batch cap.
    pub batch_size: usize,
    pub timeout: Duration,
    pub expected_dim: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            max_in_flight: 4,
            batch_size: 64,
            timeout: Duration::from_secs(60),
            expected_dim: REMOTE_DIM,
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Counting semaphore bounding concurrent requests.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Slots {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock poisoned");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock poisoned") += 1;
        self.0.cv.notify_one();
    }
}

/// Client for the embedding service (`POST /embed`).
pub struct RemoteEmbedder {
    cfg: RemoteConfig,
    agent: ureq::Agent,
    slots: Slots,
}

impl RemoteEmbedder {
    pub fn new(cfg: RemoteConfig) -> Result<Self> {
        if cfg.endpoint.is_empty() {
            return Err(Error::contract("remote embedding endpoint is empty"));
        }
        if cfg.batch_size == 0 || cfg.max_in_flight == 0 {
            return Err(Error::contract("batch size and in-flight limit must be positive"));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteEmbedder {
            slots: Slots::new(cfg.max_in_flight),
            cfg,
            agent,
        })
    }

    fn url(&self) -> String {
        format!("{}/embed", self.cfg.endpoint.trim_end_matches('/'))
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let _slot = self.slots.acquire();
        let url = self.url();
        let mut resp = self
            .agent
            .post(&url)
            .send_json(EmbedRequest { texts })
            .map_err(|e| transport_error(&url, e))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Error::transport(
                format!("{url} answered {status}: {}", body.trim()),
                status == 429 || status >= 500,
            ));
        }
        let parsed: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::format(Some(&url), 1, format!("bad embed response: {e}")))?;
        if parsed.vectors.len() != texts.len() {
            return Err(Error::format(
                Some(&url),
                1,
                format!("expected {} vectors, got {}", texts.len(), parsed.vectors.len()),
            ));
        }
        parsed
            .vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.cfg.expected_dim {
                    Err(Error::format(
                        Some(&url),
                        1,
                        format!("expected dimension {}, got {}", self.cfg.expected_dim, v.len()),
                    ))
                } else {
                    Ok(EmbeddingVector::new(v))
                }
            })
            .collect()
    }
}

pub(crate) fn transport_error(url: &str, e: ureq::Error) -> Error {
    let retriable = matches!(
        e,
        ureq::Error::Io(_)
            | ureq::Error::Timeout(_)
            | ureq::Error::ConnectionFailed
            | ureq::Error::HostNotFound
    );
    Error::transport(format!("{url}: {e}"), retriable)
}

impl EmbeddingBackend for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        Ok(self.request(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut out = Vec::with_capacity(texts.len());
        for (c, chunk) in texts.chunks(self.cfg.batch_size).enumerate() {
            let vs = self.request(chunk).map_err(|e| Error::BatchItem {
                index: c * self.cfg.batch_size,
                source: Box::new(e),
            })?;
            out.extend(vs);
        }
        Ok(out)
    }

    fn dim(&self) -> usize {
        self.cfg.expected_dim
    }
}
