use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{EmbeddingBackend, EmbeddingVector};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct CacheLine<'a> {
    #[serde(borrow)]
    text: std::borrow::Cow<'a, str>,
    vector: Vec<f64>,
}

/// Persistent JSON Lines embedding cache, keyed by the exact text bytes.
///
/// Reads are served concurrently from memory; appends to the file go through
/// a single lock. Without an inner backend the cache is read-only and a miss
/// is a contract error.
pub struct FileCache {
    path: PathBuf,
    entries: RwLock<HashMap<String, EmbeddingVector>>,
    writer: Mutex<()>,
    inner: Option<Arc<dyn EmbeddingBackend>>,
    dim: usize,
}

impl FileCache {
    pub fn open(path: impl Into<PathBuf>, inner: Option<Arc<dyn EmbeddingBackend>>) -> Result<Self> {
        let path = path.into();
        let entries = if path.exists() {
            Self::load(&path)?
        } else {
            HashMap::new()
        };
        let dim = inner
            .as_ref()
            .map(|b| b.dim())
            .or_else(|| entries.values().next().map(EmbeddingVector::dim))
            .unwrap_or(0);
        if let Some(bad) = entries.values().find(|v| v.dim() != dim) {
            return Err(Error::contract(format!(
                "{}: cached vector of dimension {} does not match backend dimension {dim}",
                path.display(),
                bad.dim()
            )));
        }
        Ok(FileCache {
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(()),
            inner,
            dim,
        })
    }

    fn load(path: &Path) -> Result<HashMap<String, EmbeddingVector>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let mut out = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CacheLine<'_> = serde_json::from_str(&line)
                .map_err(|e| Error::format(Some(&name), i + 1, e.to_string()))?;
            out.insert(parsed.text.into_owned(), EmbeddingVector::new(parsed.vector));
        }
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lookup(&self, text: &str) -> Option<EmbeddingVector> {
        self.entries.read().expect("cache lock poisoned").get(text).cloned()
    }

    fn persist(&self, new: Vec<(String, EmbeddingVector)>) -> Result<()> {
        if new.is_empty() {
            return Ok(());
        }
        let _guard = self.writer.lock().expect("cache writer poisoned");
        let mut entries = self.entries.write().expect("cache lock poisoned");
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut w = BufWriter::new(file);
        for (text, vector) in new {
            if entries.contains_key(&text) {
                continue;
            }
            let line = CacheLine {
                text: std::borrow::Cow::Borrowed(&text),
                vector: vector.values().to_vec(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io(&self.path, e))?;
            entries.insert(text, vector);
        }
        w.flush().map_err(|e| Error::io(&self.path, e))
    }

    fn miss(&self, text: &str) -> Error {
        Error::contract(format!(
            "{:?} is not in the read-only embedding cache {}",
            text,
            self.path.display()
        ))
    }
}

/// Normalizes vectors that are not already unit length, leaving unit
/// vectors bit-for-bit untouched.
fn unit(v: EmbeddingVector) -> EmbeddingVector {
    if (v.norm() - 1.0).abs() > 1e-9 {
        v.normalized()
    } else {
        v
    }
}

impl EmbeddingBackend for FileCache {
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if let Some(v) = self.lookup(text) {
            return Ok(v);
        }
        let inner = self.inner.as_ref().ok_or_else(|| self.miss(text))?;
        let v = unit(inner.embed(text)?);
        self.persist(vec![(text.to_owned(), v.clone())])?;
        Ok(v)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut out: Vec<Option<EmbeddingVector>> = texts.iter().map(|t| self.lookup(t)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let Some(inner) = self.inner.as_ref() else {
                let i = missing[0];
                return Err(Error::BatchItem {
                    index: i,
                    source: Box::new(self.miss(texts[i])),
                });
            };
            let query: Vec<&str> = missing.iter().map(|&i| texts[i]).collect();
            let fresh = inner.embed_batch(&query).map_err(|e| match e {
                Error::BatchItem { index, source } => Error::BatchItem {
                    index: missing[index],
                    source,
                },
                other => other,
            })?;
            let mut new = Vec::with_capacity(fresh.len());
            for (&i, v) in missing.iter().zip(fresh) {
                let v = unit(v);
                new.push((texts[i].to_owned(), v.clone()));
                out[i] = Some(v);
            }
            self.persist(new)?;
        }
        Ok(out.into_iter().map(|v| v.expect("filled above")).collect())
    }

    fn dim(&self) -> usize {
        self.dim
    }
}
