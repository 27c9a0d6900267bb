use super::{EmbeddingBackend, EmbeddingVector};
use crate::error::Result;

pub const HASHING_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Deterministic character-trigram embedder.
///
/// The text is lowercased and wrapped in a single `#` on each side. Each
/// character trigram is hashed (FNV-1a over its UTF-8 bytes); the hash picks
/// bucket `hash % 256` and contributes `+1` if bit 32 is clear, `-1`
/// otherwise. The accumulated vector is L2-normalized. The empty string has
/// no trigrams and maps to the zero vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashingEmbedder;

impl HashingEmbedder {
    pub fn new() -> Self {
        HashingEmbedder
    }

    pub fn vector(text: &str) -> EmbeddingVector {
        let padded: Vec<char> = std::iter::once('#')
            .chain(text.to_lowercase().chars())
            .chain(std::iter::once('#'))
            .collect();
        let mut acc = vec![0.0f64; HASHING_DIM];
        let mut buf = [0u8; 12];
        for tri in padded.windows(3) {
            let mut len = 0;
            for c in tri {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            let h = fnv1a_64(&buf[..len]);
            let bucket = (h % HASHING_DIM as u64) as usize;
            acc[bucket] += if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
        }
        EmbeddingVector::new(acc).normalized()
    }
}

impl EmbeddingBackend for HashingEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        Ok(Self::vector(text))
    }

    fn dim(&self) -> usize {
        HASHING_DIM
    }
}
