use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

pub const DEFAULT_DIMENSION: usize = 256;
pub const DEFAULT_EMBEDDER_SEED: u64 = 0x5eed_c0de;

const NORM_TOLERANCE: f64 = 1e-6;

/// Unit-norm dense vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// L2-normalizes `values`. Fails on non-finite entries or a zero vector.
    pub fn normalized(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("embedding has non-finite or no entries".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidConfig("cannot normalize a zero embedding".into()));
        }
        Ok(EmbeddingVector(values.iter().map(|v| (v / norm) as f32).collect()))
    }

    /// The first basis vector; stands in for text with no features.
    pub fn null(dimension: usize) -> Self {
        let mut values = vec![0.0; dimension.max(1)];
        values[0] = 1.0;
        EmbeddingVector(values)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    /// Cosine similarity; both sides are unit norm so this is the dot product,
    /// clamped to [-1, 1] against rounding.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        let dot: f64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        dot.clamp(-1.0, 1.0)
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = String;

    fn try_from(values: Vec<f32>) -> std::result::Result<Self, String> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err("embedding must be non-empty and finite".into());
        }
        let v = EmbeddingVector(values);
        if (v.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(format!("embedding norm {} is not 1", v.norm()));
        }
        Ok(v)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Maps text to unit-norm vectors. Implementations must be deterministic.
pub trait Embedder: Send + Sync {
    /// Stable identifier recorded in snapshot manifests.
    fn id(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> EmbeddingVector;
}

/// Reference embedder: character trigrams of each token (padded with `#`) are
/// hashed, each distinct trigram is assigned a seeded random ±1 direction, and
/// the count-weighted sum is L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dimension: usize,
    seed: u64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(DEFAULT_DIMENSION, DEFAULT_EMBEDDER_SEED)
    }
}

impl HashEmbedder {
    pub const ID_PREFIX: &'static str = "hash-trigram-v1";

    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashEmbedder { dimension, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Parses ids produced by [`Embedder::id`] for this type.
    pub fn from_id(id: &str, dimension: usize) -> Option<Self> {
        let seed = id.strip_prefix(Self::ID_PREFIX)?.strip_prefix(":seed=")?;
        Some(HashEmbedder::new(dimension, seed.parse().ok()?))
    }

    fn features(text: &str) -> BTreeMap<u64, u32> {
        let mut counts = BTreeMap::new();
        for token in tokenize(text).iter() {
            let padded: Vec<char> = std::iter::once('#')
                .chain(token.chars())
                .chain(std::iter::once('#'))
                .collect();
            for gram in padded.windows(3) {
                let s: String = gram.iter().collect();
                *counts.entry(fnv1a(s.as_bytes())).or_default() += 1;
            }
        }
        counts
    }
}

impl Embedder for HashEmbedder {
    fn id(&self) -> String {
        format!("{}:seed={}", Self::ID_PREFIX, self.seed)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> EmbeddingVector {
        let features = Self::features(text);
        if features.is_empty() {
            return EmbeddingVector::null(self.dimension);
        }
        let mut acc = vec![0.0f64; self.dimension];
        let mut bits = 0u64;
        for (hash, count) in features {
            let mut rng = ChaCha8Rng::seed_from_u64(hash ^ self.seed);
            let weight = count as f64;
            for (i, slot) in acc.iter_mut().enumerate() {
                if i % 64 == 0 {
                    bits = rng.next_u64();
                }
                if bits & (1 << (i % 64)) != 0 {
                    *slot += weight;
                } else {
                    *slot -= weight;
                }
            }
        }
        EmbeddingVector::normalized(&acc).unwrap_or_else(|_| EmbeddingVector::null(self.dimension))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit_norm() {
        let e = HashEmbedder::default();
        let a = e.embed("ACE2 receptor binding");
        assert_eq!(a, e.embed("ACE2 receptor binding"));
        assert_eq!(a.dimension(), DEFAULT_DIMENSION);
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert!((a.cosine(&a) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_text_is_null_vector() {
        let e = HashEmbedder::default();
        assert_eq!(e.embed(""), EmbeddingVector::null(DEFAULT_DIMENSION));
        assert_eq!(e.embed("  --  "), EmbeddingVector::null(DEFAULT_DIMENSION));
    }

    #[test]
    fn overlap_beats_disjoint() {
        let e = HashEmbedder::default();
        let q = e.embed("spike protein receptor");
        let near = e.embed("the spike protein binds the receptor");
        let far = e.embed("hospital staffing during winter");
        assert!(q.cosine(&near) > q.cosine(&far) + 0.3);
    }

    #[test]
    fn id_round_trip() {
        let e = HashEmbedder::new(64, 42);
        assert_eq!(HashEmbedder::from_id(&e.id(), 64), Some(e));
        assert_eq!(HashEmbedder::from_id("other", 64), None);
    }

    #[test]
    fn deserialization_checks_norm() {
        assert!(serde_json::from_str::<EmbeddingVector>("[0.6,0.8]").is_ok());
        assert!(serde_json::from_str::<EmbeddingVector>("[1.0,1.0]").is_err());
        assert!(serde_json::from_str::<EmbeddingVector>("[]").is_err());
    }

    #[test]
    fn normalization_rejects_bad_input() {
        assert!(EmbeddingVector::normalized(&[0.0, 0.0]).is_err());
        assert!(EmbeddingVector::normalized(&[f64::NAN, 1.0]).is_err());
        let v = EmbeddingVector::normalized(&[3.0, 4.0]).unwrap();
        assert_eq!(v.values(), &[0.6, 0.8]);
    }
}
