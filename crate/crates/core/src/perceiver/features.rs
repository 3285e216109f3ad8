use std::fmt::Debug;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::{Error, Result};

/// Text to fixed-width vector.
pub trait EncoderBackend: Send + Sync + Debug {
    fn name(&self) -> &str;

    /// Output width; constant for the life of the encoder.
    fn width(&self) -> usize;

    fn encode(&self, text: &str) -> Result<Vec<f64>>;

    /// Enough to rebuild an identical encoder at load time.
    fn spec(&self) -> BackendSpec;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Light {
        width: usize,
        max_ngram: usize,
    },
    Heavy {
        model_dir: PathBuf,
        max_tokens: usize,
    },
}

impl BackendSpec {
    pub fn light() -> Self {
        BackendSpec::Light { width: HashedNgramEncoder::DEFAULT_WIDTH, max_ngram: 2 }
    }

    pub fn instantiate(&self) -> Result<Arc<dyn EncoderBackend>> {
        match self {
            BackendSpec::Light { width, max_ngram } => Ok(Arc::new(HashedNgramEncoder::new(*width, *max_ngram)?)),
            #[cfg(feature = "heavy")]
            BackendSpec::Heavy { model_dir, max_tokens } => {
                Ok(Arc::new(super::heavy::TransformerEncoder::load(model_dir, *max_tokens)?))
            }
            #[cfg(not(feature = "heavy"))]
            BackendSpec::Heavy { .. } => {
                Err(Error::Encoder("heavy backend requested but this build lacks the `heavy` feature".into()))
            }
        }
    }
}

/// Signed feature hashing of lowercase word n-grams, L2-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedNgramEncoder {
    width: usize,
    max_ngram: usize,
}

const HASH_SEED: u64 = 0x005e_ed0f_ca7a_1095;

impl HashedNgramEncoder {
    pub const DEFAULT_WIDTH: usize = 2048;

    pub fn new(width: usize, max_ngram: usize) -> Result<Self> {
        if width == 0 || max_ngram == 0 {
            return Err(Error::InvalidParameter("encoder width and n-gram order must be positive".into()));
        }
        Ok(Self { width, max_ngram })
    }

    pub fn tokens(text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect()
    }
}

impl Default for HashedNgramEncoder {
    fn default() -> Self {
        Self { width: Self::DEFAULT_WIDTH, max_ngram: 2 }
    }
}

impl EncoderBackend for HashedNgramEncoder {
    fn name(&self) -> &str {
        "hashed-ngram"
    }

    fn width(&self) -> usize {
        self.width
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        let tokens = Self::tokens(text);
        let mut v = vec![0.0; self.width];
        for n in 1..=self.max_ngram {
            for gram in tokens.windows(n) {
                let key = gram.join(" ");
                let h = xxh3_64_with_seed(key.as_bytes(), HASH_SEED);
                let slot = (h % self.width as u64) as usize;
                v[slot] += if h >> 63 == 1 { -1.0 } else { 1.0 };
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }

    fn spec(&self) -> BackendSpec {
        BackendSpec::Light { width: self.width, max_ngram: self.max_ngram }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_unit_norm() {
        let e = HashedNgramEncoder::default();
        let a = e.encode("Corals adapt to warmer seas, study finds").unwrap();
        let b = e.encode("Corals adapt to warmer seas, study finds").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2048);
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        let e = HashedNgramEncoder::default();
        assert_eq!(e.encode("Hello, WORLD!").unwrap(), e.encode("hello world").unwrap());
    }

    #[test]
    fn empty_text_is_zero_vector() {
        let e = HashedNgramEncoder::new(16, 2).unwrap();
        assert!(e.encode("  ").unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn spec_round_trip() {
        let e = HashedNgramEncoder::new(64, 3).unwrap();
        let back = e.spec().instantiate().unwrap();
        assert_eq!(back.width(), 64);
        assert_eq!(back.encode("a b c").unwrap(), e.encode("a b c").unwrap());
    }
}
