//! Word-level semantic features behind a provider contract.

use std::collections::HashMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const SEMANTIC_DIM: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct WordSpan {
    pub word: String,
    pub start: f64,
    pub end: f64,
}

/// Maps a word to a fixed-width embedding. Must be deterministic.
pub trait SemanticProvider: Send + Sync {
    fn embed(&self, word: &str) -> [f64; SEMANTIC_DIM];
}

/// Dependency-free stub: each word's vector is drawn from a generator seeded
/// by SHA-256 of `(seed, lowercase word)`, uniform in [−1, 1).
#[derive(Debug, Clone, Copy, Default)]
pub struct HashEmbedder {
    pub seed: u64,
}

impl SemanticProvider for HashEmbedder {
    fn embed(&self, word: &str) -> [f64; SEMANTIC_DIM] {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(word.to_lowercase().as_bytes());
        let digest: [u8; 32] = h.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        std::array::from_fn(|_| rng.random_range(-1.0..1.0))
    }
}

/// Precomputed vectors from an embedding sidecar (`word<TAB>32 floats`).
/// Words missing from the table embed to zero.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    vectors: HashMap<String, [f64; SEMANTIC_DIM]>,
}

impl EmbeddingTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let word = parts.next().unwrap_or_default().to_lowercase();
            let values: Vec<f64> = parts
                .flat_map(|p| p.split_whitespace())
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(format!("embedding line {}: {e}", i + 1)))?;
            let v: [f64; SEMANTIC_DIM] = values.try_into().map_err(|v: Vec<f64>| {
                Error::format(format!("embedding line {}: expected {SEMANTIC_DIM} values, found {}", i + 1, v.len()))
            })?;
            vectors.insert(word, v);
        }
        Ok(EmbeddingTable { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl SemanticProvider for EmbeddingTable {
    fn embed(&self, word: &str) -> [f64; SEMANTIC_DIM] {
        self.vectors.get(&word.to_lowercase()).copied().unwrap_or([0.0; SEMANTIC_DIM])
    }
}

/// Parses a transcript sidecar: `word<TAB>start_s<TAB>end_s` per line.
pub fn parse_transcript(text: &str) -> Result<Vec<WordSpan>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::format(format!("transcript line {}: expected 3 tab-separated fields", i + 1)));
            }
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::format(format!("transcript line {}: {e}", i + 1)))
            };
            Ok(WordSpan { word: f[0].to_string(), start: num(f[1])?, end: num(f[2])? })
        })
        .collect()
}

pub fn write_transcript(words: &[WordSpan]) -> String {
    words.iter().map(|w| format!("{}\t{}\t{}\n", w.word, w.start, w.end)).collect()
}

/// frames × 32 matrix: a frame whose time `f / fps` lies in `[start, end)` of a
/// word carries that word's embedding, other frames are zero.
pub fn semantic_features(
    transcript: &[WordSpan],
    frames: usize,
    fps: f64,
    provider: &dyn SemanticProvider,
) -> Result<Array2<f64>> {
    let mut spans: Vec<&WordSpan> = transcript.iter().collect();
    for w in &spans {
        if !(w.start >= 0.0 && w.end >= w.start) {
            return Err(Error::invalid(format!("word {:?} has invalid interval [{}, {})", w.word, w.start, w.end)));
        }
    }
    spans.sort_by(|a, b| a.start.total_cmp(&b.start));
    for pair in spans.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(Error::invalid(format!(
                "overlapping words {:?} [{}, {}) and {:?} [{}, {})",
                pair[0].word, pair[0].start, pair[0].end, pair[1].word, pair[1].start, pair[1].end
            )));
        }
    }
    let mut out = Array2::zeros((frames, SEMANTIC_DIM));
    for w in spans {
        let v = provider.embed(&w.word);
        let first = (w.start * fps - 1e-9).ceil().max(0.0) as usize;
        for f in first..frames {
            let t = f as f64 / fps;
            if t >= w.end {
                break;
            }
            if t >= w.start {
                out.row_mut(f).assign(&ndarray::ArrayView1::from(&v));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(word: &str, start: f64, end: f64) -> WordSpan {
        WordSpan { word: word.into(), start, end }
    }

    #[test]
    fn empty_transcript_is_zero() {
        let m = semantic_features(&[], 10, 30.0, &HashEmbedder::default()).unwrap();
        assert_eq!(m.dim(), (10, 32));
        assert!(m.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_and_word_specific() {
        let t = vec![span("hello", 0.0, 0.2), span("there", 0.3, 0.5)];
        let p = HashEmbedder { seed: 11 };
        let a = semantic_features(&t, 20, 30.0, &p).unwrap();
        let b = semantic_features(&t, 20, 30.0, &p).unwrap();
        assert_eq!(a, b);
        assert_ne!(p.embed("hello"), p.embed("there"));
        assert_eq!(a.row(0).to_vec(), p.embed("hello").to_vec());
        // 0.2 s = frame 6 is outside "hello"; frame 9 = 0.3 s starts "there".
        assert!(a.row(6).iter().all(|&v| v == 0.0));
        assert_eq!(a.row(9).to_vec(), p.embed("there").to_vec());
    }

    #[test]
    fn overlap_is_an_error() {
        let t = vec![span("a", 0.0, 0.5), span("b", 0.4, 0.6)];
        assert!(semantic_features(&t, 30, 30.0, &HashEmbedder::default()).is_err());
    }

    #[test]
    fn table_provider_and_sidecars() {
        let line = format!("hi\t{}\n", vec!["0.5"; 32].join(" "));
        let table = EmbeddingTable::parse(&line).unwrap();
        assert_eq!(table.embed("HI"), [0.5; 32]);
        assert_eq!(table.embed("nope"), [0.0; 32]);
        assert!(EmbeddingTable::parse("hi\t1 2 3\n").is_err());

        let words = vec![span("a", 0.0, 0.25), span("b", 1.0, 1.5)];
        assert_eq!(parse_transcript(&write_transcript(&words)).unwrap(), words);
        assert!(parse_transcript("a\t0.0\n").is_err());
    }
}
