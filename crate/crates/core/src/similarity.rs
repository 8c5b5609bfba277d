//! Outline-bullet-to-sentence similarity and the per-bullet alignment
//! distributions everything downstream (DV, PD, heatmaps) is built on.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::{ngrams, Sentence};

/// Precomputed sentence embeddings, keyed by raw sentence text.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dimension: usize,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    key: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let key = key.into();
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEmbedding(key));
        }
        if self.vectors.is_empty() {
            self.dimension = vector.len();
        } else if vector.len() != self.dimension {
            return Err(Error::EmbeddingDimensionMismatch {
                key,
                expected: self.dimension,
                got: vector.len(),
            });
        }
        self.vectors.insert(key, vector);
        Ok(())
    }

    /// Load from JSON Lines of `{"key": ..., "vector": [...]}`; the first
    /// line fixes the dimension.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = Self::new();
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: EmbeddingLine =
                serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            table.insert(parsed.key, parsed.vector)?;
        }
        Ok(table)
    }

    pub fn get(&self, key: &str) -> Result<&[f64]> {
        self.vectors
            .get(key)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::MissingEmbeddingKey(key.to_string()))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// How to score a bullet against a sentence. All backends map into [0, 1].
#[derive(Debug, Clone)]
pub enum SimilarityBackend {
    /// Harmonic mean of clipped unigram precision and recall.
    UnigramF1,
    /// LCS-based F1 over tokens.
    RougeLF1,
    /// Cosine over precomputed vectors, shifted into [0, 1].
    EmbeddingCosine(EmbeddingTable),
}

impl SimilarityBackend {
    pub fn name(&self) -> &'static str {
        match self {
            SimilarityBackend::UnigramF1 => "unigram-f1",
            SimilarityBackend::RougeLF1 => "rouge-l-f1",
            SimilarityBackend::EmbeddingCosine(_) => "embedding-cosine",
        }
    }

    /// Score a pair of sentences. Symmetric for the lexical backends.
    pub fn similarity<F: Scalar>(&self, a: &Sentence, b: &Sentence) -> Result<F> {
        let score = match self {
            SimilarityBackend::UnigramF1 => {
                let ga = ngrams(&a.tokens, 1)?;
                let gb = ngrams(&b.tokens, 1)?;
                let overlap = ga.overlap(&gb);
                f1(overlap, ga.total(), gb.total())
            }
            SimilarityBackend::RougeLF1 => {
                let l = lcs_length(&a.tokens, &b.tokens);
                f1(l, a.tokens.len(), b.tokens.len())
            }
            SimilarityBackend::EmbeddingCosine(table) => {
                let va = table.get(&a.raw)?;
                let vb = table.get(&b.raw)?;
                (cosine(va, vb) + 1.0) / 2.0
            }
        };
        Ok(F::from_f64(score).unwrap())
    }
}

fn f1(overlap: usize, len_a: usize, len_b: usize) -> f64 {
    if len_a + len_b == 0 {
        return 0.0;
    }
    2.0 * overlap as f64 / (len_a + len_b) as f64
}

/// LCS length by the standard two-row dynamic program.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// The |O|x|Y| similarity matrix with its row-normalized distributions.
///
/// `distributions[a]` is the smoothed probability of bullet `a` over the
/// text's sentences; every row sums to 1 and is entrywise positive, so KL
/// divergence between rows is always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix<F: Scalar> {
    pub raw: Vec<Vec<F>>,
    pub distributions: Vec<Vec<F>>,
    pub bullet_texts: Vec<String>,
    pub sentence_count: usize,
}

impl<F: Scalar> AlignmentMatrix<F> {
    pub fn bullet_count(&self) -> usize {
        self.distributions.len()
    }

    /// Build directly from distribution rows (no raw scores). Rows must be
    /// normalized already; used by tests and matrix-JSON round trips.
    pub fn from_distributions(distributions: Vec<Vec<F>>) -> Self {
        let sentence_count = distributions.first().map_or(0, |r| r.len());
        let bullet_texts = (0..distributions.len()).map(|i| format!("bullet {i}")).collect();
        AlignmentMatrix {
            raw: distributions.clone(),
            distributions,
            bullet_texts,
            sentence_count,
        }
    }
}

/// Compute the alignment matrix: `raw[a][k] = sim(o_a, y_k)` and each
/// distribution row `(raw[a] + eps) / sum(raw[a] + eps)`.
///
/// A bullet with all-zero similarity gets the uniform distribution by
/// construction of the smoothing.
pub fn alignment_matrix<F: Scalar>(
    backend: &SimilarityBackend,
    outline: &[Sentence],
    text: &[Sentence],
    epsilon: F,
) -> Result<AlignmentMatrix<F>> {
    if outline.is_empty() {
        return Err(Error::EmptyOutline);
    }
    if text.is_empty() {
        return Err(Error::EmptyText);
    }
    if epsilon <= F::zero() {
        return Err(Error::NonPositiveEpsilon(
            epsilon.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let mut raw = Vec::with_capacity(outline.len());
    let mut distributions = Vec::with_capacity(outline.len());
    for bullet in outline {
        let mut row = Vec::with_capacity(text.len());
        for sentence in text {
            row.push(backend.similarity::<F>(bullet, sentence)?);
        }
        let total = row
            .iter()
            .fold(F::zero(), |acc, &v| acc + v + epsilon);
        let dist: Vec<F> = row.iter().map(|&v| (v + epsilon) / total).collect();
        raw.push(row);
        distributions.push(dist);
    }
    Ok(AlignmentMatrix {
        raw,
        distributions,
        bullet_texts: outline.iter().map(|s| s.raw.clone()).collect(),
        sentence_count: text.len(),
    })
}
