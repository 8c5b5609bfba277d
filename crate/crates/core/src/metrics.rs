//! ROUGE-1/2/L, BLEU-1/2/4, and the two outline-utilization metrics:
//! Distribution Varies (DV, mean pairwise KL between alignment rows) and
//! Peak Distance (PD, mean pairwise distance between row argmaxes).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::similarity::{alignment_matrix, lcs_length, AlignmentMatrix, SimilarityBackend};
use crate::text::{ngrams, Token};

/// Precision / recall / F1 triple, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScore {
    fn from_counts(overlap: usize, hyp_total: usize, ref_total: usize) -> Self {
        let precision = ratio(overlap, hyp_total);
        let recall = ratio(overlap, ref_total);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PrfScore { precision, recall, f1 }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// ROUGE-N with clipped n-gram overlap. Rejects an empty reference.
pub fn rouge_n(hypothesis: &[Token], reference: &[Token], n: usize) -> Result<PrfScore> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let hyp = ngrams(hypothesis, n)?;
    let rf = ngrams(reference, n)?;
    Ok(PrfScore::from_counts(hyp.overlap(&rf), hyp.total(), rf.total()))
}

/// ROUGE-L: LCS length over tokens, F1 of L/|hyp| and L/|ref|.
pub fn rouge_l(hypothesis: &[Token], reference: &[Token]) -> Result<PrfScore> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let l = lcs_length(hypothesis, reference);
    Ok(PrfScore::from_counts(l, hypothesis.len(), reference.len()))
}

/// BLEU result; `empty_hypothesis` flags the degenerate score-0 case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub empty_hypothesis: bool,
}

/// BLEU with clipped modified n-gram precisions for n = 1..max_n, geometric
/// mean, and the brevity penalty against the closest reference length.
///
/// Without smoothing a single zero precision gives score 0; add-one
/// smoothing adds 1 to every numerator and denominator.
pub fn bleu(
    hypothesis: &[Token],
    references: &[&[Token]],
    max_n: usize,
    smoothing: bool,
) -> Result<BleuScore> {
    if references.iter().all(|r| r.is_empty()) {
        return Err(Error::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(BleuScore { score: 0.0, empty_hypothesis: true });
    }
    let c = hypothesis.len();
    // closest reference length; ties go to the shorter reference
    let r = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap();

    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let hyp = ngrams(hypothesis, n)?;
        // clip each hypothesis n-gram count by its max count over references
        let mut max_ref: HashMap<Vec<Token>, usize> = HashMap::new();
        for reference in references {
            let rg = ngrams(reference, n)?;
            for (gram, count) in rg.iter() {
                let entry = max_ref.entry(gram.to_vec()).or_insert(0);
                *entry = (*entry).max(count);
            }
        }
        let overlap: usize = hyp
            .iter()
            .map(|(gram, count)| count.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();
        let (num, den) = if smoothing {
            (overlap as f64 + 1.0, hyp.total() as f64 + 1.0)
        } else {
            (overlap as f64, hyp.total() as f64)
        };
        if num == 0.0 || den == 0.0 {
            return Ok(BleuScore { score: 0.0, empty_hypothesis: false });
        }
        log_sum += (num / den).ln() / max_n as f64;
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(BleuScore {
        score: bp * log_sum.exp(),
        empty_hypothesis: false,
    })
}

/// KL divergence sum p ln(p/q) in nats; inputs must be entrywise positive.
pub fn kl_divergence<F: Scalar>(p: &[F], q: &[F]) -> F {
    debug_assert_eq!(p.len(), q.len());
    p.iter()
        .zip(q)
        .fold(F::zero(), |acc, (&pi, &qi)| {
            if pi == F::zero() {
                acc
            } else {
                acc + pi * (pi / qi).ln()
            }
        })
}

/// Distribution Varies: mean KL divergence over ordered pairs of alignment
/// rows, in nats. Undefined for fewer than two bullets.
pub fn dv<F: Scalar>(matrix: &AlignmentMatrix<F>) -> Result<F> {
    mean_pairwise_kl(&matrix.distributions)
}

/// DV on bare distribution rows.
pub fn mean_pairwise_kl<F: Scalar>(rows: &[Vec<F>]) -> Result<F> {
    let m = rows.len();
    if m < 2 {
        return Err(Error::MetricUndefined(format!(
            "dv needs at least 2 outline bullets, got {m}"
        )));
    }
    let mut sum = F::zero();
    for (a, pa) in rows.iter().enumerate() {
        for (b, pb) in rows.iter().enumerate() {
            if a != b {
                sum = sum + kl_divergence(pa, pb);
            }
        }
    }
    Ok(sum / F::from_usize_lossy(m * (m - 1)))
}

/// Argmax of a distribution row, ties broken toward the smallest index.
pub fn peak<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Peak Distance: mean |peak(a) - peak(b)| over ordered bullet pairs, in
/// sentence-index units. Undefined for fewer than two bullets.
pub fn pd<F: Scalar>(matrix: &AlignmentMatrix<F>) -> Result<F> {
    let m = matrix.distributions.len();
    if m < 2 {
        return Err(Error::MetricUndefined(format!(
            "pd needs at least 2 outline bullets, got {m}"
        )));
    }
    let peaks: Vec<usize> = matrix.distributions.iter().map(|r| peak(r)).collect();
    Ok(mean_pairwise_peak_distance::<F>(&peaks))
}

/// Mean pairwise absolute distance over ordered pairs of peak indices.
pub fn mean_pairwise_peak_distance<F: Scalar>(peaks: &[usize]) -> F {
    let m = peaks.len();
    let mut sum = 0usize;
    for (a, &pa) in peaks.iter().enumerate() {
        for (b, &pb) in peaks.iter().enumerate() {
            if a != b {
                sum += pa.abs_diff(pb);
            }
        }
    }
    F::from_usize_lossy(sum) / F::from_usize_lossy(m * (m - 1))
}

/// Which metrics to compute in a corpus run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    R1,
    R2,
    Rl,
    Bleu1,
    Bleu2,
    Bleu4,
    Dv,
    Pd,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::R1,
        Metric::R2,
        Metric::Rl,
        Metric::Bleu1,
        Metric::Bleu2,
        Metric::Bleu4,
        Metric::Dv,
        Metric::Pd,
    ];

    pub fn parse(s: &str) -> Result<Metric> {
        match s.trim().to_lowercase().as_str() {
            "r1" => Ok(Metric::R1),
            "r2" => Ok(Metric::R2),
            "rl" => Ok(Metric::Rl),
            "bleu1" => Ok(Metric::Bleu1),
            "bleu2" => Ok(Metric::Bleu2),
            "bleu4" => Ok(Metric::Bleu4),
            "dv" => Ok(Metric::Dv),
            "pd" => Ok(Metric::Pd),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }

    pub fn needs_reference(self) -> bool {
        !matches!(self, Metric::Dv | Metric::Pd)
    }
}

/// Per-document metric values; a `None` means the metric was skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocumentMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "rougeL")]
    pub rouge_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pd: Option<f64>,
}

impl DocumentMetrics {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::R1 => self.rouge1,
            Metric::R2 => self.rouge2,
            Metric::Rl => self.rouge_l,
            Metric::Bleu1 => self.bleu1,
            Metric::Bleu2 => self.bleu2,
            Metric::Bleu4 => self.bleu4,
            Metric::Dv => self.dv,
            Metric::Pd => self.pd,
        }
    }

    fn set(&mut self, metric: Metric, value: f64) {
        match metric {
            Metric::R1 => self.rouge1 = Some(value),
            Metric::R2 => self.rouge2 = Some(value),
            Metric::Rl => self.rouge_l = Some(value),
            Metric::Bleu1 => self.bleu1 = Some(value),
            Metric::Bleu2 => self.bleu2 = Some(value),
            Metric::Bleu4 => self.bleu4 = Some(value),
            Metric::Dv => self.dv = Some(value),
            Metric::Pd => self.pd = Some(value),
        }
    }
}

/// One skipped (document, metric) pair with its reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub doc_id: String,
    pub metric: String,
    pub reason: String,
}

/// Per-document and aggregate metric values for one corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_document: BTreeMap<String, DocumentMetrics>,
    pub aggregate: DocumentMetrics,
    pub skips: Vec<Skip>,
}

impl MetricReport {
    pub fn document_count(&self) -> usize {
        self.per_document.len()
    }
}

/// Evaluate a corpus. References come from `references` when given (matched
/// by document id); otherwise each document's own text is the reference, so
/// a reference corpus scores 1.0 on overlap metrics by construction.
///
/// Per-document failures become [`Skip`] entries, never corpus aborts.
pub fn evaluate_corpus(
    documents: &[Document],
    references: Option<&HashMap<String, Document>>,
    backend: &SimilarityBackend,
    epsilon: f64,
    metrics: &[Metric],
) -> MetricReport {
    let mut report = MetricReport::default();
    for doc in documents {
        let mut values = DocumentMetrics::default();
        let hyp_tokens = doc.text_tokens();

        let ref_tokens: Option<Vec<Token>> = if metrics.iter().any(|m| m.needs_reference()) {
            match references {
                Some(map) => map.get(&doc.id).map(|d| d.text_tokens()),
                None => Some(hyp_tokens.clone()),
            }
        } else {
            None
        };

        for &metric in metrics {
            let outcome: Result<f64> = match metric {
                Metric::R1 | Metric::R2 | Metric::Rl | Metric::Bleu1 | Metric::Bleu2 | Metric::Bleu4 => {
                    match &ref_tokens {
                        None => Err(Error::MetricUndefined(format!(
                            "no reference document with id {:?}",
                            doc.id
                        ))),
                        Some(rt) => match metric {
                            Metric::R1 => rouge_n(&hyp_tokens, rt, 1).map(|s| s.f1),
                            Metric::R2 => rouge_n(&hyp_tokens, rt, 2).map(|s| s.f1),
                            Metric::Rl => rouge_l(&hyp_tokens, rt).map(|s| s.f1),
                            Metric::Bleu1 => bleu(&hyp_tokens, &[rt], 1, false).map(|s| s.score),
                            Metric::Bleu2 => bleu(&hyp_tokens, &[rt], 2, false).map(|s| s.score),
                            Metric::Bleu4 => bleu(&hyp_tokens, &[rt], 4, false).map(|s| s.score),
                            _ => unreachable!(),
                        },
                    }
                }
                Metric::Dv | Metric::Pd => {
                    alignment_matrix::<f64>(backend, &doc.outline, &doc.text, epsilon).and_then(
                        |m| match metric {
                            Metric::Dv => dv(&m),
                            Metric::Pd => pd(&m),
                            _ => unreachable!(),
                        },
                    )
                }
            };
            match outcome {
                Ok(v) => values.set(metric, v),
                Err(e) => report.skips.push(Skip {
                    doc_id: doc.id.clone(),
                    metric: format!("{metric:?}").to_lowercase(),
                    reason: e.to_string(),
                }),
            }
        }
        report.per_document.insert(doc.id.clone(), values);
    }

    for &metric in metrics {
        let values: Vec<f64> = report
            .per_document
            .values()
            .filter_map(|d| d.get(metric))
            .collect();
        if !values.is_empty() {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            report.aggregate.set(metric, mean);
        }
    }
    report
}
