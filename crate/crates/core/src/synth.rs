//! Synthetic outline/text corpora with controlled outline-usage profiles.
//!
//! Bullets get pairwise-disjoint vocabularies and the noise vocabulary is
//! disjoint from all of them, so with full echo strength the argmax of each
//! alignment row is forced to the injected peak position and DV/PD tests
//! become exact rather than statistical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Source};
use crate::error::{Error, Result};
use crate::metrics::{dv, pd};
use crate::similarity::{alignment_matrix, SimilarityBackend};

/// Where the injected bullet echoes land in the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// All peaks inside the first ceil(n/10) sentences.
    FrontLoaded,
    /// Peaks at explicit positions across the text.
    Spread,
    /// No echoes at all; pure noise text.
    UniformNoise,
}

/// Parameters for one synthetic document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthProfile {
    pub shape: Shape,
    pub n_bullets: usize,
    pub n_sentences: usize,
    /// Peak sentence index per bullet; required for `Spread`, ignored for
    /// `UniformNoise`, sampled per seed for `FrontLoaded` when empty.
    #[serde(default)]
    pub peak_positions: Vec<usize>,
    /// Fraction of each bullet's tokens copied into its peak sentence.
    pub echo_strength: f64,
    pub noise_vocab_size: usize,
    pub seed: u64,
}

impl SynthProfile {
    fn validate(&self) -> Result<()> {
        if self.n_bullets == 0 || self.n_sentences == 0 {
            return Err(Error::InvalidProfile("need at least 1 bullet and 1 sentence".into()));
        }
        if self.n_bullets > self.n_sentences {
            return Err(Error::InvalidProfile(format!(
                "more bullets ({}) than sentences ({})",
                self.n_bullets, self.n_sentences
            )));
        }
        if !(self.echo_strength > 0.0 && self.echo_strength <= 1.0) {
            return Err(Error::InvalidProfile(format!(
                "echo_strength must be in (0, 1], got {}",
                self.echo_strength
            )));
        }
        if self.shape == Shape::Spread {
            if self.peak_positions.len() != self.n_bullets {
                return Err(Error::InvalidProfile(
                    "spread shape needs one peak position per bullet".into(),
                ));
            }
            if self.peak_positions.iter().any(|&p| p >= self.n_sentences) {
                return Err(Error::InvalidProfile("peak position out of range".into()));
            }
        }
        if self.noise_vocab_size == 0 {
            return Err(Error::InvalidProfile("noise_vocab_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Resolve peak positions for this profile's shape and seed.
    pub fn peaks(&self) -> Result<Vec<usize>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(match self.shape {
            Shape::Spread => self.peak_positions.clone(),
            Shape::FrontLoaded => {
                let head = self.n_sentences.div_ceil(10);
                (0..self.n_bullets)
                    .map(|_| rng.gen_range(0..head))
                    .collect()
            }
            Shape::UniformNoise => vec![],
        })
    }
}

const BULLET_TOKENS: usize = 8;
const SENTENCE_TOKENS: usize = 10;

/// Build one synthetic document from a profile, deterministically per seed.
pub fn synthesize(profile: &SynthProfile) -> Result<Document> {
    let peaks = profile.peaks()?;
    // rng state must match peaks(): consume the same draws first
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    if profile.shape == Shape::FrontLoaded {
        let head = profile.n_sentences.div_ceil(10);
        for _ in 0..profile.n_bullets {
            let _: usize = rng.gen_range(0..head);
        }
    }

    let bullets: Vec<Vec<String>> = (0..profile.n_bullets)
        .map(|a| (0..BULLET_TOKENS).map(|t| format!("plot{a}word{t}")).collect())
        .collect();

    let mut sentences: Vec<Vec<String>> = (0..profile.n_sentences)
        .map(|_| {
            (0..SENTENCE_TOKENS)
                .map(|_| format!("noise{}", rng.gen_range(0..profile.noise_vocab_size)))
                .collect()
        })
        .collect();

    if profile.shape != Shape::UniformNoise {
        let echo_count =
            ((profile.echo_strength * BULLET_TOKENS as f64).ceil() as usize).clamp(1, BULLET_TOKENS);
        // append rather than replace, so bullets sharing a peak never
        // erase each other's echoes
        for (a, &peak) in peaks.iter().enumerate() {
            sentences[peak].extend(bullets[a][..echo_count].iter().cloned());
        }
    }

    let outline_raws: Vec<String> = bullets
        .iter()
        .map(|tokens| format!("{}.", capitalize(&tokens.join(" "))))
        .collect();
    let text_raws: Vec<String> = sentences
        .iter()
        .map(|tokens| format!("{}.", capitalize(&tokens.join(" "))))
        .collect();

    Ok(Document::new(
        format!("synth-{:?}-{}", profile.shape, profile.seed).to_lowercase(),
        text_raws[0].clone(),
        outline_raws,
        text_raws,
        Source::Reference,
        None,
    ))
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// One sweep row: the profile's knobs with its measured DV and PD.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub shape: String,
    pub n_bullets: usize,
    pub n_sentences: usize,
    pub echo_strength: f64,
    pub seed: u64,
    pub dv: f64,
    pub pd: f64,
}

/// Synthesize each profile and measure DV/PD on it.
pub fn sweep(
    profiles: &[SynthProfile],
    backend: &SimilarityBackend,
    epsilon: f64,
) -> Result<Vec<SweepRow>> {
    if profiles.is_empty() {
        return Err(Error::InvalidProfile("empty profile list".into()));
    }
    let mut rows = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let doc = synthesize(profile)?;
        let matrix = alignment_matrix::<f64>(backend, &doc.outline, &doc.text, epsilon)?;
        rows.push(SweepRow {
            shape: format!("{:?}", profile.shape).to_lowercase(),
            n_bullets: profile.n_bullets,
            n_sentences: profile.n_sentences,
            echo_strength: profile.echo_strength,
            seed: profile.seed,
            dv: dv(&matrix)?,
            pd: pd(&matrix)?,
        });
    }
    Ok(rows)
}

/// Write sweep rows as CSV with a stable column order.
pub fn write_sweep_csv(path: &std::path::Path, rows: &[SweepRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidConfig(format!("csv open {path:?}: {e}")))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::InvalidConfig(format!("csv write: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{mean_pairwise_peak_distance, peak};

    fn spread_profile(peaks: Vec<usize>, echo: f64, seed: u64) -> SynthProfile {
        SynthProfile {
            shape: Shape::Spread,
            n_bullets: peaks.len(),
            n_sentences: 40,
            peak_positions: peaks,
            echo_strength: echo,
            noise_vocab_size: 200,
            seed,
        }
    }

    #[test]
    fn full_echo_forces_argmax_at_peaks() {
        let profile = spread_profile(vec![5, 20, 35], 1.0, 17);
        let doc = synthesize(&profile).unwrap();
        let m = alignment_matrix::<f64>(&SimilarityBackend::UnigramF1, &doc.outline, &doc.text, 1e-6)
            .unwrap();
        for (a, expected) in [5usize, 20, 35].iter().enumerate() {
            assert_eq!(peak(&m.distributions[a]), *expected);
        }
        assert_eq!(pd(&m).unwrap(), 20.0);
    }

    #[test]
    fn all_peaks_at_zero_gives_pd_zero() {
        let profile = spread_profile(vec![0, 0, 0], 1.0, 3);
        let doc = synthesize(&profile).unwrap();
        let m = alignment_matrix::<f64>(&SimilarityBackend::UnigramF1, &doc.outline, &doc.text, 1e-6)
            .unwrap();
        assert_eq!(pd(&m).unwrap(), 0.0);
    }

    #[test]
    fn same_seed_is_deterministic() {
        let profile = spread_profile(vec![1, 8, 30], 0.6, 99);
        assert_eq!(synthesize(&profile).unwrap(), synthesize(&profile).unwrap());
    }

    #[test]
    fn more_bullets_than_sentences_rejected() {
        let profile = SynthProfile {
            shape: Shape::Spread,
            n_bullets: 5,
            n_sentences: 3,
            peak_positions: vec![0, 1, 2, 0, 1],
            echo_strength: 1.0,
            noise_vocab_size: 50,
            seed: 0,
        };
        assert!(synthesize(&profile).is_err());
    }

    #[test]
    fn front_loaded_peaks_stay_in_head() {
        for seed in 0..20 {
            let profile = SynthProfile {
                shape: Shape::FrontLoaded,
                n_bullets: 3,
                n_sentences: 40,
                peak_positions: vec![],
                echo_strength: 1.0,
                noise_vocab_size: 200,
                seed,
            };
            let peaks = profile.peaks().unwrap();
            assert!(peaks.iter().all(|&p| p < 4));
            // synthesis places the echoes exactly there
            let doc = synthesize(&profile).unwrap();
            let m = alignment_matrix::<f64>(
                &SimilarityBackend::UnigramF1,
                &doc.outline,
                &doc.text,
                1e-6,
            )
            .unwrap();
            let measured: Vec<usize> = m.distributions.iter().map(|r| peak(r)).collect();
            assert_eq!(measured, peaks);
            assert_eq!(
                pd(&m).unwrap(),
                mean_pairwise_peak_distance::<f64>(&peaks)
            );
        }
    }

    #[test]
    fn sweep_emits_one_row_per_profile() {
        let profiles = vec![
            spread_profile(vec![2, 10, 30], 1.0, 1),
            spread_profile(vec![0, 1, 2], 1.0, 2),
        ];
        let rows = sweep(&profiles, &SimilarityBackend::UnigramF1, 1e-6).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].pd > rows[1].pd);
    }

    #[test]
    fn dv_nondecreasing_in_echo_strength_on_average() {
        let echoes = [0.2, 0.4, 0.6, 0.8, 1.0];
        let mut means = Vec::new();
        for &echo in &echoes {
            let mut total = 0.0;
            for seed in 0..100 {
                let profile = spread_profile(vec![5, 20, 35], echo, seed);
                let doc = synthesize(&profile).unwrap();
                let m = alignment_matrix::<f64>(
                    &SimilarityBackend::UnigramF1,
                    &doc.outline,
                    &doc.text,
                    1e-6,
                )
                .unwrap();
                total += dv(&m).unwrap();
            }
            means.push(total / 100.0);
        }
        for pair in means.windows(2) {
            assert!(pair[1] >= pair[0], "dv means not monotone: {means:?}");
        }
    }
}
