//! Seeded overlap-mixture simulation at the transcript level.
//!
//! Multi-talker training samples are built on the fly from a pool of
//! single-speaker, single-utterance timed transcripts: draw a speaker
//! count, draw that many utterances without replacement, optionally speed-
//! perturb each, then delay each utterance after the first by a uniformly
//! random amount bounded by the current mixture length. Speakers are
//! relabeled `spk1..spkS` so pool reuse can never produce self-overlap.
//!
//! Everything is driven by the pinned RNG contract in [`crate::rng`]:
//! sample `i` of a run draws from its own generator derived from
//! `(run seed, i)`, making generation order-independent and parallel-safe.
//! The draw order within one sample is fixed: speaker count, utterance
//! selection, one speed-ratio index per utterance, then delays for
//! utterances 2..S (re-drawn as a block when a concurrency cap rejects a
//! placement; after 100 rejected placements the utterance selection is
//! re-drawn).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::fmt;

use rand_chacha::ChaCha8Rng;

use crate::rng::{rng_from_seed, sample_seed, sample_indices, uniform_below, uniform_inclusive};
use crate::transcript::{AnnotatedTranscript, TimedToken};

/// Exact positive rational speed factor. Applying ratio `r` divides every
/// emission time by `r` (faster speech emits earlier), rounding half away
/// from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpeedRatio {
    num: u64,
    den: u64,
}

impl SpeedRatio {
    pub const IDENTITY: SpeedRatio = SpeedRatio { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Option<SpeedRatio> {
        if num == 0 || den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(SpeedRatio {
            num: num / g,
            den: den / g,
        })
    }

    /// Parses a plain decimal like `"0.9"`, `"1"`, or `"1.10"` exactly.
    pub fn from_decimal_str(s: &str) -> Option<SpeedRatio> {
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        let digits_ok = |d: &str| d.bytes().all(|b| b.is_ascii_digit());
        if !digits_ok(int_part) || !digits_ok(frac_part) || frac_part.len() > 18 {
            return None;
        }
        let mut num: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().ok()?
        };
        let mut den: u64 = 1;
        for b in frac_part.bytes() {
            num = num.checked_mul(10)?.checked_add(u64::from(b - b'0'))?;
            den = den.checked_mul(10)?;
        }
        SpeedRatio::new(num, den)
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// `round(ms / ratio)`, computed exactly in integers.
    pub fn apply_ms(&self, ms: u64) -> u64 {
        let scaled = 2 * u128::from(ms) * u128::from(self.den) + u128::from(self.num);
        (scaled / (2 * u128::from(self.num))) as u64
    }
}

impl fmt::Display for SpeedRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// How the number of mixed utterances is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeakerCountLaw {
    /// One utterance with probability `single_prob_pct`%, otherwise two.
    TwoWay { single_prob_pct: u8 },
    /// Uniform over `1..=max` utterances.
    Uniform { max: u32 },
}

impl SpeakerCountLaw {
    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        match *self {
            SpeakerCountLaw::TwoWay { single_prob_pct } => {
                if uniform_below(rng, 100) < u64::from(single_prob_pct) {
                    1
                } else {
                    2
                }
            }
            SpeakerCountLaw::Uniform { max } => 1 + uniform_below(rng, u64::from(max)) as usize,
        }
    }

}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureConfig {
    pub law: SpeakerCountLaw,
    /// Candidate speed factors, one drawn per source utterance. Empty
    /// means no perturbation (and no draw).
    pub speed_ratios: Vec<SpeedRatio>,
    /// Reject placements whose peak utterance concurrency exceeds this.
    pub max_concurrency_cap: Option<usize>,
    pub rng_seed: u64,
}

impl MixtureConfig {
    /// Two-way law at the given single-speaker percentage, no
    /// perturbation, no cap.
    pub fn two_way(single_prob_pct: u8, rng_seed: u64) -> MixtureConfig {
        MixtureConfig {
            law: SpeakerCountLaw::TwoWay { single_prob_pct },
            speed_ratios: Vec::new(),
            max_concurrency_cap: None,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), MixtureError> {
        match self.law {
            SpeakerCountLaw::TwoWay { single_prob_pct } if single_prob_pct > 100 => {
                return Err(MixtureError::BadConfig {
                    reason: String::from("single-speaker probability above 100%"),
                })
            }
            SpeakerCountLaw::Uniform { max } if max < 1 => {
                return Err(MixtureError::BadConfig {
                    reason: String::from("uniform speaker-count law needs max >= 1"),
                })
            }
            _ => {}
        }
        if let Some(0) = self.max_concurrency_cap {
            return Err(MixtureError::BadConfig {
                reason: String::from("concurrency cap must be at least 1"),
            });
        }
        Ok(())
    }
}

/// One simulated sample: the mixed transcript, per-speaker reference token
/// lists for scoring, and how it was built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureSample {
    pub transcript: AnnotatedTranscript,
    pub references: BTreeMap<String, Vec<String>>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Seed of this sample's derived generator.
    pub sample_seed: u64,
    pub sources: Vec<SourceUtterance>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUtterance {
    pub source_sample_id: String,
    /// Speaker label assigned in the mixture (`spk1`..`spkS`).
    pub speaker: String,
    pub delay_ms: u64,
    pub speed: SpeedRatio,
}

/// Scales every emission time by `1/ratio`, preserving order.
pub fn speed_perturb(transcript: &AnnotatedTranscript, ratio: SpeedRatio) -> AnnotatedTranscript {
    AnnotatedTranscript {
        sample_id: transcript.sample_id.clone(),
        tokens: transcript
            .tokens
            .iter()
            .map(|t| TimedToken {
                emission_ms: ratio.apply_ms(t.emission_ms),
                ..t.clone()
            })
            .collect(),
    }
}

/// Draws one mixture from the pool using the supplied generator. The
/// caller controls seeding; [`generate_dataset`] derives one generator per
/// sample index.
pub fn sample_mixture(
    pool: &[AnnotatedTranscript],
    cfg: &MixtureConfig,
    rng: &mut ChaCha8Rng,
    sample_id: &str,
    sample_seed: u64,
) -> Result<MixtureSample, MixtureError> {
    cfg.validate()?;
    check_pool(pool)?;

    let count = cfg.law.draw(rng);
    if count > pool.len() {
        return Err(MixtureError::InsufficientPool {
            needed: count,
            available: pool.len(),
        });
    }

    // Re-drawing the utterance selection keeps `count` fixed so the
    // speaker-count law stays exact under rejection.
    for _ in 0..UTTERANCE_REDRAW_LIMIT {
        let picks = sample_indices(rng, pool.len(), count);
        let prepared: Vec<(usize, AnnotatedTranscript, SpeedRatio)> = picks
            .iter()
            .map(|&p| {
                let ratio = if cfg.speed_ratios.is_empty() {
                    SpeedRatio::IDENTITY
                } else {
                    cfg.speed_ratios
                        [uniform_below(rng, cfg.speed_ratios.len() as u64) as usize]
                };
                (p, speed_perturb(&pool[p], ratio), ratio)
            })
            .collect();

        for _ in 0..PLACEMENT_RETRY_LIMIT {
            if let Some(sample) =
                try_placement(pool, &prepared, cfg, rng, sample_id, sample_seed)
            {
                return Ok(sample);
            }
        }
    }
    Err(MixtureError::CapRetriesExhausted {
        cap: cfg.max_concurrency_cap.unwrap_or(0),
    })
}

/// Rejected placements per utterance selection.
const PLACEMENT_RETRY_LIMIT: usize = 100;
/// Utterance re-draws before giving up on an unsatisfiable cap.
const UTTERANCE_REDRAW_LIMIT: usize = 1000;

fn try_placement(
    pool: &[AnnotatedTranscript],
    prepared: &[(usize, AnnotatedTranscript, SpeedRatio)],
    cfg: &MixtureConfig,
    rng: &mut ChaCha8Rng,
    sample_id: &str,
    sample_seed: u64,
) -> Option<MixtureSample> {
    let mut tokens: Vec<TimedToken> = Vec::new();
    let mut references = BTreeMap::new();
    let mut sources = Vec::with_capacity(prepared.len());
    let mut mixture_len: u64 = 0;

    for (k, (pool_index, utterance, ratio)) in prepared.iter().enumerate() {
        let speaker = spk_label(k + 1);
        let utt_id = utt_label(k + 1);
        let delay = if k == 0 {
            0
        } else {
            uniform_inclusive(rng, 0, mixture_len)
        };
        for t in &utterance.tokens {
            let emission = t.emission_ms + delay;
            mixture_len = mixture_len.max(emission);
            tokens.push(TimedToken {
                text: t.text.clone(),
                emission_ms: emission,
                speaker: speaker.clone(),
                utterance_id: utt_id.clone(),
                utterance_final: t.utterance_final,
            });
        }
        references.insert(
            speaker.clone(),
            utterance.tokens.iter().map(|t| t.text.clone()).collect(),
        );
        sources.push(SourceUtterance {
            source_sample_id: pool[*pool_index].sample_id.clone(),
            speaker,
            delay_ms: delay,
            speed: *ratio,
        });
    }

    let transcript = AnnotatedTranscript::new(sample_id, tokens);
    if let Some(cap) = cfg.max_concurrency_cap {
        let profile = transcript
            .max_concurrency()
            .expect("mixtures of valid pool entries are valid");
        if profile.max_concurrent > cap {
            return None;
        }
    }
    Some(MixtureSample {
        transcript,
        references,
        provenance: Provenance {
            sample_seed,
            sources,
        },
    })
}

fn spk_label(k: usize) -> String {
    let mut s = String::from("spk");
    s.push_str(&k.to_string());
    s
}

fn utt_label(k: usize) -> String {
    let mut s = String::from("u");
    s.push_str(&k.to_string());
    s
}

/// Deterministic stream of `n` mixtures: sample `i` draws from a generator
/// seeded with `sample_seed(cfg.rng_seed, i)` and gets id `mix<i>`.
/// Identical inputs reproduce identical samples, in any order.
pub fn generate_dataset<'a>(
    pool: &'a [AnnotatedTranscript],
    cfg: &'a MixtureConfig,
    n: u64,
) -> impl Iterator<Item = Result<MixtureSample, MixtureError>> + 'a {
    (0..n).map(move |i| {
        let seed = sample_seed(cfg.rng_seed, i);
        let mut rng = rng_from_seed(seed);
        let mut id = String::from("mix");
        id.push_str(&i.to_string());
        sample_mixture(pool, cfg, &mut rng, &id, seed)
    })
}

fn check_pool(pool: &[AnnotatedTranscript]) -> Result<(), MixtureError> {
    if pool.is_empty() {
        return Err(MixtureError::InsufficientPool {
            needed: 1,
            available: 0,
        });
    }
    for (index, entry) in pool.iter().enumerate() {
        let reason = if entry.tokens.is_empty() {
            Some("no tokens")
        } else if !entry.validate().is_empty() {
            Some("transcript invariants violated")
        } else if entry
            .tokens
            .iter()
            .any(|t| t.speaker != entry.tokens[0].speaker)
        {
            Some("more than one speaker")
        } else if entry
            .tokens
            .iter()
            .any(|t| t.utterance_id != entry.tokens[0].utterance_id)
        {
            Some("more than one utterance")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(MixtureError::InvalidPoolEntry {
                index,
                sample_id: entry.sample_id.clone(),
                reason: String::from(reason),
            });
        }
    }
    Ok(())
}

/// Simulation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MixtureError {
    BadConfig {
        reason: String,
    },
    InsufficientPool {
        needed: usize,
        available: usize,
    },
    InvalidPoolEntry {
        index: usize,
        sample_id: String,
        reason: String,
    },
    /// No placement satisfied the concurrency cap within the retry budget.
    CapRetriesExhausted {
        cap: usize,
    },
}

impl fmt::Display for MixtureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixtureError::BadConfig { reason } => write!(f, "bad mixture config: {reason}"),
            MixtureError::InsufficientPool { needed, available } => {
                write!(f, "pool has {available} utterances, need {needed}")
            }
            MixtureError::InvalidPoolEntry {
                index,
                sample_id,
                reason,
            } => write!(f, "pool entry {index} ({sample_id:?}): {reason}"),
            MixtureError::CapRetriesExhausted { cap } => {
                write!(f, "no placement satisfied concurrency cap {cap} within retry budget")
            }
        }
    }
}

impl core::error::Error for MixtureError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn utterance(id: &str, times: &[u64]) -> AnnotatedTranscript {
        let last = times.len() - 1;
        AnnotatedTranscript::new(
            id,
            times
                .iter()
                .enumerate()
                .map(|(k, &ms)| {
                    TimedToken::new(
                        alloc::format!("{id}w{k}"),
                        ms,
                        "src",
                        alloc::format!("{id}utt"),
                        k == last,
                    )
                })
                .collect(),
        )
    }

    fn pool() -> Vec<AnnotatedTranscript> {
        vec![
            utterance("p0", &[100, 600, 1100]),
            utterance("p1", &[200, 900]),
            utterance("p2", &[300, 800, 1400, 2000]),
            utterance("p3", &[500]),
        ]
    }

    #[test]
    fn speed_ratio_parses_decimals_exactly() {
        assert_eq!(SpeedRatio::from_decimal_str("0.9"), SpeedRatio::new(9, 10));
        assert_eq!(SpeedRatio::from_decimal_str("1.0"), SpeedRatio::new(1, 1));
        assert_eq!(
            SpeedRatio::from_decimal_str("1.10"),
            SpeedRatio::new(11, 10)
        );
        assert_eq!(SpeedRatio::from_decimal_str("2"), SpeedRatio::new(2, 1));
        assert!(SpeedRatio::from_decimal_str("").is_none());
        assert!(SpeedRatio::from_decimal_str("0").is_none());
        assert!(SpeedRatio::from_decimal_str("x.9").is_none());
    }

    #[test]
    fn speed_perturb_scales_and_rounds() {
        let t = utterance("p", &[900, 1000]);
        let identity = speed_perturb(&t, SpeedRatio::IDENTITY);
        assert_eq!(identity, t);
        let double = speed_perturb(&t, SpeedRatio::new(2, 1).unwrap());
        assert_eq!(double.tokens[0].emission_ms, 450);
        assert_eq!(double.tokens[1].emission_ms, 500);
        let slow = speed_perturb(&t, SpeedRatio::new(9, 10).unwrap());
        assert_eq!(slow.tokens[0].emission_ms, 1000);
    }

    #[test]
    fn p100_always_single_speaker() {
        let cfg = MixtureConfig::two_way(100, 1);
        let pool = pool();
        for result in generate_dataset(&pool, &cfg, 50) {
            let sample = result.unwrap();
            assert_eq!(sample.references.len(), 1);
            assert_eq!(sample.provenance.sources[0].delay_ms, 0);
        }
    }

    #[test]
    fn p0_always_two_speakers_with_bounded_delay() {
        let cfg = MixtureConfig::two_way(0, 2);
        let pool = pool();
        for result in generate_dataset(&pool, &cfg, 50) {
            let sample = result.unwrap();
            assert_eq!(sample.references.len(), 2);
            let first_len = sample
                .transcript
                .tokens
                .iter()
                .filter(|t| t.speaker == "spk1")
                .map(|t| t.emission_ms)
                .max()
                .unwrap();
            assert!(sample.provenance.sources[1].delay_ms <= first_len);
        }
    }

    #[test]
    fn mixtures_are_valid_and_relabeled() {
        let cfg = MixtureConfig {
            law: SpeakerCountLaw::Uniform { max: 4 },
            speed_ratios: vec![
                SpeedRatio::new(9, 10).unwrap(),
                SpeedRatio::IDENTITY,
                SpeedRatio::new(11, 10).unwrap(),
            ],
            max_concurrency_cap: None,
            rng_seed: 3,
        };
        let pool = pool();
        for result in generate_dataset(&pool, &cfg, 50) {
            let sample = result.unwrap();
            assert!(sample.transcript.validate().is_empty());
            for (k, source) in sample.provenance.sources.iter().enumerate() {
                assert_eq!(source.speaker, alloc::format!("spk{}", k + 1));
            }
        }
    }

    #[test]
    fn references_project_the_transcript() {
        let cfg = MixtureConfig::two_way(0, 7);
        let pool = pool();
        for result in generate_dataset(&pool, &cfg, 20) {
            let sample = result.unwrap();
            for (speaker, tokens) in &sample.references {
                let projection: Vec<String> = sample
                    .transcript
                    .tokens
                    .iter()
                    .filter(|t| &t.speaker == speaker)
                    .map(|t| t.text.clone())
                    .collect();
                assert_eq!(&projection, tokens);
            }
        }
    }

    #[test]
    fn per_speaker_gaps_survive_mixing() {
        let cfg = MixtureConfig::two_way(0, 11);
        let pool = pool();
        for result in generate_dataset(&pool, &cfg, 20) {
            let sample = result.unwrap();
            for source in &sample.provenance.sources {
                let times: Vec<u64> = sample
                    .transcript
                    .tokens
                    .iter()
                    .filter(|t| t.speaker == source.speaker)
                    .map(|t| t.emission_ms)
                    .collect();
                let original = &pool
                    .iter()
                    .find(|p| p.sample_id == source.source_sample_id)
                    .unwrap()
                    .tokens;
                assert_eq!(times.len(), original.len());
                for (pair, orig) in times.windows(2).zip(original.windows(2)) {
                    let gap = pair[1] - pair[0];
                    let expected =
                        source.speed.apply_ms(orig[1].emission_ms) - source.speed.apply_ms(orig[0].emission_ms);
                    assert_eq!(gap, expected);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = MixtureConfig {
            law: SpeakerCountLaw::Uniform { max: 3 },
            speed_ratios: vec![SpeedRatio::new(9, 10).unwrap(), SpeedRatio::IDENTITY],
            max_concurrency_cap: Some(2),
            rng_seed: 99,
        };
        let pool = pool();
        let a: Vec<_> = generate_dataset(&pool, &cfg, 30).collect();
        let b: Vec<_> = generate_dataset(&pool, &cfg, 30).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn concurrency_cap_is_enforced() {
        let cfg = MixtureConfig {
            law: SpeakerCountLaw::Uniform { max: 4 },
            speed_ratios: Vec::new(),
            max_concurrency_cap: Some(2),
            rng_seed: 5,
        };
        let pool = pool();
        for result in generate_dataset(&pool, &cfg, 100) {
            let sample = result.unwrap();
            let profile = sample.transcript.max_concurrency().unwrap();
            assert!(profile.max_concurrent <= 2);
        }
    }

    #[test]
    fn pool_smaller_than_speaker_count_is_an_error() {
        let cfg = MixtureConfig::two_way(0, 1);
        let pool = vec![utterance("only", &[100])];
        let results: Vec<_> = generate_dataset(&pool, &cfg, 1).collect();
        assert!(matches!(
            results[0],
            Err(MixtureError::InsufficientPool {
                needed: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn invalid_pool_entries_are_rejected() {
        let cfg = MixtureConfig::two_way(100, 1);
        let mut bad = utterance("bad", &[100, 200]);
        bad.tokens[1].utterance_final = false;
        let pool = vec![utterance("ok", &[100]), bad];
        let results: Vec<_> = generate_dataset(&pool, &cfg, 1).collect();
        assert!(matches!(
            results[0],
            Err(MixtureError::InvalidPoolEntry { index: 1, .. })
        ));
    }
}
