//! Time- and speaker-annotated transcripts: the serializer's input.
//!
//! A transcript is a flat token list. Each token carries its emission time
//! (end time, integer milliseconds), speaker, utterance id, and a flag on
//! the last token of each utterance. Utterance ids are globally unique:
//! two speakers never share one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use crate::tokens::is_reserved_token;

/// One recognition token with its annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedToken {
    /// Token text. Never empty, never a reserved channel-token form.
    pub text: String,
    /// Emission (end) time in milliseconds. The serialization sort key.
    pub emission_ms: u64,
    /// Speaker identifier. Never empty.
    pub speaker: String,
    /// Utterance identifier, unique to one speaker.
    pub utterance_id: String,
    /// True on the last token of the utterance.
    pub utterance_final: bool,
}

impl TimedToken {
    pub fn new(
        text: impl Into<String>,
        emission_ms: u64,
        speaker: impl Into<String>,
        utterance_id: impl Into<String>,
        utterance_final: bool,
    ) -> Self {
        TimedToken {
            text: text.into(),
            emission_ms,
            speaker: speaker.into(),
            utterance_id: utterance_id.into(),
            utterance_final,
        }
    }
}

/// An ordered token list for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedTranscript {
    pub sample_id: String,
    pub tokens: Vec<TimedToken>,
}

impl AnnotatedTranscript {
    pub fn new(sample_id: impl Into<String>, tokens: Vec<TimedToken>) -> Self {
        AnnotatedTranscript {
            sample_id: sample_id.into(),
            tokens,
        }
    }

    /// Checks every transcript invariant. An empty result means valid.
    /// Violations are data, not failures; each names the offending token
    /// index and the broken rule.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        // utterance id -> (speaker, final token index, last seen index, last time)
        let mut utterances: BTreeMap<&str, UttState<'_>> = BTreeMap::new();

        for (index, token) in self.tokens.iter().enumerate() {
            if token.text.is_empty() {
                violations.push(Violation::new(index, Rule::EmptyToken));
            } else if is_reserved_token(&token.text) {
                violations.push(Violation::new(index, Rule::ReservedToken));
            }
            if token.speaker.is_empty() {
                violations.push(Violation::new(index, Rule::EmptySpeaker));
            }

            let state = utterances
                .entry(token.utterance_id.as_str())
                .or_insert(UttState {
                    speaker: &token.speaker,
                    final_index: None,
                    last_index: index,
                    last_time: token.emission_ms,
                    closed_violation: false,
                });
            if state.speaker != token.speaker {
                violations.push(Violation::new(index, Rule::UtteranceSpeakerConflict));
            }
            if state.last_index != index {
                if token.emission_ms < state.last_time {
                    violations.push(Violation::new(index, Rule::NonMonotoneUtteranceTimes));
                }
                if state.final_index.is_some() && !state.closed_violation {
                    // Token after the utterance's final token.
                    violations.push(Violation::new(index, Rule::FinalTokenNotLast));
                    state.closed_violation = true;
                }
            }
            if token.utterance_final {
                if state.final_index.is_some() && state.last_index != index {
                    violations.push(Violation::new(index, Rule::MultipleFinalTokens));
                } else {
                    state.final_index = Some(index);
                }
            }
            state.last_index = index;
            state.last_time = token.emission_ms;
        }

        for (_, state) in utterances {
            if state.final_index.is_none() {
                violations.push(Violation::new(state.last_index, Rule::MissingFinalToken));
            }
        }
        violations.sort_by_key(|v| v.token_index);
        violations
    }

    /// `validate` folded into a `Result`, for operations whose precondition
    /// is a valid transcript.
    pub fn check_valid(&self) -> Result<(), Violations> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Violations(violations))
        }
    }

    /// Token indices in stable emission-time order: sorted by `emission_ms`,
    /// ties broken by input order. This is the serialization order.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.tokens.len()).collect();
        order.sort_by_key(|&i| self.tokens[i].emission_ms);
        order
    }

    /// Peak number of simultaneously active utterances.
    ///
    /// An utterance is active from its first position in emission-sorted
    /// order through its final-token position, inclusive. Activity is
    /// judged on token interleaving, not wall-clock spans: emission times
    /// are end times and utterance start times are unknown.
    pub fn max_concurrency(&self) -> Result<ConcurrencyProfile, Violations> {
        self.check_valid()?;
        let order = self.sorted_indices();

        // Sorted-position window of each utterance.
        let mut windows: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (pos, &i) in order.iter().enumerate() {
            let id = self.tokens[i].utterance_id.as_str();
            let entry = windows.entry(id).or_insert((pos, pos));
            entry.1 = pos;
        }

        let mut per_token_active = Vec::with_capacity(order.len());
        let mut max_concurrent = 0usize;
        for pos in 0..order.len() {
            let active: BTreeSet<String> = windows
                .iter()
                .filter(|(_, &(first, last))| first <= pos && pos <= last)
                .map(|(&id, _)| String::from(id))
                .collect();
            max_concurrent = max_concurrent.max(active.len());
            per_token_active.push((pos, active));
        }

        Ok(ConcurrencyProfile {
            max_concurrent,
            per_token_active,
        })
    }

    /// Replaces each word token by its subwords, all sharing the word's
    /// emission time, speaker, and utterance id; the utterance-final flag
    /// moves to the last subword of the final word.
    pub fn expand_subwords(
        &self,
        lexicon: &BTreeMap<String, Vec<String>>,
        policy: SubwordPolicy,
    ) -> Result<AnnotatedTranscript, LexiconError> {
        let mut tokens = Vec::with_capacity(self.tokens.len());
        for word in &self.tokens {
            match lexicon.get(&word.text) {
                Some(subwords) => {
                    if subwords.is_empty() {
                        return Err(LexiconError::EmptyExpansion {
                            word: word.text.clone(),
                        });
                    }
                    let last = subwords.len() - 1;
                    for (k, sub) in subwords.iter().enumerate() {
                        tokens.push(TimedToken {
                            text: sub.clone(),
                            emission_ms: word.emission_ms,
                            speaker: word.speaker.clone(),
                            utterance_id: word.utterance_id.clone(),
                            utterance_final: word.utterance_final && k == last,
                        });
                    }
                }
                None if policy == SubwordPolicy::Permissive => tokens.push(word.clone()),
                None => {
                    return Err(LexiconError::MissingWord {
                        word: word.text.clone(),
                    })
                }
            }
        }
        Ok(AnnotatedTranscript {
            sample_id: self.sample_id.clone(),
            tokens,
        })
    }
}

struct UttState<'a> {
    speaker: &'a str,
    final_index: Option<usize>,
    last_index: usize,
    last_time: u64,
    closed_violation: bool,
}

/// Lexicon lookup behavior for [`AnnotatedTranscript::expand_subwords`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubwordPolicy {
    /// Missing words are an error.
    Strict,
    /// Missing words map to themselves.
    Permissive,
}

/// Per-token activity and peak concurrency of a transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcurrencyProfile {
    pub max_concurrent: usize,
    /// `(sorted token position, active utterance ids)` per token.
    pub per_token_active: Vec<(usize, BTreeSet<String>)>,
}

/// One broken transcript invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub token_index: usize,
    pub rule: Rule,
}

impl Violation {
    fn new(token_index: usize, rule: Rule) -> Self {
        Violation { token_index, rule }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "token {}: {}", self.token_index, self.rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    EmptyToken,
    ReservedToken,
    EmptySpeaker,
    NonMonotoneUtteranceTimes,
    MissingFinalToken,
    FinalTokenNotLast,
    MultipleFinalTokens,
    UtteranceSpeakerConflict,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Rule::EmptyToken => "empty token text",
            Rule::ReservedToken => "token collides with a reserved channel-token form",
            Rule::EmptySpeaker => "empty speaker identifier",
            Rule::NonMonotoneUtteranceTimes => "non-monotone utterance times",
            Rule::MissingFinalToken => "utterance lacks final token",
            Rule::FinalTokenNotLast => "token follows its utterance's final token",
            Rule::MultipleFinalTokens => "utterance has multiple final tokens",
            Rule::UtteranceSpeakerConflict => "utterance id reused by a different speaker",
        };
        f.write_str(msg)
    }
}

/// Non-empty set of violations, for `Result`-shaped APIs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid transcript ({} violations):", self.0.len())?;
        for v in self.0.iter().take(3) {
            write!(f, " [{v}]")?;
        }
        if self.0.len() > 3 {
            write!(f, " …")?;
        }
        Ok(())
    }
}

impl core::error::Error for Violations {}

/// Subword expansion failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconError {
    MissingWord { word: String },
    EmptyExpansion { word: String },
}

impl fmt::Display for LexiconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexiconError::MissingWord { word } => write!(f, "word {word:?} not in lexicon"),
            LexiconError::EmptyExpansion { word } => {
                write!(f, "lexicon maps {word:?} to an empty subword list")
            }
        }
    }
}

impl core::error::Error for LexiconError {}
