//! Transcript serialization into a single chronological token stream.
//!
//! Two schemes:
//!
//! * **Toggle** ([`serialize_two`]): tokens are emitted in stable
//!   emission-time order and a single `<cc>` token is inserted wherever two
//!   consecutive tokens belong to different speakers. Works for up to two
//!   concurrent utterances.
//! * **Explicit** ([`serialize_m`]): a speaker-to-channel registry plus a
//!   pool of unused channels assigns each speaker a virtual channel for the
//!   lifetime of their utterance; `<cc_m>` tokens switch the decoder to the
//!   right channel. A speaker's channel is returned to the pool when their
//!   utterance-final token is appended. More than `m` simultaneously open
//!   utterances is an error.
//!
//! [`round_trip_check`] serializes, deserializes, and verifies that every
//! utterance lands on exactly one channel, contiguously and in order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;

use crate::deserializer::Decoder;
use crate::tokens::{Mode, SerialToken};
use crate::transcript::{AnnotatedTranscript, Violations};

/// A serialized token stream plus its channel capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializedTranscript {
    pub sample_id: String,
    /// Channel capacity M (>= 2).
    pub max_channels: u32,
    pub mode: Mode,
    pub tokens: Vec<SerialToken>,
}

impl SerializedTranscript {
    /// Stream entries in their string forms.
    pub fn rendered(&self) -> Vec<String> {
        self.tokens.iter().map(SerialToken::render).collect()
    }

    pub fn lexical_count(&self) -> usize {
        self.tokens.iter().filter(|t| !t.is_channel()).count()
    }

    pub fn channel_token_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_channel()).count()
    }
}

/// Variant of the M-channel algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SerializerStyle {
    /// When a speaker continues straight from their own just-finished
    /// utterance, re-register them on the channel that was just released.
    /// The decoder's current channel is unchanged, so no channel token is
    /// emitted, and the channel cannot be handed to another speaker while
    /// the new utterance is still open.
    #[default]
    Patched,
    /// Literal registry behavior: the speaker stays unregistered while
    /// their tokens continue on the old output channel, and releasing an
    /// unregistered speaker is a no-op. A later allocation can hand that
    /// channel to another speaker, corrupting the round trip; kept for
    /// byte-level comparison.
    Literal,
}

/// Converts a transcript into a toggle-mode stream (M = 2).
///
/// Tokens appear in stable emission-time order (ties keep input order, so
/// subwords sharing one emission time stay in sequence). A `<cc>` token is
/// inserted exactly between consecutive tokens with differing speakers.
pub fn serialize_two(transcript: &AnnotatedTranscript) -> Result<SerializedTranscript, SerializeError> {
    transcript.check_valid()?;
    let order = transcript.sorted_indices();
    let mut tokens = Vec::with_capacity(order.len());
    let mut prev_speaker: Option<&str> = None;
    for &i in &order {
        let t = &transcript.tokens[i];
        if let Some(prev) = prev_speaker {
            if prev != t.speaker {
                tokens.push(SerialToken::ChannelToggle);
            }
        }
        tokens.push(SerialToken::Lexical(t.text.clone()));
        prev_speaker = Some(&t.speaker);
    }
    Ok(SerializedTranscript {
        sample_id: transcript.sample_id.clone(),
        max_channels: 2,
        mode: Mode::Toggle,
        tokens,
    })
}

/// Converts a transcript into an explicit-mode stream with `m` channels.
pub fn serialize_m(
    transcript: &AnnotatedTranscript,
    m: u32,
) -> Result<SerializedTranscript, SerializeError> {
    serialize_m_with(transcript, m, SerializerStyle::Patched)
}

/// [`serialize_m`] with an explicit algorithm style.
pub fn serialize_m_with(
    transcript: &AnnotatedTranscript,
    m: u32,
    style: SerializerStyle,
) -> Result<SerializedTranscript, SerializeError> {
    if m < 2 {
        return Err(SerializeError::BadChannelCount { m });
    }
    transcript.check_valid()?;
    let order = transcript.sorted_indices();

    let mut tokens: Vec<SerialToken> = Vec::with_capacity(order.len());
    // Speaker -> channel registry and the pool of unused channels.
    // Allocation always pops the lowest-numbered available channel.
    let mut registry: BTreeMap<&str, u32> = BTreeMap::new();
    let mut pool: BTreeSet<u32> = (2..=m).collect();
    // The channel the decoder would be on, for the patched re-registration.
    let mut current_channel = 1u32;

    let mut prev_speaker: Option<&str> = None;
    for (pos, &i) in order.iter().enumerate() {
        let t = &transcript.tokens[i];
        let speaker = t.speaker.as_str();

        if pos == 0 {
            registry.insert(speaker, 1);
        } else if prev_speaker != Some(speaker) {
            let channel = match registry.get(speaker) {
                Some(&ch) => ch,
                None => {
                    let ch = pop_lowest(&mut pool).ok_or_else(|| {
                        let mut speakers: Vec<String> =
                            registry.keys().map(|&s| String::from(s)).collect();
                        speakers.push(String::from(speaker));
                        SerializeError::ConcurrencyExceeded {
                            m,
                            token_index: pos,
                            speakers,
                        }
                    })?;
                    registry.insert(speaker, ch);
                    ch
                }
            };
            tokens.push(SerialToken::ChannelSelect(channel));
            current_channel = channel;
        } else if style == SerializerStyle::Patched && !registry.contains_key(speaker) {
            // Same speaker continuing right after their own utterance-final
            // token: take the just-released channel back. The decoder is
            // still on it, so no channel token is needed.
            pool.remove(&current_channel);
            registry.insert(speaker, current_channel);
        }

        tokens.push(SerialToken::Lexical(t.text.clone()));

        if t.utterance_final {
            if let Some(channel) = registry.remove(speaker) {
                pool.insert(channel);
            }
        }
        prev_speaker = Some(speaker);
    }

    Ok(SerializedTranscript {
        sample_id: transcript.sample_id.clone(),
        max_channels: m,
        mode: Mode::Explicit,
        tokens,
    })
}

fn pop_lowest(pool: &mut BTreeSet<u32>) -> Option<u32> {
    let lowest = *pool.iter().next()?;
    pool.remove(&lowest);
    Some(lowest)
}

/// Serializes with the scheme picked by `mode`, deserializes, and verifies
/// per-utterance channel consistency: every utterance's tokens on exactly
/// one channel, contiguous there, in order. Reports the first divergence.
pub fn round_trip_check(
    transcript: &AnnotatedTranscript,
    mode: Mode,
    m: u32,
) -> Result<RoundTripReport, SerializeError> {
    round_trip_check_with(transcript, mode, m, SerializerStyle::Patched)
}

/// [`round_trip_check`] with an explicit algorithm style.
pub fn round_trip_check_with(
    transcript: &AnnotatedTranscript,
    mode: Mode,
    m: u32,
    style: SerializerStyle,
) -> Result<RoundTripReport, SerializeError> {
    let serialized = match mode {
        Mode::Toggle => {
            if m != 2 {
                return Err(SerializeError::BadChannelCount { m });
            }
            serialize_two(transcript)?
        }
        Mode::Explicit => serialize_m_with(transcript, m, style)?,
    };

    // Channel of each lexical token, in stream order (= sorted order).
    let mut decoder = Decoder::new(m, mode).map_err(|_| SerializeError::BadChannelCount { m })?;
    let mut lexical_channels = Vec::with_capacity(serialized.lexical_count());
    for token in &serialized.tokens {
        if let Some((channel, _)) = decoder
            .step(token)
            .expect("serializer output is well-formed")
        {
            lexical_channels.push(channel);
        }
    }

    let order = transcript.sorted_indices();
    debug_assert_eq!(order.len(), lexical_channels.len());

    // Per-utterance channel consistency.
    let mut assigned: BTreeMap<&str, u32> = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        let t = &transcript.tokens[i];
        let channel = lexical_channels[pos];
        match assigned.get(t.utterance_id.as_str()) {
            None => {
                assigned.insert(&t.utterance_id, channel);
            }
            Some(&expected) if expected != channel => {
                return Ok(RoundTripReport {
                    lexical_tokens: order.len(),
                    channel_tokens: serialized.channel_token_count(),
                    divergence: Some(RoundTripDivergence::SplitChannels {
                        speaker: t.speaker.clone(),
                        utterance_id: t.utterance_id.clone(),
                        first_channel: expected,
                        other_channel: channel,
                        stream_position: pos,
                    }),
                });
            }
            Some(_) => {}
        }
    }

    // Per-channel contiguity: a channel must read as whole utterances one
    // after another, never two interleaved.
    let mut remaining: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in &order {
        *remaining
            .entry(transcript.tokens[i].utterance_id.as_str())
            .or_insert(0) += 1;
    }
    let mut open: BTreeMap<u32, &str> = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        let t = &transcript.tokens[i];
        let channel = lexical_channels[pos];
        let id = t.utterance_id.as_str();
        if let Some(&occupant) = open.get(&channel) {
            if occupant != id && remaining[occupant] > 0 {
                return Ok(RoundTripReport {
                    lexical_tokens: order.len(),
                    channel_tokens: serialized.channel_token_count(),
                    divergence: Some(RoundTripDivergence::Interleaved {
                        speaker: t.speaker.clone(),
                        utterance_id: String::from(occupant),
                        intruder_utterance: t.utterance_id.clone(),
                        channel,
                        stream_position: pos,
                    }),
                });
            }
        }
        open.insert(channel, id);
        *remaining.get_mut(id).unwrap() -= 1;
    }

    Ok(RoundTripReport {
        lexical_tokens: order.len(),
        channel_tokens: serialized.channel_token_count(),
        divergence: None,
    })
}

/// Outcome of a serialize → deserialize → verify pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTripReport {
    pub lexical_tokens: usize,
    pub channel_tokens: usize,
    pub divergence: Option<RoundTripDivergence>,
}

impl RoundTripReport {
    pub fn is_ok(&self) -> bool {
        self.divergence.is_none()
    }
}

/// First point where the deserialized channels stop matching the source
/// transcript's utterance structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundTripDivergence {
    /// An utterance's tokens landed on more than one channel.
    SplitChannels {
        speaker: String,
        utterance_id: String,
        first_channel: u32,
        other_channel: u32,
        stream_position: usize,
    },
    /// Another utterance's tokens intruded before this one finished.
    Interleaved {
        speaker: String,
        utterance_id: String,
        intruder_utterance: String,
        channel: u32,
        stream_position: usize,
    },
}

impl fmt::Display for RoundTripDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundTripDivergence::SplitChannels {
                speaker,
                utterance_id,
                first_channel,
                other_channel,
                stream_position,
            } => write!(
                f,
                "utterance {utterance_id:?} (speaker {speaker:?}) split across channels \
                 {first_channel} and {other_channel} at stream position {stream_position}"
            ),
            RoundTripDivergence::Interleaved {
                speaker,
                utterance_id,
                intruder_utterance,
                channel,
                stream_position,
            } => write!(
                f,
                "utterance {intruder_utterance:?} (speaker {speaker:?}) interleaved into open \
                 utterance {utterance_id:?} on channel {channel} at stream position {stream_position}"
            ),
        }
    }
}

/// Serialization failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SerializeError {
    /// The input transcript breaks an invariant.
    Invalid(Violations),
    /// Channel capacity must be at least 2 (and exactly 2 for toggle mode).
    BadChannelCount { m: u32 },
    /// More than `m` utterances open at once; allocation had no channel to
    /// hand out. `token_index` is the position in emission-sorted order;
    /// `speakers` are the m+1 speakers simultaneously requiring channels.
    ConcurrencyExceeded {
        m: u32,
        token_index: usize,
        speakers: Vec<String>,
    },
}

impl From<Violations> for SerializeError {
    fn from(v: Violations) -> Self {
        SerializeError::Invalid(v)
    }
}

impl fmt::Display for SerializeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SerializeError::Invalid(v) => write!(f, "{v}"),
            SerializeError::BadChannelCount { m } => {
                write!(f, "channel capacity {m} unsupported (need m >= 2)")
            }
            SerializeError::ConcurrencyExceeded {
                m,
                token_index,
                speakers,
            } => {
                write!(
                    f,
                    "concurrency exceeded at sorted token {token_index}: {} speakers open \
                     with {m} channels (",
                    speakers.len()
                )?;
                for (k, s) in speakers.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(s)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl core::error::Error for SerializeError {}
