//! Streaming deserialization of a serial token stream into M virtual
//! output channels.
//!
//! The decoder is a token-at-a-time state machine. Every lexical token is
//! appended to the current channel and emitted immediately; channel tokens
//! move the cursor and emit nothing. The first recognized token always
//! lands on channel 1. Channels are anonymous: they are not speaker
//! identities.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::fmt;

use crate::serializer::SerializedTranscript;
use crate::tokens::{Mode, SerialToken};

/// M ordered lexical-token lists, the deserialized virtual channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelStreams {
    pub channels: Vec<Vec<String>>,
}

impl ChannelStreams {
    pub fn total_tokens(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }

    /// Channels that carry at least one token, in channel order.
    pub fn non_empty(&self) -> Vec<&Vec<String>> {
        self.channels.iter().filter(|c| !c.is_empty()).collect()
    }
}

/// Token-at-a-time decoding state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoder {
    mode: Mode,
    max_channels: u32,
    current_channel: u32,
    channels: Vec<Vec<String>>,
    tokens_consumed: usize,
    lexical_seen: bool,
    leading_channel_token: bool,
}

impl Decoder {
    /// A fresh decoder: M empty channels, cursor on channel 1.
    /// Toggle mode requires exactly two channels.
    pub fn new(max_channels: u32, mode: Mode) -> Result<Decoder, DecodeError> {
        if max_channels < 2 || (mode == Mode::Toggle && max_channels != 2) {
            return Err(DecodeError::BadConfig { max_channels, mode });
        }
        Ok(Decoder {
            mode,
            max_channels,
            current_channel: 1,
            channels: vec![Vec::new(); max_channels as usize],
            tokens_consumed: 0,
            lexical_seen: false,
            leading_channel_token: false,
        })
    }

    /// Consumes one token. Lexical tokens are appended to the current
    /// channel and returned as `(channel, text)` immediately — exactly one
    /// emission per lexical token, none per channel token.
    pub fn step(&mut self, token: &SerialToken) -> Result<Option<(u32, String)>, DecodeError> {
        let emission = match (token, self.mode) {
            (SerialToken::Lexical(text), _) => {
                self.lexical_seen = true;
                self.channels[(self.current_channel - 1) as usize].push(text.clone());
                Some((self.current_channel, text.clone()))
            }
            (SerialToken::ChannelToggle, Mode::Toggle) => {
                if !self.lexical_seen {
                    // A stream normally starts with a lexical token; a live
                    // recognizer could still emit a leading switch, which we
                    // honor and flag.
                    self.leading_channel_token = true;
                }
                self.current_channel = 3 - self.current_channel;
                None
            }
            (SerialToken::ChannelSelect(m), Mode::Explicit) => {
                if *m < 1 || *m > self.max_channels {
                    return Err(DecodeError::ChannelOutOfRange {
                        channel: *m,
                        max_channels: self.max_channels,
                    });
                }
                if !self.lexical_seen {
                    self.leading_channel_token = true;
                }
                self.current_channel = *m;
                None
            }
            (token, mode) => {
                return Err(DecodeError::ModeMismatch {
                    mode,
                    token: token.render(),
                })
            }
        };
        self.tokens_consumed += 1;
        Ok(emission)
    }

    pub fn current_channel(&self) -> u32 {
        self.current_channel
    }

    pub fn tokens_consumed(&self) -> usize {
        self.tokens_consumed
    }

    /// True when a channel token arrived before any lexical token.
    pub fn saw_leading_channel_token(&self) -> bool {
        self.leading_channel_token
    }

    pub fn channels(&self) -> &[Vec<String>] {
        &self.channels
    }

    pub fn into_channels(self) -> ChannelStreams {
        ChannelStreams {
            channels: self.channels,
        }
    }
}

/// Folds [`Decoder::step`] over the whole stream.
pub fn deserialize(serialized: &SerializedTranscript) -> Result<ChannelStreams, DecodeError> {
    let mut decoder = Decoder::new(serialized.max_channels, serialized.mode)?;
    for token in &serialized.tokens {
        decoder.step(token)?;
    }
    Ok(decoder.into_channels())
}

/// Lexical tokens in stream order with every channel token removed: the
/// single-channel reading of the stream.
pub fn strip_cc(serialized: &SerializedTranscript) -> Vec<String> {
    serialized
        .tokens
        .iter()
        .filter_map(|t| t.lexical().map(String::from))
        .collect()
}

/// Decoding failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    /// Channel capacity/mode combination unsupported.
    BadConfig { max_channels: u32, mode: Mode },
    /// `<cc_m>` with `m` outside `1..=M`.
    ChannelOutOfRange { channel: u32, max_channels: u32 },
    /// Toggle token in explicit mode, or select token in toggle mode.
    ModeMismatch { mode: Mode, token: String },
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::BadConfig { max_channels, mode } => write!(
                f,
                "unsupported decoder config: {max_channels} channels in {mode} mode"
            ),
            DecodeError::ChannelOutOfRange {
                channel,
                max_channels,
            } => write!(
                f,
                "channel {channel} out of range (stream has {max_channels} channels)"
            ),
            DecodeError::ModeMismatch { mode, token } => {
                write!(f, "token {token:?} not valid in {mode} mode")
            }
        }
    }
}

impl core::error::Error for DecodeError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(s: &str) -> SerialToken {
        SerialToken::Lexical(s.into())
    }

    fn toggle_stream(tokens: Vec<SerialToken>) -> SerializedTranscript {
        SerializedTranscript {
            sample_id: String::from("s"),
            max_channels: 2,
            mode: Mode::Toggle,
            tokens,
        }
    }

    fn explicit_stream(m: u32, tokens: Vec<SerialToken>) -> SerializedTranscript {
        SerializedTranscript {
            sample_id: String::from("s"),
            max_channels: m,
            mode: Mode::Explicit,
            tokens,
        }
    }

    #[test]
    fn new_decoder_starts_on_channel_one() {
        let d = Decoder::new(2, Mode::Toggle).unwrap();
        assert_eq!(d.current_channel(), 1);
        assert_eq!(d.channels().len(), 2);
        let d = Decoder::new(4, Mode::Explicit).unwrap();
        assert_eq!(d.channels().len(), 4);
    }

    #[test]
    fn toggle_decoder_requires_two_channels() {
        assert!(Decoder::new(1, Mode::Toggle).is_err());
        assert!(Decoder::new(3, Mode::Toggle).is_err());
        assert!(Decoder::new(1, Mode::Explicit).is_err());
    }

    #[test]
    fn toggle_stream_splits_alternating_speakers() {
        let s = toggle_stream(vec![
            lex("hello"),
            SerialToken::ChannelToggle,
            lex("how"),
            SerialToken::ChannelToggle,
            lex("world"),
            SerialToken::ChannelToggle,
            lex("are"),
        ]);
        let out = deserialize(&s).unwrap();
        assert_eq!(out.channels[0], vec!["hello", "world"]);
        assert_eq!(out.channels[1], vec!["how", "are"]);
    }

    #[test]
    fn stream_without_channel_tokens_stays_on_channel_one() {
        let s = toggle_stream(vec![lex("a"), lex("b"), lex("c")]);
        let out = deserialize(&s).unwrap();
        assert_eq!(out.channels[0], vec!["a", "b", "c"]);
        assert!(out.channels[1].is_empty());
    }

    #[test]
    fn select_tokens_move_the_cursor() {
        let s = explicit_stream(
            2,
            vec![
                lex("a"),
                SerialToken::ChannelSelect(2),
                lex("b"),
                SerialToken::ChannelSelect(1),
                lex("c"),
            ],
        );
        let out = deserialize(&s).unwrap();
        assert_eq!(out.channels[0], vec!["a", "c"]);
        assert_eq!(out.channels[1], vec!["b"]);
    }

    #[test]
    fn empty_stream_gives_empty_channels() {
        let out = deserialize(&explicit_stream(3, Vec::new())).unwrap();
        assert_eq!(out.channels.len(), 3);
        assert_eq!(out.total_tokens(), 0);
    }

    #[test]
    fn select_out_of_range_is_an_error() {
        let s = explicit_stream(2, vec![lex("a"), SerialToken::ChannelSelect(3)]);
        assert_eq!(
            deserialize(&s),
            Err(DecodeError::ChannelOutOfRange {
                channel: 3,
                max_channels: 2
            })
        );
    }

    #[test]
    fn mode_mismatch_is_an_error() {
        let s = explicit_stream(2, vec![lex("a"), SerialToken::ChannelToggle]);
        assert!(matches!(
            deserialize(&s),
            Err(DecodeError::ModeMismatch { .. })
        ));
        let s = toggle_stream(vec![SerialToken::ChannelSelect(1)]);
        assert!(matches!(
            deserialize(&s),
            Err(DecodeError::ModeMismatch { .. })
        ));
    }

    #[test]
    fn leading_channel_token_is_accepted_and_flagged() {
        let mut d = Decoder::new(2, Mode::Toggle).unwrap();
        assert_eq!(d.step(&SerialToken::ChannelToggle).unwrap(), None);
        assert!(d.saw_leading_channel_token());
        assert_eq!(
            d.step(&lex("x")).unwrap(),
            Some((2, String::from("x")))
        );
        // A normal stream never sets the flag.
        let mut d = Decoder::new(2, Mode::Toggle).unwrap();
        d.step(&lex("x")).unwrap();
        d.step(&SerialToken::ChannelToggle).unwrap();
        assert!(!d.saw_leading_channel_token());
    }

    #[test]
    fn each_lexical_token_emits_exactly_once() {
        let s = toggle_stream(vec![
            lex("a"),
            SerialToken::ChannelToggle,
            lex("b"),
            SerialToken::ChannelToggle,
            lex("c"),
        ]);
        let mut d = Decoder::new(2, Mode::Toggle).unwrap();
        let mut emissions = Vec::new();
        for t in &s.tokens {
            if let Some(e) = d.step(t).unwrap() {
                emissions.push(e);
            }
        }
        assert_eq!(
            emissions,
            vec![
                (1, String::from("a")),
                (2, String::from("b")),
                (1, String::from("c")),
            ]
        );
        assert_eq!(d.tokens_consumed(), 5);
    }

    #[test]
    fn strip_cc_removes_channel_tokens_only() {
        let s = toggle_stream(vec![lex("hello"), SerialToken::ChannelToggle, lex("how")]);
        assert_eq!(strip_cc(&s), vec!["hello", "how"]);
        let s = toggle_stream(vec![lex("a"), lex("b")]);
        assert_eq!(strip_cc(&s), vec!["a", "b"]);
    }
}
