//! Core algorithms for token-level serialized multi-talker transcripts.
//!
//! A multi-talker recording with time- and speaker-annotated tokens is
//! flattened into a single chronological token stream in which special
//! channel-change tokens mark hand-offs between "virtual" output channels.
//! This crate provides:
//!
//! * [`transcript`] — annotated transcript types, validation, and
//!   concurrency analysis;
//! * [`serializer`] — transcript → serialized token stream, for the
//!   two-channel toggle scheme and the general M-channel scheme;
//! * [`deserializer`] — streaming state machine turning a serialized
//!   stream back into per-channel token lists;
//! * [`scorer`] — token edit distance and permutation-minimizing
//!   multi-stream word error rate;
//! * [`mixture`] — seeded, reproducible overlap-mixture simulation at
//!   the transcript level (no audio).
//!
//! The crate is `no_std` + `alloc`; everything is a pure function over
//! immutable values (the decoder mutates only under exclusive access).

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod deserializer;
pub mod mixture;
pub mod rng;
pub mod scorer;
pub mod serializer;
pub mod tokens;
pub mod transcript;

pub use deserializer::{ChannelStreams, DecodeError, Decoder};
pub use mixture::{MixtureConfig, MixtureError, MixtureSample, SpeakerCountLaw, SpeedRatio};
pub use scorer::{EditCounts, ScoreError, WerReport};
pub use serializer::{
    RoundTripDivergence, RoundTripReport, SerializeError, SerializedTranscript, SerializerStyle,
};
pub use tokens::{Mode, SerialToken};
pub use transcript::{AnnotatedTranscript, ConcurrencyProfile, TimedToken, Violation};
