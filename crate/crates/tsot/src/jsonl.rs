//! JSONL record schemas and conversions to and from core types.
//!
//! Field names and order are part of the contract:
//!
//! * transcript: `{"sample_id", "tokens": [{"token", "time_ms", "speaker",
//!   "utt", "final"}, ...]}`
//! * serialized stream: `{"sample_id", "mode", "max_channels",
//!   "tokens": [str, ...]}` with channel tokens rendered as `<cc>` /
//!   `<ccN>`
//! * channels: `{"sample_id", "channels": [[str, ...], ...]}`
//! * mixture sample: `{"sample_id", "transcript", "references",
//!   "provenance"}`

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use tsot_core::mixture::{MixtureSample, Provenance, SourceUtterance, SpeedRatio};
use tsot_core::serializer::SerializedTranscript;
use tsot_core::tokens::{Mode, SerialToken};
use tsot_core::transcript::{AnnotatedTranscript, TimedToken};
use tsot_core::ChannelStreams;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: unknown mode {mode:?} (expected \"toggle\" or \"explicit\")")]
    UnknownMode { line: usize, mode: String },
    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TokenRecord {
    pub token: String,
    pub time_ms: u64,
    pub speaker: String,
    pub utt: String,
    #[serde(rename = "final")]
    pub is_final: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub sample_id: String,
    pub tokens: Vec<TokenRecord>,
}

impl From<&AnnotatedTranscript> for TranscriptRecord {
    fn from(t: &AnnotatedTranscript) -> Self {
        TranscriptRecord {
            sample_id: t.sample_id.clone(),
            tokens: t
                .tokens
                .iter()
                .map(|tok| TokenRecord {
                    token: tok.text.clone(),
                    time_ms: tok.emission_ms,
                    speaker: tok.speaker.clone(),
                    utt: tok.utterance_id.clone(),
                    is_final: tok.utterance_final,
                })
                .collect(),
        }
    }
}

impl From<TranscriptRecord> for AnnotatedTranscript {
    fn from(r: TranscriptRecord) -> Self {
        AnnotatedTranscript {
            sample_id: r.sample_id,
            tokens: r
                .tokens
                .into_iter()
                .map(|tok| TimedToken {
                    text: tok.token,
                    emission_ms: tok.time_ms,
                    speaker: tok.speaker,
                    utterance_id: tok.utt,
                    utterance_final: tok.is_final,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SerializedRecord {
    pub sample_id: String,
    pub mode: String,
    pub max_channels: u32,
    pub tokens: Vec<String>,
}

impl From<&SerializedTranscript> for SerializedRecord {
    fn from(s: &SerializedTranscript) -> Self {
        SerializedRecord {
            sample_id: s.sample_id.clone(),
            mode: s.mode.as_str().to_string(),
            max_channels: s.max_channels,
            tokens: s.rendered(),
        }
    }
}

impl SerializedRecord {
    pub fn into_core(self, line: usize) -> Result<SerializedTranscript, JsonlError> {
        let mode = parse_mode(&self.mode, line)?;
        let tokens = self
            .tokens
            .iter()
            .map(|t| {
                SerialToken::parse(t).map_err(|e| JsonlError::BadRecord {
                    line,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SerializedTranscript {
            sample_id: self.sample_id,
            max_channels: self.max_channels,
            mode,
            tokens,
        })
    }
}

pub fn parse_mode(mode: &str, line: usize) -> Result<Mode, JsonlError> {
    match mode {
        "toggle" => Ok(Mode::Toggle),
        "explicit" => Ok(Mode::Explicit),
        other => Err(JsonlError::UnknownMode {
            line,
            mode: other.to_string(),
        }),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChannelsRecord {
    pub sample_id: String,
    pub channels: Vec<Vec<String>>,
}

impl ChannelsRecord {
    pub fn new(sample_id: impl Into<String>, streams: &ChannelStreams) -> Self {
        ChannelsRecord {
            sample_id: sample_id.into(),
            channels: streams.channels.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MixtureRecord {
    pub sample_id: String,
    pub transcript: TranscriptRecord,
    pub references: BTreeMap<String, Vec<String>>,
    pub provenance: ProvenanceRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ProvenanceRecord {
    pub sample_seed: u64,
    pub sources: Vec<SourceRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SourceRecord {
    pub sample_id: String,
    pub speaker: String,
    pub delay_ms: u64,
    /// `[numerator, denominator]` of the applied speed factor.
    pub speed: [u64; 2],
}

impl From<&MixtureSample> for MixtureRecord {
    fn from(s: &MixtureSample) -> Self {
        MixtureRecord {
            sample_id: s.transcript.sample_id.clone(),
            transcript: TranscriptRecord::from(&s.transcript),
            references: s.references.clone(),
            provenance: ProvenanceRecord {
                sample_seed: s.provenance.sample_seed,
                sources: s
                    .provenance
                    .sources
                    .iter()
                    .map(|src| SourceRecord {
                        sample_id: src.source_sample_id.clone(),
                        speaker: src.speaker.clone(),
                        delay_ms: src.delay_ms,
                        speed: [src.speed.num(), src.speed.den()],
                    })
                    .collect(),
            },
        }
    }
}

impl MixtureRecord {
    pub fn into_core(self, line: usize) -> Result<MixtureSample, JsonlError> {
        let sources = self
            .provenance
            .sources
            .into_iter()
            .map(|src| {
                let speed =
                    SpeedRatio::new(src.speed[0], src.speed[1]).ok_or(JsonlError::BadRecord {
                        line,
                        message: format!("bad speed ratio {:?}", src.speed),
                    })?;
                Ok(SourceUtterance {
                    source_sample_id: src.sample_id,
                    speaker: src.speaker,
                    delay_ms: src.delay_ms,
                    speed,
                })
            })
            .collect::<Result<Vec<_>, JsonlError>>()?;
        Ok(MixtureSample {
            transcript: self.transcript.into(),
            references: self.references,
            provenance: Provenance {
                sample_seed: self.provenance.sample_seed,
                sources,
            },
        })
    }
}

/// Reads `T` records from JSONL, skipping blank lines, reporting the
/// 1-based line number on parse failures.
pub fn read_records<T: serde::de::DeserializeOwned>(
    reader: impl BufRead,
) -> Result<Vec<(usize, T)>, JsonlError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&text).map_err(|source| JsonlError::Parse {
            line: line_no,
            source,
        })?;
        records.push((line_no, record));
    }
    Ok(records)
}

/// Writes one record per line.
pub fn write_record<T: Serialize>(writer: &mut impl Write, record: &T) -> Result<(), JsonlError> {
    serde_json::to_writer(&mut *writer, record).map_err(|source| JsonlError::Parse {
        line: 0,
        source,
    })?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// A transcript line in either plain or mixture-record shape. Lets the
/// serializer and round-trip commands consume simulator output directly.
pub fn transcript_from_value(
    value: serde_json::Value,
    line: usize,
) -> Result<AnnotatedTranscript, JsonlError> {
    let record: TranscriptRecord = if value.get("transcript").is_some() {
        serde_json::from_value(value.get("transcript").cloned().unwrap())
            .map_err(|source| JsonlError::Parse { line, source })?
    } else {
        serde_json::from_value(value).map_err(|source| JsonlError::Parse { line, source })?
    };
    Ok(record.into())
}

/// Named token streams extracted from a scoring input line. Accepts
/// `references`/`streams` maps (all kept, label-sorted) and `channels`
/// arrays (empty channels dropped, labels `ch1`..`chM`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamsRecord {
    pub sample_id: String,
    pub labels: Vec<String>,
    pub streams: Vec<Vec<String>>,
    pub value: serde_json::Value,
}

pub fn streams_from_value(
    value: serde_json::Value,
    line: usize,
) -> Result<StreamsRecord, JsonlError> {
    let sample_id = value
        .get("sample_id")
        .and_then(|v| v.as_str())
        .ok_or_else(|| JsonlError::BadRecord {
            line,
            message: "missing \"sample_id\"".to_string(),
        })?
        .to_string();

    let mut labels = Vec::new();
    let mut streams = Vec::new();
    if let Some(map) = value
        .get("references")
        .or_else(|| value.get("streams"))
        .and_then(|v| v.as_object())
    {
        let sorted: BTreeMap<&String, &serde_json::Value> = map.iter().collect();
        for (label, tokens) in sorted {
            labels.push(label.clone());
            streams.push(string_list(tokens, line)?);
        }
    } else if let Some(channels) = value.get("channels").and_then(|v| v.as_array()) {
        for (i, channel) in channels.iter().enumerate() {
            let tokens = string_list(channel, line)?;
            if !tokens.is_empty() {
                labels.push(format!("ch{}", i + 1));
                streams.push(tokens);
            }
        }
    } else {
        return Err(JsonlError::BadRecord {
            line,
            message: "expected \"references\", \"streams\", or \"channels\"".to_string(),
        });
    }
    Ok(StreamsRecord {
        sample_id,
        labels,
        streams,
        value,
    })
}

fn string_list(value: &serde_json::Value, line: usize) -> Result<Vec<String>, JsonlError> {
    value
        .as_array()
        .ok_or_else(|| JsonlError::BadRecord {
            line,
            message: "expected an array of tokens".to_string(),
        })?
        .iter()
        .map(|t| {
            t.as_str().map(String::from).ok_or_else(|| JsonlError::BadRecord {
                line,
                message: "expected string tokens".to_string(),
            })
        })
        .collect()
}
