//! CTM ingestion: whitespace-separated alignment records into annotated
//! transcripts.
//!
//! Record grammar, one per line:
//!
//! ```text
//! channel_or_speaker file_id start_sec dur_sec word [confidence]
//! ```
//!
//! Lines beginning with `;;` are comments. A token's emission time is
//! `round((start + dur) * 1000)` milliseconds. By default each distinct
//! `file_id` becomes one transcript and utterance boundaries are inferred
//! per speaker from inter-word silence: a gap strictly greater than
//! `gap_ms` (default 500) starts a new utterance. With
//! `utterances_from_file_id`, the whole input is one transcript and
//! `file_id` is taken as the explicit utterance id.

use std::collections::BTreeMap;

use thiserror::Error;

use tsot_core::tokens::is_reserved_token;
use tsot_core::transcript::{AnnotatedTranscript, TimedToken};

pub const DEFAULT_GAP_MS: u64 = 500;

#[derive(Debug, Clone)]
pub struct CtmOptions {
    /// Inter-word silence (ms) that starts a new utterance, exclusive.
    pub gap_ms: u64,
    /// Channel label -> speaker name. Labels absent from the map are used
    /// verbatim as speaker names.
    pub channel_map: BTreeMap<String, String>,
    /// Treat `file_id` as an explicit utterance id and emit one transcript
    /// with the given sample id.
    pub utterances_from_file_id: Option<String>,
}

impl Default for CtmOptions {
    fn default() -> Self {
        CtmOptions {
            gap_ms: DEFAULT_GAP_MS,
            channel_map: BTreeMap::new(),
            utterances_from_file_id: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CtmError {
    #[error("line {line}: expected 5 fields (channel file start dur word), got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: bad {field} value {value:?}")]
    BadNumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: word {word:?} collides with a reserved channel-token form")]
    ReservedWord { line: usize, word: String },
    #[error("line {line}: utterance id {utt:?} already used by speaker {speaker:?}")]
    UtteranceSpeakerConflict {
        line: usize,
        utt: String,
        speaker: String,
    },
}

struct Record {
    line: usize,
    speaker: String,
    file_id: String,
    start_ms: u64,
    end_ms: u64,
    word: String,
}

/// Parses a CTM stream into transcripts, one per `file_id` in order of
/// first appearance (or a single transcript in explicit-utterance mode).
pub fn parse_ctm(text: &str, opts: &CtmOptions) -> Result<Vec<AnnotatedTranscript>, CtmError> {
    let mut records: Vec<Record> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 5 || fields.len() > 6 {
            return Err(CtmError::FieldCount {
                line,
                got: fields.len(),
            });
        }
        let start_sec = parse_seconds(fields[2], "start_sec", line)?;
        let dur_sec = parse_seconds(fields[3], "dur_sec", line)?;
        let word = fields[4];
        if is_reserved_token(word) {
            return Err(CtmError::ReservedWord {
                line,
                word: word.to_string(),
            });
        }
        let speaker = opts
            .channel_map
            .get(fields[0])
            .cloned()
            .unwrap_or_else(|| fields[0].to_string());
        records.push(Record {
            line,
            speaker,
            file_id: fields[1].to_string(),
            start_ms: (start_sec * 1000.0).round() as u64,
            end_ms: ((start_sec + dur_sec) * 1000.0).round() as u64,
            word: word.to_string(),
        });
    }

    match &opts.utterances_from_file_id {
        Some(sample_id) => Ok(vec![explicit_utterances(records, sample_id)?]),
        None => Ok(gap_segmented(records, opts.gap_ms)),
    }
}

fn parse_seconds(value: &str, field: &'static str, line: usize) -> Result<f64, CtmError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(CtmError::BadNumber {
            line,
            field,
            value: value.to_string(),
        }),
    }
}

fn gap_segmented(records: Vec<Record>, gap_ms: u64) -> Vec<AnnotatedTranscript> {
    // Group by file, then by speaker in first-appearance order.
    let mut file_order: Vec<String> = Vec::new();
    let mut by_file: BTreeMap<String, Vec<Record>> = BTreeMap::new();
    for record in records {
        if !by_file.contains_key(&record.file_id) {
            file_order.push(record.file_id.clone());
        }
        by_file.entry(record.file_id.clone()).or_default().push(record);
    }

    file_order
        .into_iter()
        .map(|file_id| {
            let mut records = by_file.remove(&file_id).unwrap();
            let mut speaker_order: Vec<String> = Vec::new();
            for r in &records {
                if !speaker_order.contains(&r.speaker) {
                    speaker_order.push(r.speaker.clone());
                }
            }
            records.sort_by_key(|r| r.start_ms);

            let mut tokens: Vec<TimedToken> = Vec::new();
            for speaker in &speaker_order {
                let mut utterance_no = 0usize;
                let mut prev_end: Option<u64> = None;
                let words: Vec<&Record> =
                    records.iter().filter(|r| &r.speaker == speaker).collect();
                for (k, record) in words.iter().enumerate() {
                    let new_utterance = match prev_end {
                        None => true,
                        Some(end) => record.start_ms.saturating_sub(end) > gap_ms,
                    };
                    if new_utterance {
                        if let Some(last) = tokens
                            .iter_mut()
                            .rev()
                            .find(|t| &t.speaker == speaker)
                        {
                            last.utterance_final = true;
                        }
                        utterance_no += 1;
                    }
                    tokens.push(TimedToken {
                        text: record.word.clone(),
                        emission_ms: record.end_ms,
                        speaker: speaker.clone(),
                        utterance_id: format!("{speaker}-u{utterance_no}"),
                        utterance_final: k == words.len() - 1,
                    });
                    prev_end = Some(record.end_ms);
                }
            }
            // Serialization re-sorts by emission time; keep tokens in a
            // stable emission order here too so the JSONL reads naturally.
            tokens.sort_by_key(|t| t.emission_ms);
            AnnotatedTranscript::new(file_id, tokens)
        })
        .collect()
}

fn explicit_utterances(
    records: Vec<Record>,
    sample_id: &str,
) -> Result<AnnotatedTranscript, CtmError> {
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for record in &records {
        match owner.get(&record.file_id) {
            None => {
                owner.insert(record.file_id.clone(), record.speaker.clone());
            }
            Some(speaker) if speaker != &record.speaker => {
                return Err(CtmError::UtteranceSpeakerConflict {
                    line: record.line,
                    utt: record.file_id.clone(),
                    speaker: speaker.clone(),
                });
            }
            Some(_) => {}
        }
    }

    let mut utt_order: Vec<String> = Vec::new();
    for record in &records {
        if !utt_order.contains(&record.file_id) {
            utt_order.push(record.file_id.clone());
        }
    }
    let mut tokens: Vec<TimedToken> = Vec::new();
    for utt in &utt_order {
        let mut words: Vec<&Record> = records.iter().filter(|r| &r.file_id == utt).collect();
        words.sort_by_key(|r| r.start_ms);
        let last = words.len() - 1;
        for (k, record) in words.iter().enumerate() {
            tokens.push(TimedToken {
                text: record.word.clone(),
                emission_ms: record.end_ms,
                speaker: record.speaker.clone(),
                utterance_id: utt.clone(),
                utterance_final: k == last,
            });
        }
    }
    tokens.sort_by_key(|t| t.emission_ms);
    Ok(AnnotatedTranscript::new(sample_id, tokens))
}
