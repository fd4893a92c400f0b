//! Multi-talker WER: token edit distance plus minimum-error assignment
//! over stream permutations.
//!
//! Hypothesis and reference stream lists are padded to equal length with
//! empty streams, every bijection between them is scored, and the one with
//! the fewest errors wins. A hypothesis matched to a padded reference
//! counts as pure insertions; a reference matched to a padded hypothesis
//! as pure deletions. The reference length never includes padding.
//!
//! Streams are compared by exact token equality. Apply any normalization
//! (e.g. lowercasing) before scoring.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::fmt;

use crate::deserializer::ChannelStreams;
use crate::tokens::is_reserved_token;

/// Streams per side above which exhaustive permutation search is refused.
pub const MAX_STREAMS: usize = 8;

/// Token-level alignment error counts against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub substitutions: u32,
    pub insertions: u32,
    pub deletions: u32,
    pub ref_len: u32,
}

impl EditCounts {
    pub fn errors(&self) -> u32 {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn add(&mut self, other: &EditCounts) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.ref_len += other.ref_len;
    }

    /// `(S+I+D)/ref_len`; NaN when the reference is empty.
    pub fn wer(&self) -> f64 {
        if self.ref_len == 0 {
            f64::NAN
        } else {
            f64::from(self.errors()) / f64::from(self.ref_len)
        }
    }
}

/// Minimal substitution/insertion/deletion alignment via dynamic
/// programming with unit costs. When totals tie, the backtrace prefers
/// substitution over insertion over deletion.
pub fn edit_distance<T: PartialEq>(ref_tokens: &[T], hyp_tokens: &[T]) -> EditCounts {
    let rows = ref_tokens.len() + 1;
    let cols = hyp_tokens.len() + 1;
    let mut table: Vec<Cell> = Vec::with_capacity(rows * cols);

    // Empty reference: everything in the hypothesis is an insertion.
    for j in 0..cols {
        table.push(Cell {
            substitutions: 0,
            insertions: j as u32,
            deletions: 0,
        });
    }
    for i in 1..rows {
        // Empty hypothesis: everything in the reference is a deletion.
        table.push(Cell {
            substitutions: 0,
            insertions: 0,
            deletions: i as u32,
        });
        for j in 1..cols {
            let hit = ref_tokens[i - 1] == hyp_tokens[j - 1];
            let mut diagonal = table[(i - 1) * cols + (j - 1)];
            if !hit {
                diagonal.substitutions += 1;
            }
            let mut insertion = table[i * cols + (j - 1)];
            insertion.insertions += 1;
            let mut deletion = table[(i - 1) * cols + j];
            deletion.deletions += 1;

            let mut best = diagonal;
            if insertion.total() < best.total() {
                best = insertion;
            }
            if deletion.total() < best.total() {
                best = deletion;
            }
            table.push(best);
        }
    }

    let cell = table[rows * cols - 1];
    EditCounts {
        substitutions: cell.substitutions,
        insertions: cell.insertions,
        deletions: cell.deletions,
        ref_len: ref_tokens.len() as u32,
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    substitutions: u32,
    insertions: u32,
    deletions: u32,
}

impl Cell {
    fn total(&self) -> u32 {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Multi-stream WER result.
#[derive(Debug, Clone, PartialEq)]
pub struct WerReport {
    pub counts: EditCounts,
    /// Per hypothesis stream: the reference stream it was matched to, or
    /// `None` when it was matched to padding (all insertions).
    pub assignment: Vec<Option<usize>>,
}

impl WerReport {
    pub fn wer(&self) -> f64 {
        self.counts.wer()
    }

    /// False when `ref_len` is zero and the ratio is meaningless.
    pub fn wer_defined(&self) -> bool {
        self.counts.ref_len > 0
    }
}

/// Scores hypothesis streams against reference streams, minimizing total
/// errors over every bijection. Sides are padded to equal length with
/// empty streams; unmatched hypotheses score as insertions, unmatched
/// references as deletions. At most [`MAX_STREAMS`] streams per side.
///
/// Ties between bijections resolve to the first in lexicographic order of
/// the (hypothesis → reference index) mapping.
pub fn permutation_wer<T: PartialEq>(
    refs: &[Vec<T>],
    hyps: &[Vec<T>],
) -> Result<WerReport, ScoreError> {
    if refs.len() > MAX_STREAMS || hyps.len() > MAX_STREAMS {
        return Err(ScoreError::TooManyStreams {
            refs: refs.len(),
            hyps: hyps.len(),
            limit: MAX_STREAMS,
        });
    }
    let size = refs.len().max(hyps.len());
    let empty: &[T] = &[];

    // Pairwise costs, padded side included.
    let mut costs = vec![vec![EditCounts::default(); size]; size];
    for (h, row) in costs.iter_mut().enumerate() {
        let hyp = hyps.get(h).map_or(empty, Vec::as_slice);
        for (r, cell) in row.iter_mut().enumerate() {
            let reference = refs.get(r).map_or(empty, Vec::as_slice);
            *cell = edit_distance(reference, hyp);
        }
    }

    let mut best_perm: Option<Vec<usize>> = None;
    let mut best_total = u32::MAX;
    let mut perm: Vec<usize> = Vec::with_capacity(size);
    let mut used = vec![false; size];
    search(&costs, size, &mut perm, &mut used, 0, &mut best_total, &mut best_perm);

    let chosen = best_perm.unwrap_or_default();
    let mut counts = EditCounts::default();
    for (h, &r) in chosen.iter().enumerate() {
        counts.add(&costs[h][r]);
    }
    let assignment = chosen
        .iter()
        .take(hyps.len())
        .map(|&r| if r < refs.len() { Some(r) } else { None })
        .collect();

    Ok(WerReport { counts, assignment })
}

/// Depth-first lexicographic enumeration of bijections, keeping the first
/// strict minimum. Partial totals prune branches already at/over the best.
fn search(
    costs: &[Vec<EditCounts>],
    size: usize,
    perm: &mut Vec<usize>,
    used: &mut [bool],
    partial: u32,
    best_total: &mut u32,
    best_perm: &mut Option<Vec<usize>>,
) {
    let h = perm.len();
    if h == size {
        if best_perm.is_none() || partial < *best_total {
            *best_total = partial;
            *best_perm = Some(perm.clone());
        }
        return;
    }
    for r in 0..size {
        if used[r] {
            continue;
        }
        let total = partial + costs[h][r].errors();
        if best_perm.is_some() && total >= *best_total {
            continue;
        }
        used[r] = true;
        perm.push(r);
        search(costs, size, perm, used, total, best_total, best_perm);
        perm.pop();
        used[r] = false;
    }
}

/// Scores deserialized channels against per-speaker references. Non-empty
/// channels become the hypothesis list (in channel order); references are
/// taken in speaker-name order. Channel-change tokens must never reach the
/// scorer; their presence on either side is an error.
pub fn score_deserialized(
    channels: &ChannelStreams,
    refs: &BTreeMap<String, Vec<String>>,
) -> Result<WerReport, ScoreError> {
    let hyps: Vec<Vec<String>> = channels
        .channels
        .iter()
        .filter(|c| !c.is_empty())
        .cloned()
        .collect();
    let ref_streams: Vec<Vec<String>> = refs.values().cloned().collect();
    score_streams(&ref_streams, &hyps)
}

/// [`permutation_wer`] plus the reserved-token guard, for string streams.
pub fn score_streams(
    refs: &[Vec<String>],
    hyps: &[Vec<String>],
) -> Result<WerReport, ScoreError> {
    for (side, streams) in [("reference", refs), ("hypothesis", hyps)] {
        for stream in streams {
            if let Some(token) = stream.iter().find(|t| is_reserved_token(t)) {
                return Err(ScoreError::ReservedToken {
                    side,
                    token: token.clone(),
                });
            }
        }
    }
    permutation_wer(refs, hyps)
}

/// Per-condition WERs plus their unweighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroAverage {
    pub rows: Vec<(String, f64)>,
    pub average: f64,
}

/// Unweighted mean of per-condition WER values. Every report must have a
/// non-empty reference.
pub fn macro_average(reports: &[(&str, &WerReport)]) -> Result<MacroAverage, ScoreError> {
    if reports.is_empty() {
        return Err(ScoreError::NoReports);
    }
    let mut rows = Vec::with_capacity(reports.len());
    let mut sum = 0.0f64;
    for (label, report) in reports {
        if !report.wer_defined() {
            return Err(ScoreError::UndefinedWer {
                label: String::from(*label),
            });
        }
        let wer = report.wer();
        rows.push((String::from(*label), wer));
        sum += wer;
    }
    let average = sum / rows.len() as f64;
    Ok(MacroAverage { rows, average })
}

/// Scoring failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreError {
    TooManyStreams {
        refs: usize,
        hyps: usize,
        limit: usize,
    },
    ReservedToken {
        side: &'static str,
        token: String,
    },
    NoReports,
    UndefinedWer {
        label: String,
    },
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::TooManyStreams { refs, hyps, limit } => write!(
                f,
                "too many streams for exhaustive assignment: {refs} refs, {hyps} hyps (limit {limit})"
            ),
            ScoreError::ReservedToken { side, token } => {
                write!(f, "channel token {token:?} in a {side} stream")
            }
            ScoreError::NoReports => f.write_str("no reports to average"),
            ScoreError::UndefinedWer { label } => {
                write!(f, "condition {label:?} has an empty reference; WER undefined")
            }
        }
    }
}

impl core::error::Error for ScoreError {}
