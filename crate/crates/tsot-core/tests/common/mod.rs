//! Independent oracles and generators for differential testing.
//!
//! These are deliberately naive re-implementations — plain recursion,
//! exhaustive enumeration, position-by-position sweeps — that never call
//! the code paths they check.

use std::collections::BTreeMap;

use tsot_core::scorer::EditCounts;
use tsot_core::transcript::{AnnotatedTranscript, TimedToken};

/// Edit distance by direct exponential recursion over prefixes, carrying
/// S/I/D counts with the same tie preference as the implementation:
/// substitution over insertion over deletion.
pub fn naive_edit_counts(reference: &[String], hypothesis: &[String]) -> EditCounts {
    fn go(reference: &[String], hypothesis: &[String], i: usize, j: usize) -> (u32, u32, u32) {
        if i == 0 {
            return (0, j as u32, 0);
        }
        if j == 0 {
            return (0, 0, i as u32);
        }
        let (mut ds, di, dd) = go(reference, hypothesis, i - 1, j - 1);
        if reference[i - 1] != hypothesis[j - 1] {
            ds += 1;
        }
        let diagonal = (ds, di, dd);
        let (is, ii, id) = go(reference, hypothesis, i, j - 1);
        let insertion = (is, ii + 1, id);
        let (es, ei, ed) = go(reference, hypothesis, i - 1, j);
        let deletion = (es, ei, ed + 1);

        let total = |c: (u32, u32, u32)| c.0 + c.1 + c.2;
        let mut best = diagonal;
        if total(insertion) < total(best) {
            best = insertion;
        }
        if total(deletion) < total(best) {
            best = deletion;
        }
        best
    }
    let (s, i, d) = go(reference, hypothesis, reference.len(), hypothesis.len());
    EditCounts {
        substitutions: s,
        insertions: i,
        deletions: d,
        ref_len: reference.len() as u32,
    }
}

/// Minimum total errors over every bijection between the padded sides,
/// enumerated exhaustively with the naive edit distance.
pub fn brute_force_min_errors(refs: &[Vec<String>], hyps: &[Vec<String>]) -> u32 {
    let size = refs.len().max(hyps.len());
    let empty: Vec<String> = Vec::new();
    let mut best = u32::MAX;
    let mut perm: Vec<usize> = (0..size).collect();
    permute(&mut perm, 0, &mut |perm| {
        let mut total = 0;
        for (h, &r) in perm.iter().enumerate() {
            let hyp = hyps.get(h).unwrap_or(&empty);
            let reference = refs.get(r).unwrap_or(&empty);
            total += naive_edit_counts(reference, hyp).errors();
        }
        best = best.min(total);
    });
    if size == 0 {
        0
    } else {
        best
    }
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Peak utterance concurrency by an independent interval-overlap sweep:
/// the first-position/final-flag-position window of every utterance is
/// built in separate passes and each sorted position is counted from
/// scratch.
pub fn sweep_concurrency(transcript: &AnnotatedTranscript) -> usize {
    let order = transcript.sorted_indices();
    let mut first: BTreeMap<&str, usize> = BTreeMap::new();
    let mut final_pos: BTreeMap<&str, usize> = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        let token = &transcript.tokens[i];
        first.entry(&token.utterance_id).or_insert(pos);
        if token.utterance_final {
            final_pos.insert(&token.utterance_id, pos);
        }
    }
    (0..order.len())
        .map(|pos| {
            first
                .keys()
                .filter(|id| first[**id] <= pos && pos <= final_pos[**id])
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// Decodes a rendered stream by the stated channel-switch rules alone:
/// `<cc>` flips 1<->2, `<ccN>` selects N, anything else is a lexical token
/// on the current channel. Returns `(channel, token)` per lexical token.
pub fn oracle_decode(rendered: &[String]) -> Vec<(u32, String)> {
    let mut channel = 1u32;
    let mut out = Vec::new();
    for entry in rendered {
        if entry == "<cc>" {
            channel = 3 - channel;
        } else if let Some(m) = entry
            .strip_prefix("<cc")
            .and_then(|rest| rest.strip_suffix('>'))
            .and_then(|digits| digits.parse::<u32>().ok())
        {
            channel = m;
        } else {
            out.push((channel, entry.clone()));
        }
    }
    out
}

/// True when every utterance's tokens share one channel and occupy it
/// contiguously, judged from the per-position channels of the decoded
/// stream zipped against the emission-sorted transcript.
pub fn utterance_placement_ok(
    transcript: &AnnotatedTranscript,
    decoded: &[(u32, String)],
) -> bool {
    let order = transcript.sorted_indices();
    assert_eq!(order.len(), decoded.len());
    // Channel agreement per utterance.
    let mut channel_of: BTreeMap<&str, u32> = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        let token = &transcript.tokens[i];
        assert_eq!(decoded[pos].1, token.text);
        let channel = decoded[pos].0;
        match channel_of.get(token.utterance_id.as_str()) {
            None => {
                channel_of.insert(&token.utterance_id, channel);
            }
            Some(&c) if c != channel => return false,
            Some(_) => {}
        }
    }
    // Contiguity: per channel, the utterance ids must form whole blocks.
    let mut per_channel: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        per_channel
            .entry(decoded[pos].0)
            .or_default()
            .push(&transcript.tokens[i].utterance_id);
    }
    for ids in per_channel.values() {
        let mut seen: Vec<&str> = Vec::new();
        for window in ids.windows(2) {
            if window[0] != window[1] {
                seen.push(window[0]);
            }
        }
        if let Some(last) = ids.last() {
            seen.push(last);
        }
        let mut dedup = seen.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != seen.len() {
            return false; // an utterance id re-appeared after a break
        }
    }
    true
}

/// Emission-sorted token texts: the expected `strip_cc` output.
pub fn sorted_texts(transcript: &AnnotatedTranscript) -> Vec<String> {
    transcript
        .sorted_indices()
        .into_iter()
        .map(|i| transcript.tokens[i].text.clone())
        .collect()
}

/// A pool of valid single-speaker, single-utterance transcripts with
/// seeded token counts and gaps.
pub fn build_pool(seed: u64, entries: usize) -> Vec<AnnotatedTranscript> {
    use tsot_core::rng::{rng_from_seed, uniform_inclusive};
    let mut rng = rng_from_seed(seed);
    (0..entries)
        .map(|p| {
            let count = uniform_inclusive(&mut rng, 1, 6) as usize;
            let mut time = uniform_inclusive(&mut rng, 50, 400);
            let tokens = (0..count)
                .map(|k| {
                    time += uniform_inclusive(&mut rng, 50, 800);
                    TimedToken::new(
                        format!("p{p}w{k}"),
                        time,
                        "src",
                        format!("p{p}"),
                        k == count - 1,
                    )
                })
                .collect();
            AnnotatedTranscript::new(format!("p{p}"), tokens)
        })
        .collect()
}

/// A transcript of `n` utterances that all overlap pairwise: every
/// utterance's first token precedes every utterance's final token, so the
/// peak concurrency is exactly `n`.
pub fn fully_overlapping(n: usize, seed: u64) -> AnnotatedTranscript {
    use tsot_core::rng::{rng_from_seed, uniform_inclusive};
    let mut rng = rng_from_seed(seed);
    let mut tokens = Vec::new();
    for u in 0..n {
        let opener_time = 100 + u as u64;
        let middle = uniform_inclusive(&mut rng, 0, 2);
        let closer_time = 10_000 + uniform_inclusive(&mut rng, 0, 500) + u as u64;
        tokens.push(TimedToken::new(
            format!("u{u}first"),
            opener_time,
            format!("spk{u}"),
            format!("u{u}"),
            false,
        ));
        for k in 0..middle {
            tokens.push(TimedToken::new(
                format!("u{u}mid{k}"),
                opener_time + 500 + k * 100,
                format!("spk{u}"),
                format!("u{u}"),
                false,
            ));
        }
        tokens.push(TimedToken::new(
            format!("u{u}last"),
            closer_time,
            format!("spk{u}"),
            format!("u{u}"),
            true,
        ));
    }
    AnnotatedTranscript::new(format!("overlap{n}"), tokens)
}
