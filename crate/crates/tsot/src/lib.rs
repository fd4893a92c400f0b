//! File formats, manifests, and command plumbing around [`tsot_core`].
//!
//! Everything on disk is JSONL — one JSON object per line, bit-exact field
//! names and order — so corpora stream through the tools line at a time.

pub mod cli;
pub mod ctm;
pub mod jsonl;
pub mod manifest;
