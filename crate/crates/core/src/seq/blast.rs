//! Seed-and-extend similarity search.
//!
//! Exact word seeds are found on the packed codes (exception positions never
//! seed), extended without gaps under an X-drop rule, then re-aligned with a
//! banded gapped pass around the seed diagonal. A subject whose banded score
//! passes the threshold is re-scored with full Smith-Waterman, and only that
//! exact score is reported, so no hit can be a false positive.

use super::align::{alignment_codes, banded_score, sw_score_codes, AMBIGUOUS};
use super::{ScoringScheme, Sequence, SeqError};
use crate::oid::Oid;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Comparator {
    /// score >= threshold
    #[default]
    AtLeast,
    /// score > threshold
    Greater,
}

impl Comparator {
    pub fn accepts(self, score: i32, threshold: i32) -> bool {
        match self {
            Comparator::AtLeast => score >= threshold,
            Comparator::Greater => score > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlastParams {
    pub word_dna: usize,
    pub word_protein: usize,
    pub x_drop: i32,
    pub band: usize,
    /// Ungapped score a seed needs before the gapped pass (capped at the
    /// threshold so short exact hits are never dropped).
    pub gap_trigger: i32,
    pub comparator: Comparator,
}

impl Default for BlastParams {
    fn default() -> Self {
        BlastParams { word_dna: 11, word_protein: 3, x_drop: 20, band: 32, gap_trigger: 22, comparator: Comparator::AtLeast }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqHit {
    pub oid: Oid,
    pub score: i32,
    pub query_span: (usize, usize),
    pub subject_span: (usize, usize),
}

/// Query-side state reused across subjects.
pub struct PreparedQuery<'a> {
    codes: Vec<u8>,
    word: usize,
    bits: u32,
    words: HashMap<u64, Vec<u32>>,
    alphabet: &'static str,
    sch: &'a ScoringScheme,
    params: &'a BlastParams,
}

impl<'a> PreparedQuery<'a> {
    pub fn new(q: &Sequence, sch: &'a ScoringScheme, params: &'a BlastParams) -> Self {
        let codes = alignment_codes(q);
        let (word, bits) = match q {
            Sequence::Dna(_) => (params.word_dna, 2),
            Sequence::Protein(_) => (params.word_protein, 5),
        };
        let mut words: HashMap<u64, Vec<u32>> = HashMap::new();
        for (pos, key) in word_keys(&codes, word, bits) {
            words.entry(key).or_default().push(pos as u32);
        }
        PreparedQuery { codes, word, bits, words, alphabet: q.alphabet(), sch, params }
    }

    /// Exact alignment of the query against `subject` when it passes the
    /// seed and banded filters and the threshold.
    pub fn probe(&self, oid: Oid, subject: &Sequence, threshold: i32) -> Result<Option<SeqHit>, SeqError> {
        if subject.alphabet() != self.alphabet {
            return Err(SeqError::AlphabetMismatch(self.alphabet, subject.alphabet()));
        }
        let s = alignment_codes(subject);
        let cmp = self.params.comparator;
        // Upper bound on any local score.
        if !cmp.accepts(self.sch.max_pair().max(0) * self.codes.len().min(s.len()) as i32, threshold) {
            return Ok(None);
        }
        let candidate = if self.codes.len() < self.word || s.len() < self.word {
            true
        } else {
            self.seeded_candidate(&s, threshold)
        };
        if !candidate {
            return Ok(None);
        }
        let a = sw_score_codes(&self.codes, &s, self.sch);
        Ok(cmp.accepts(a.score, threshold).then_some(SeqHit {
            oid,
            score: a.score,
            query_span: a.query_span,
            subject_span: a.subject_span,
        }))
    }

    fn seeded_candidate(&self, s: &[u8], threshold: i32) -> bool {
        let trigger = self.params.gap_trigger.min(threshold);
        let band = self.params.band as i64;
        // Furthest subject position already covered by an ungapped
        // extension on each diagonal, and diagonals already banded.
        let mut reach: HashMap<i64, usize> = HashMap::new();
        let mut banded: Vec<i64> = Vec::new();
        for (sj, key) in word_keys(s, self.word, self.bits) {
            let Some(hits) = self.words.get(&key) else { continue };
            for &qi in hits {
                let qi = qi as usize;
                let diag = sj as i64 - qi as i64;
                if reach.get(&diag).is_some_and(|&r| sj < r) {
                    continue;
                }
                let (score, end) = self.ungapped(s, qi, sj);
                reach.insert(diag, end);
                if score < trigger || banded.iter().any(|d| (d - diag).abs() <= band / 2) {
                    continue;
                }
                banded.push(diag);
                let gapped = banded_score(&self.codes, s, self.sch, diag, self.params.band);
                if self.params.comparator.accepts(gapped, threshold) {
                    return true;
                }
            }
        }
        false
    }

    /// X-drop extension of the seed at (qi, sj) in both directions; returns
    /// the score and the subject position just past the right extension.
    fn ungapped(&self, s: &[u8], qi: usize, sj: usize) -> (i32, usize) {
        let q = &self.codes;
        let x = self.params.x_drop;
        let seed: i32 = (0..self.word).map(|k| self.sch.pair(q[qi + k], s[sj + k])).sum();

        let (mut run, mut best, mut best_len) = (0, 0, 0);
        let mut k = 0;
        while qi + self.word + k < q.len() && sj + self.word + k < s.len() {
            run += self.sch.pair(q[qi + self.word + k], s[sj + self.word + k]);
            k += 1;
            if run > best {
                best = run;
                best_len = k;
            } else if best - run > x {
                break;
            }
        }
        let right = best;
        let end = sj + self.word + best_len;

        let (mut run, mut best) = (0, 0);
        let mut k = 1;
        while k <= qi && k <= sj {
            run += self.sch.pair(q[qi - k], s[sj - k]);
            k += 1;
            if run > best {
                best = run;
            } else if best - run > x {
                break;
            }
        }
        (seed + right + best, end)
    }
}

/// (position, key) for every window of `word` codes free of ambiguity.
fn word_keys(codes: &[u8], word: usize, bits: u32) -> impl Iterator<Item = (usize, u64)> + '_ {
    let mask = if word as u32 * bits >= 64 { u64::MAX } else { (1u64 << (word as u32 * bits)) - 1 };
    let mut key = 0u64;
    let mut clean = 0usize;
    codes.iter().enumerate().filter_map(move |(i, &c)| {
        if c == AMBIGUOUS && bits == 2 {
            clean = 0;
            key = 0;
            return None;
        }
        key = ((key << bits) | u64::from(c)) & mask;
        clean += 1;
        (clean >= word && word > 0).then(|| (i + 1 - word, key))
    })
}

/// Searches every subject independently; hits are ordered by descending
/// score, then ascending oid.
pub fn blast_search<'s, I>(
    db: I,
    q: &Sequence,
    threshold: i32,
    sch: &ScoringScheme,
    params: &BlastParams,
) -> Result<Vec<SeqHit>, SeqError>
where
    I: IntoIterator<Item = (Oid, &'s Sequence)>,
{
    let prepared = PreparedQuery::new(q, sch, params);
    let mut hits = Vec::new();
    for (oid, s) in db {
        if let Some(h) = prepared.probe(oid, s, threshold)? {
            hits.push(h);
        }
    }
    hits.sort_by(|a, b| b.score.cmp(&a.score).then(a.oid.cmp(&b.oid)));
    Ok(hits)
}
