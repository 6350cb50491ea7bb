//! Bit-packed DNA and protein sequences with alignment and search.
//!
//! DNA uses two bits per base, most significant pair first within each byte
//! (A=00, C=01, G=10, T=11). IUPAC ambiguity letters are kept in a sorted
//! exception list and leave the placeholder code 00 in the packed stream.
//! Protein uses five bits per residue over [`PROTEIN_ALPHABET`].

pub mod align;
pub mod blast;
pub mod fasta;

pub use align::{sw_score, sw_score_codes, Alignment, ScoreKind, ScoringScheme};
pub use blast::{blast_search, BlastParams, Comparator, PreparedQuery, SeqHit};

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeqError {
    #[error("invalid {alphabet} character {ch:?} at position {pos}")]
    InvalidChar { alphabet: &'static str, ch: char, pos: usize },
    #[error("range {start}+{len} exceeds sequence length {total}")]
    OutOfRange { start: usize, len: usize, total: usize },
    #[error("ambiguous base at position {0} inside translated span")]
    Ambiguous(usize),
    #[error("span of {0} bases is too short to translate")]
    TooShort(usize),
    #[error("frame must be 1, 2 or 3, got {0}")]
    BadFrame(u8),
    #[error("cannot align {0} against {1}")]
    AlphabetMismatch(&'static str, &'static str),
    #[error("malformed FASTA at line {0}: {1}")]
    Fasta(usize, String),
}

pub const DNA_BASES: &[u8; 4] = b"ACGT";
/// Non-ACGT IUPAC nucleotide codes accepted into the exception list.
pub const IUPAC_EXTRA: &[u8] = b"RYSWKMBDHVN";
pub const PROTEIN_ALPHABET: &[u8; 22] = b"ACDEFGHIKLMNPQRSTVWY*X";

/// Fixed header charged per stored sequence: length and exception count.
pub const HEADER_BITS: usize = 64;
/// Bits per exception entry: 32-bit position plus the original byte.
pub const EXCEPTION_BITS: usize = 40;

fn dna_code(b: u8) -> Option<u8> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

fn iupac_complement(b: u8) -> u8 {
    match b {
        b'A' => b'T',
        b'T' => b'A',
        b'C' => b'G',
        b'G' => b'C',
        b'R' => b'Y',
        b'Y' => b'R',
        b'K' => b'M',
        b'M' => b'K',
        b'B' => b'V',
        b'V' => b'B',
        b'D' => b'H',
        b'H' => b'D',
        other => other, // S, W, N are self-complementary
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedDna {
    bits: Vec<u8>,
    len: usize,
    exceptions: Vec<(u32, u8)>,
}

impl EncodedDna {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn packed(&self) -> &[u8] {
        &self.bits
    }

    pub fn exceptions(&self) -> &[(u32, u8)] {
        &self.exceptions
    }

    /// Two-bit code at `i` (placeholder 0 at exception positions).
    #[inline]
    pub fn code(&self, i: usize) -> u8 {
        (self.bits[i >> 2] >> (6 - 2 * (i & 3))) & 3
    }

    pub fn is_exception(&self, i: usize) -> bool {
        self.exceptions.binary_search_by_key(&(i as u32), |e| e.0).is_ok()
    }

    /// Storage cost in bits: header, two bits per base, exception entries.
    pub fn stored_bits(&self) -> usize {
        HEADER_BITS + 2 * self.len + EXCEPTION_BITS * self.exceptions.len()
    }

    pub fn codes(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.code(i)).collect()
    }

    pub fn decode(&self) -> String {
        let mut out: Vec<u8> = (0..self.len).map(|i| DNA_BASES[self.code(i) as usize]).collect();
        for &(pos, ch) in &self.exceptions {
            out[pos as usize] = ch;
        }
        String::from_utf8(out).expect("ascii")
    }

    fn from_codes(codes: impl ExactSizeIterator<Item = u8>, exceptions: Vec<(u32, u8)>) -> Self {
        let len = codes.len();
        let mut bits = vec![0u8; len.div_ceil(4)];
        for (i, c) in codes.enumerate() {
            bits[i >> 2] |= c << (6 - 2 * (i & 3));
        }
        EncodedDna { bits, len, exceptions }
    }
}

pub fn encode_dna(text: &str) -> Result<EncodedDna, SeqError> {
    let mut codes = Vec::with_capacity(text.len());
    let mut exceptions = Vec::new();
    for (pos, ch) in text.chars().enumerate() {
        let up = ch.to_ascii_uppercase();
        let b = if up.is_ascii() { up as u8 } else { 0 };
        if let Some(c) = dna_code(b) {
            codes.push(c);
        } else if IUPAC_EXTRA.contains(&b) {
            codes.push(0);
            exceptions.push((pos as u32, b));
        } else {
            return Err(SeqError::InvalidChar { alphabet: "DNA", ch, pos });
        }
    }
    Ok(EncodedDna::from_codes(codes.into_iter(), exceptions))
}

pub fn reverse_complement(d: &EncodedDna) -> EncodedDna {
    let n = d.len;
    let mut exceptions: Vec<(u32, u8)> =
        d.exceptions.iter().rev().map(|&(p, ch)| ((n - 1 - p as usize) as u32, iupac_complement(ch))).collect();
    exceptions.sort_unstable();
    let mut ex = exceptions.iter().peekable();
    let codes = (0..n).map(move |i| {
        if ex.peek().is_some_and(|e| e.0 as usize == i) {
            ex.next();
            0
        } else {
            d.code(n - 1 - i) ^ 3
        }
    });
    EncodedDna::from_codes(codes.collect::<Vec<_>>().into_iter(), exceptions)
}

/// Standard genetic code indexed by `16*b1 + 4*b2 + b3` with T=0 C=1 A=2 G=3.
const GENETIC_CODE: &[u8; 64] = b"FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG";
/// Our base code (A C G T) to the TCAG index used by the table.
const TCAG: [usize; 4] = [2, 1, 3, 0];

/// Translates codons from offset `frame - 1`; a trailing partial codon is dropped.
pub fn translate(d: &EncodedDna, frame: u8) -> Result<EncodedProtein, SeqError> {
    if !(1..=3).contains(&frame) {
        return Err(SeqError::BadFrame(frame));
    }
    let off = (frame - 1) as usize;
    let span = d.len.saturating_sub(off);
    if span < 3 {
        return Err(SeqError::TooShort(span));
    }
    let end = off + span / 3 * 3;
    if let Some(&(p, _)) = d.exceptions.iter().find(|e| (off..end).contains(&(e.0 as usize))) {
        return Err(SeqError::Ambiguous(p as usize));
    }
    let residues = (off..end).step_by(3).map(|i| {
        let idx = 16 * TCAG[d.code(i) as usize] + 4 * TCAG[d.code(i + 1) as usize] + TCAG[d.code(i + 2) as usize];
        protein_code(GENETIC_CODE[idx]).expect("table letters are in the alphabet")
    });
    Ok(EncodedProtein::from_codes(residues.collect::<Vec<_>>().into_iter()))
}

fn protein_code(b: u8) -> Option<u8> {
    PROTEIN_ALPHABET.iter().position(|&c| c == b).map(|p| p as u8)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedProtein {
    bits: Vec<u8>,
    len: usize,
}

impl EncodedProtein {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn code(&self, i: usize) -> u8 {
        let bit = i * 5;
        let byte = bit >> 3;
        let word = (u16::from(self.bits[byte]) << 8) | u16::from(*self.bits.get(byte + 1).unwrap_or(&0));
        ((word >> (11 - (bit & 7))) & 0x1f) as u8
    }

    pub fn codes(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.code(i)).collect()
    }

    pub fn stored_bits(&self) -> usize {
        HEADER_BITS + 5 * self.len
    }

    pub fn decode(&self) -> String {
        (0..self.len).map(|i| PROTEIN_ALPHABET[self.code(i) as usize] as char).collect()
    }

    fn from_codes(codes: impl ExactSizeIterator<Item = u8>) -> Self {
        let len = codes.len();
        let mut bits = vec![0u8; (len * 5).div_ceil(8)];
        for (i, c) in codes.enumerate() {
            let bit = i * 5;
            let byte = bit >> 3;
            let word = u16::from(c) << (11 - (bit & 7));
            bits[byte] |= (word >> 8) as u8;
            if byte + 1 < bits.len() {
                bits[byte + 1] |= word as u8;
            }
        }
        EncodedProtein { bits, len }
    }
}

pub fn encode_protein(text: &str) -> Result<EncodedProtein, SeqError> {
    let codes = text
        .chars()
        .enumerate()
        .map(|(pos, ch)| {
            let up = ch.to_ascii_uppercase();
            let b = if up.is_ascii() { up as u8 } else { 0 };
            protein_code(b).ok_or(SeqError::InvalidChar { alphabet: "protein", ch, pos })
        })
        .collect::<Result<Vec<u8>, _>>()?;
    Ok(EncodedProtein::from_codes(codes.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sequence {
    Dna(EncodedDna),
    Protein(EncodedProtein),
}

impl Sequence {
    pub fn alphabet(&self) -> &'static str {
        match self {
            Sequence::Dna(_) => "dna",
            Sequence::Protein(_) => "protein",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sequence::Dna(d) => d.len(),
            Sequence::Protein(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self) -> String {
        match self {
            Sequence::Dna(d) => d.decode(),
            Sequence::Protein(p) => p.decode(),
        }
    }

    pub fn codes(&self) -> Vec<u8> {
        match self {
            Sequence::Dna(d) => d.codes(),
            Sequence::Protein(p) => p.codes(),
        }
    }

    pub fn stored_bits(&self) -> usize {
        match self {
            Sequence::Dna(d) => d.stored_bits(),
            Sequence::Protein(p) => p.stored_bits(),
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.decode())
    }
}

/// Slice `[start, start + len)` copied in the packed domain; DNA exceptions
/// inside the range are kept and rebased.
pub fn subsequence(s: &Sequence, start: usize, len: usize) -> Result<Sequence, SeqError> {
    let total = s.len();
    if start.checked_add(len).is_none_or(|end| end > total) {
        return Err(SeqError::OutOfRange { start, len, total });
    }
    Ok(match s {
        Sequence::Dna(d) => {
            let exceptions = d
                .exceptions
                .iter()
                .filter(|e| (start..start + len).contains(&(e.0 as usize)))
                .map(|&(p, ch)| (p - start as u32, ch))
                .collect();
            if start % 4 == 0 {
                // Byte aligned: copy whole bytes and clear the tail padding.
                let mut bits = d.bits[start / 4..(start + len).div_ceil(4)].to_vec();
                if len % 4 != 0 {
                    let last = bits.len() - 1;
                    bits[last] &= 0xffu8 << (8 - 2 * (len % 4));
                }
                Sequence::Dna(EncodedDna { bits, len, exceptions })
            } else {
                Sequence::Dna(EncodedDna::from_codes((start..start + len).map(|i| d.code(i)), exceptions))
            }
        }
        Sequence::Protein(p) => Sequence::Protein(EncodedProtein::from_codes((start..start + len).map(|i| p.code(i)))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acgt_packs_into_one_byte() {
        let d = encode_dna("ACGT").unwrap();
        assert_eq!(d.packed(), &[0b0001_1011]);
        assert_eq!(d.len(), 4);
        assert!(d.exceptions().is_empty());
        assert_eq!(d.stored_bits(), HEADER_BITS + 8);
    }

    #[test]
    fn invalid_letter_reports_position() {
        let e = encode_dna("ACGX").unwrap_err();
        assert_eq!(e, SeqError::InvalidChar { alphabet: "DNA", ch: 'X', pos: 3 });
    }

    #[test]
    fn ambiguity_codes_round_trip() {
        let d = encode_dna("acgtnRYswkmbdhv").unwrap();
        assert_eq!(d.decode(), "ACGTNRYSWKMBDHV");
        assert_eq!(d.exceptions().len(), 11);
        assert!(d.is_exception(4) && !d.is_exception(3));
    }

    #[test]
    fn reverse_complement_cases() {
        let rc = |s: &str| reverse_complement(&encode_dna(s).unwrap()).decode();
        assert_eq!(rc("ACGT"), "ACGT");
        assert_eq!(rc("AAAA"), "TTTT");
        assert_eq!(rc("ANRG"), "CYNT");
        let d = encode_dna("GATTACANNR").unwrap();
        assert_eq!(reverse_complement(&reverse_complement(&d)), d);
    }

    #[test]
    fn translation() {
        let t = |s: &str, f| translate(&encode_dna(s).unwrap(), f).map(|p| p.decode());
        assert_eq!(t("ATG", 1).unwrap(), "M");
        assert_eq!(t("ATGAAA", 1).unwrap(), "MK");
        assert_eq!(t("CATGTAAG", 2).unwrap(), "M*");
        assert_eq!(t("ATGNAA", 1), Err(SeqError::Ambiguous(3)));
        assert_eq!(t("ATGAAAN", 1).unwrap(), "MK");
        assert_eq!(t("AT", 1), Err(SeqError::TooShort(2)));
        assert_eq!(t("ATGA", 4), Err(SeqError::BadFrame(4)));
    }

    #[test]
    fn protein_round_trip() {
        let all = std::str::from_utf8(PROTEIN_ALPHABET).unwrap();
        let p = encode_protein(all).unwrap();
        assert_eq!(p.decode(), all);
        assert!(p.codes().iter().all(|&c| c < 22));
        assert!(encode_protein("MKB").is_err());
    }

    #[test]
    fn subsequence_edges() {
        let s = Sequence::Dna(encode_dna("ACGTNACGTA").unwrap());
        assert_eq!(subsequence(&s, 0, 10).unwrap(), s);
        assert_eq!(subsequence(&s, 3, 0).unwrap().len(), 0);
        assert_eq!(subsequence(&s, 4, 3).unwrap().decode(), "NAC");
        assert_eq!(subsequence(&s, 3, 4).unwrap().decode(), "TNAC");
        assert!(subsequence(&s, 8, 3).is_err());
        assert!(subsequence(&s, usize::MAX, 3).is_err());
    }
}
