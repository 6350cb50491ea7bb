//! Affine-gap Smith-Waterman with deterministic tie-breaking.

use super::{Sequence, SeqError, PROTEIN_ALPHABET};
use serde::{Deserialize, Serialize};

/// Code used for DNA exception positions during alignment; never matches.
pub const AMBIGUOUS: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    Dna { match_score: i32, mismatch: i32 },
    /// Indexed by protein codes in [`PROTEIN_ALPHABET`] order.
    Matrix(Box<[[i32; 22]; 22]>),
}

/// A gap of length `L` scores `gap_open + L * gap_extend`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringScheme {
    pub kind: ScoreKind,
    pub gap_open: i32,
    pub gap_extend: i32,
}

impl ScoringScheme {
    pub fn dna(match_score: i32, mismatch: i32, gap_open: i32, gap_extend: i32) -> Self {
        assert!(match_score > 0 && mismatch <= 0, "dna scheme needs match > 0 and mismatch <= 0");
        assert!(gap_open <= 0 && gap_extend <= 0, "gap penalties must be <= 0");
        ScoringScheme { kind: ScoreKind::Dna { match_score, mismatch }, gap_open, gap_extend }
    }

    pub fn blosum62(gap_open: i32, gap_extend: i32) -> Self {
        assert!(gap_open <= 0 && gap_extend <= 0, "gap penalties must be <= 0");
        ScoringScheme { kind: ScoreKind::Matrix(Box::new(blosum62())), gap_open, gap_extend }
    }

    /// dna(+1, -3) with gaps -5 / -2.
    pub fn default_dna() -> Self {
        ScoringScheme::dna(1, -3, -5, -2)
    }

    /// BLOSUM62 with gaps -11 / -1.
    pub fn default_protein() -> Self {
        ScoringScheme::blosum62(-11, -1)
    }

    pub fn default_for(s: &Sequence) -> Self {
        match s {
            Sequence::Dna(_) => ScoringScheme::default_dna(),
            Sequence::Protein(_) => ScoringScheme::default_protein(),
        }
    }

    #[inline]
    pub fn pair(&self, a: u8, b: u8) -> i32 {
        match &self.kind {
            ScoreKind::Dna { match_score, mismatch } => {
                if a == b && a != AMBIGUOUS {
                    *match_score
                } else {
                    *mismatch
                }
            }
            ScoreKind::Matrix(m) => m[a as usize][b as usize],
        }
    }

    /// Best possible score of a single aligned pair.
    pub fn max_pair(&self) -> i32 {
        match &self.kind {
            ScoreKind::Dna { match_score, .. } => *match_score,
            ScoreKind::Matrix(m) => m.iter().flat_map(|r| r.iter()).copied().max().unwrap_or(0),
        }
    }

    fn check(&self, s: &Sequence) -> Result<(), SeqError> {
        match (&self.kind, s) {
            (ScoreKind::Matrix(_), Sequence::Dna(_)) => Err(SeqError::AlphabetMismatch("dna", "matrix scheme")),
            _ => Ok(()),
        }
    }
}

/// Alignment codes: DNA exception positions become [`AMBIGUOUS`].
pub fn alignment_codes(s: &Sequence) -> Vec<u8> {
    match s {
        Sequence::Dna(d) => {
            let mut codes = d.codes();
            for &(p, _) in d.exceptions() {
                codes[p as usize] = AMBIGUOUS;
            }
            codes
        }
        Sequence::Protein(p) => p.codes(),
    }
}

/// One optimal local alignment. Spans are half-open; an empty alignment has
/// score 0 and empty spans at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub score: i32,
    pub query_span: (usize, usize),
    pub subject_span: (usize, usize),
}

pub fn sw_score(query: &Sequence, subject: &Sequence, sch: &ScoringScheme) -> Result<Alignment, SeqError> {
    if query.alphabet() != subject.alphabet() {
        return Err(SeqError::AlphabetMismatch(query.alphabet(), subject.alphabet()));
    }
    sch.check(query)?;
    Ok(sw_score_codes(&alignment_codes(query), &alignment_codes(subject), sch))
}

const NEG: i32 = i32::MIN / 4;

/// (score, start) where start packs (subject start, query start) so that
/// integer order is the tie-break order.
type Cell = (i32, u64);

#[inline]
fn start_key(subject: usize, query: usize) -> u64 {
    ((subject as u64) << 32) | query as u64
}

#[inline]
fn better(a: Cell, b: Cell) -> Cell {
    if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
        a
    } else {
        b
    }
}

/// Gotoh recurrences in linear space. Every cell keeps the best score and,
/// among paths achieving it, the smallest start. The reported alignment is
/// the best end cell ordered by score, then start, then (subject, query) end.
pub fn sw_score_codes(q: &[u8], s: &[u8], sch: &ScoringScheme) -> Alignment {
    let (n, m) = (q.len(), s.len());
    let open = sch.gap_open + sch.gap_extend;
    let ext = sch.gap_extend;
    let mut prev: Vec<Cell> = (0..=m).map(|j| (0, start_key(j, 0))).collect();
    let mut cur: Vec<Cell> = vec![(0, 0); m + 1];
    let mut vert: Vec<Cell> = vec![(NEG, 0); m + 1];
    let mut best: Option<(Cell, u64)> = None;

    for i in 1..=n {
        cur[0] = (0, start_key(0, i));
        let mut horiz: Cell = (NEG, 0);
        let qc = q[i - 1];
        for j in 1..=m {
            let left = cur[j - 1];
            horiz = better((left.0 + open, left.1), (horiz.0 + ext, horiz.1));
            let up = prev[j];
            vert[j] = better((up.0 + open, up.1), (vert[j].0 + ext, vert[j].1));
            let diag = prev[j - 1];
            let mut h = better(better((diag.0 + sch.pair(qc, s[j - 1]), diag.1), horiz), vert[j]);
            h = better(h, (0, start_key(j, i)));
            cur[j] = h;
            if h.0 > 0 {
                let end = start_key(j, i);
                let replace = match best {
                    None => true,
                    Some((b, bend)) => h.0 > b.0 || (h.0 == b.0 && (h.1, end) < (b.1, bend)),
                };
                if replace {
                    best = Some((h, end));
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    match best {
        None => Alignment { score: 0, query_span: (0, 0), subject_span: (0, 0) },
        Some(((score, start), end)) => Alignment {
            score,
            query_span: ((start & 0xffff_ffff) as usize, (end & 0xffff_ffff) as usize),
            subject_span: ((start >> 32) as usize, (end >> 32) as usize),
        },
    }
}

/// Score-only local alignment restricted to diagonals `j - i` within
/// `band` of `diag`.
pub fn banded_score(q: &[u8], s: &[u8], sch: &ScoringScheme, diag: i64, band: usize) -> i32 {
    let (n, m) = (q.len() as i64, s.len() as i64);
    let w = 2 * band + 1;
    let open = sch.gap_open + sch.gap_extend;
    let ext = sch.gap_extend;
    // Offset k in a row stands for column j = i + diag - band + k.
    let mut h_prev = vec![0i32; w + 1];
    let mut f_prev = vec![NEG; w + 1];
    let mut h_cur = vec![0i32; w + 1];
    let mut f_cur = vec![NEG; w + 1];
    let mut best = 0;
    for i in 0..n {
        let lo = i + diag - band as i64;
        let mut e = NEG;
        for k in 0..w {
            let j = lo + k as i64;
            if j < 0 || j >= m {
                h_cur[k] = 0;
                f_cur[k] = NEG;
                e = NEG;
                continue;
            }
            // Neighbours: diag (i-1, j-1) is offset k in the previous row;
            // up (i-1, j) is k+1 there; left (i, j-1) is k-1 here.
            let left_h = if k > 0 { h_cur[k - 1] } else { 0 };
            e = (left_h + open).max(e + ext);
            let (up_h, up_f) = (h_prev[k + 1], f_prev[k + 1]);
            let f = (up_h + open).max(up_f + ext);
            let d = if i > 0 && j > 0 { h_prev[k] } else { 0 };
            let h = (d + sch.pair(q[i as usize], s[j as usize])).max(e).max(f).max(0);
            h_cur[k] = h;
            f_cur[k] = f;
            best = best.max(h);
        }
        h_cur[w] = 0;
        f_cur[w] = NEG;
        std::mem::swap(&mut h_prev, &mut h_cur);
        std::mem::swap(&mut f_prev, &mut f_cur);
    }
    best
}

/// BLOSUM62 in the conventional ARNDCQEGHILKMFPSTWYV row order.
const BLOSUM62_20: [[i8; 20]; 20] = [
    [4, -1, -2, -2, 0, -1, -1, 0, -2, -1, -1, -1, -1, -2, -1, 1, 0, -3, -2, 0],
    [-1, 5, 0, -2, -3, 1, 0, -2, 0, -3, -2, 2, -1, -3, -2, -1, -1, -3, -2, -3],
    [-2, 0, 6, 1, -3, 0, 0, 0, 1, -3, -3, 0, -2, -3, -2, 1, 0, -4, -2, -3],
    [-2, -2, 1, 6, -3, 0, 2, -1, -1, -3, -4, -1, -3, -3, -1, 0, -1, -4, -3, -3],
    [0, -3, -3, -3, 9, -3, -4, -3, -3, -1, -1, -3, -1, -2, -3, -1, -1, -2, -2, -1],
    [-1, 1, 0, 0, -3, 5, 2, -2, 0, -3, -2, 1, 0, -3, -1, 0, -1, -2, -1, -2],
    [-1, 0, 0, 2, -4, 2, 5, -2, 0, -3, -3, 1, -2, -3, -1, 0, -1, -3, -2, -2],
    [0, -2, 0, -1, -3, -2, -2, 6, -2, -4, -4, -2, -3, -3, -2, 0, -2, -2, -3, -3],
    [-2, 0, 1, -1, -3, 0, 0, -2, 8, -3, -3, -1, -2, -1, -2, -1, -2, -2, 2, -3],
    [-1, -3, -3, -3, -1, -3, -3, -4, -3, 4, 2, -3, 1, 0, -3, -2, -1, -3, -1, 3],
    [-1, -2, -3, -4, -1, -2, -3, -4, -3, 2, 4, -2, 2, 0, -3, -2, -1, -2, -1, 1],
    [-1, 2, 0, -1, -3, 1, 1, -2, -1, -3, -2, 5, -1, -3, -1, 0, -1, -3, -2, -2],
    [-1, -1, -2, -3, -1, 0, -2, -3, -2, 1, 2, -1, 5, 0, -2, -1, -1, -1, -1, 1],
    [-2, -3, -3, -3, -2, -3, -3, -3, -1, 0, 0, -3, 0, 6, -4, -2, -2, 1, 3, -1],
    [-1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4, 7, -1, -1, -4, -3, -2],
    [1, -1, 1, 0, -1, 0, 0, 0, -1, -2, -2, 0, -1, -2, -1, 4, 1, -3, -2, -2],
    [0, -1, 0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1, 1, 5, -2, -2, 0],
    [-3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1, 1, -4, -3, -2, 11, 2, -3],
    [-2, -2, -2, -3, -2, -1, -2, -3, 2, -1, -1, -2, -1, 3, -3, -2, -2, 2, 7, -1],
    [0, -3, -3, -3, -1, -2, -2, -3, -3, 3, 1, -2, 1, -1, -2, -2, 0, -3, -1, 4],
];
const BLOSUM62_ORDER: &[u8; 20] = b"ARNDCQEGHILKMFPSTWYV";
/// X column/row for the 20 standard residues, same order.
const BLOSUM62_X: [i8; 20] = [0, -1, -1, -1, -2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -2, 0, 0, -2, -1, -1];

/// BLOSUM62 re-indexed to [`PROTEIN_ALPHABET`]; `*` scores -4 against
/// everything but itself (+1), `X` against `X` scores -1.
pub fn blosum62() -> [[i32; 22]; 22] {
    let idx = |c: u8| PROTEIN_ALPHABET.iter().position(|&a| a == c).unwrap();
    let stop = idx(b'*');
    let unknown = idx(b'X');
    let mut m = [[-4i32; 22]; 22];
    for (r, &a) in BLOSUM62_ORDER.iter().enumerate() {
        for (c, &b) in BLOSUM62_ORDER.iter().enumerate() {
            m[idx(a)][idx(b)] = i32::from(BLOSUM62_20[r][c]);
        }
        m[idx(a)][unknown] = i32::from(BLOSUM62_X[r]);
        m[unknown][idx(a)] = i32::from(BLOSUM62_X[r]);
    }
    m[unknown][unknown] = -1;
    m[stop][stop] = 1;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::{encode_dna, encode_protein};

    fn dna(s: &str) -> Sequence {
        Sequence::Dna(encode_dna(s).unwrap())
    }

    #[test]
    fn perfect_match() {
        let a = sw_score(&dna("ACGT"), &dna("ACGT"), &ScoringScheme::dna(1, -1, 0, -1)).unwrap();
        assert_eq!(a, Alignment { score: 4, query_span: (0, 4), subject_span: (0, 4) });
    }

    #[test]
    fn empty_input() {
        let a = sw_score(&dna(""), &dna("ACGT"), &ScoringScheme::default_dna()).unwrap();
        assert_eq!(a.score, 0);
    }

    #[test]
    fn ties_prefer_smallest_subject_start() {
        let a = sw_score(&dna("AC"), &dna("ACTTAC"), &ScoringScheme::default_dna()).unwrap();
        assert_eq!(a, Alignment { score: 2, query_span: (0, 2), subject_span: (0, 2) });
    }

    #[test]
    fn ambiguous_bases_never_match() {
        let a = sw_score(&dna("NNNN"), &dna("NNNN"), &ScoringScheme::default_dna()).unwrap();
        assert_eq!(a.score, 0);
    }

    #[test]
    fn alphabet_mismatch() {
        let p = Sequence::Protein(encode_protein("MK").unwrap());
        assert!(sw_score(&dna("AC"), &p, &ScoringScheme::default_dna()).is_err());
        assert!(sw_score(&dna("AC"), &dna("AC"), &ScoringScheme::default_protein()).is_err());
    }

    #[test]
    fn blosum_is_symmetric_with_known_diagonal() {
        let m = blosum62();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, m[j][i]);
            }
        }
        let at = |a: u8, b: u8| {
            let idx = |c| PROTEIN_ALPHABET.iter().position(|&x| x == c).unwrap();
            m[idx(a)][idx(b)]
        };
        assert_eq!((at(b'W', b'W'), at(b'C', b'C'), at(b'A', b'A')), (11, 9, 4));
        assert_eq!((at(b'E', b'Q'), at(b'*', b'A'), at(b'*', b'*')), (2, -4, 1));
    }

    #[test]
    fn banded_equals_full_when_band_covers_all() {
        let q = alignment_codes(&dna("ACACACTAGGT"));
        let s = alignment_codes(&dna("AGCACACAGGTT"));
        let sch = ScoringScheme::dna(2, -1, -1, -1);
        assert_eq!(banded_score(&q, &s, &sch, 0, 16), sw_score_codes(&q, &s, &sch).score);
    }
}
