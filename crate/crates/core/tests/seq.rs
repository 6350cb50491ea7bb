use biodb::seq::{encode_dna, encode_protein, reverse_complement, subsequence, translate, Sequence, SeqError, IUPAC_EXTRA};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CODE: &[u8; 64] = b"FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG";

fn tcag(b: u8) -> usize {
    b"TCAG".iter().position(|&c| c == b).unwrap()
}

fn codon_table(dna: &[u8], off: usize) -> String {
    dna[off..].chunks_exact(3).map(|c| CODE[16 * tcag(c[0]) + 4 * tcag(c[1]) + tcag(c[2])] as char).collect()
}

fn random_dna(rng: &mut ChaCha8Rng, n: usize, ambiguity: f64) -> String {
    (0..n)
        .map(|_| {
            if rng.gen_bool(ambiguity) {
                IUPAC_EXTRA[rng.gen_range(0..IUPAC_EXTRA.len())] as char
            } else {
                b"ACGT"[rng.gen_range(0..4)] as char
            }
        })
        .collect()
}

fn complement(b: char) -> char {
    match b {
        'A' => 'T',
        'C' => 'G',
        'G' => 'C',
        'T' => 'A',
        'R' => 'Y',
        'Y' => 'R',
        'K' => 'M',
        'M' => 'K',
        'B' => 'V',
        'V' => 'B',
        'D' => 'H',
        'H' => 'D',
        other => other,
    }
}

#[test]
fn dna_round_trips_with_ambiguity_codes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(0..10_000);
        let text = random_dna(&mut rng, n, 0.01);
        let d = encode_dna(&text).unwrap();
        assert_eq!(d.decode(), text);
        assert_eq!(d.len(), n);
        let amb = text.bytes().filter(|b| !b"ACGT".contains(b)).count();
        assert_eq!(d.exceptions().len(), amb);
    }
    assert!(matches!(encode_dna("ACGU"), Err(SeqError::InvalidChar { pos: 3, .. })));
}

#[test]
fn reverse_complement_matches_string_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.gen_range(0..500);
        let text = random_dna(&mut rng, n, 0.05);
        let rc = reverse_complement(&encode_dna(&text).unwrap());
        assert_eq!(rc.decode(), text.chars().rev().map(complement).collect::<String>());
        assert_eq!(reverse_complement(&rc).decode(), text);
    }
}

#[test]
fn translation_follows_the_standard_code() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let n = rng.gen_range(5..400);
        let text = random_dna(&mut rng, n, 0.0);
        let d = encode_dna(&text).unwrap();
        for frame in 1..=3u8 {
            let p = translate(&d, frame).unwrap();
            assert_eq!(p.len(), (n - frame as usize + 1) / 3);
            assert_eq!(p.decode(), codon_table(text.as_bytes(), frame as usize - 1));
        }
    }
    let d = encode_dna("ATGNNNTAA").unwrap();
    assert!(matches!(translate(&d, 1), Err(SeqError::Ambiguous(_))));
    assert!(matches!(translate(&d, 4), Err(SeqError::BadFrame(4))));
}

#[test]
fn slices_match_string_slices() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let text = random_dna(&mut rng, 3000, 0.02);
    let dna = Sequence::Dna(encode_dna(&text).unwrap());
    let prot_text: String = (0..800).map(|_| b"ACDEFGHIKLMNPQRSTVWY"[rng.gen_range(0..20)] as char).collect();
    let prot = Sequence::Protein(encode_protein(&prot_text).unwrap());
    for _ in 0..1000 {
        let start = rng.gen_range(0..=text.len());
        let len = rng.gen_range(0..=text.len() - start);
        assert_eq!(subsequence(&dna, start, len).unwrap().decode(), text[start..start + len]);
        let start = rng.gen_range(0..=prot_text.len());
        let len = rng.gen_range(0..=prot_text.len() - start);
        assert_eq!(subsequence(&prot, start, len).unwrap().decode(), prot_text[start..start + len]);
    }
    assert!(matches!(subsequence(&dna, 2999, 2), Err(SeqError::OutOfRange { .. })));
    assert!(subsequence(&dna, 3000, 0).unwrap().is_empty());
}
