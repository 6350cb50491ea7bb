//! FASTA ingestion into a class with a sequence attribute.

use crate::BenchError;
use biodb::catalog::AttrType;
use biodb::seq::{encode_dna, encode_protein, fasta, Sequence};
use biodb::store::{Database, Value};
use std::io::BufRead;

/// Inserts one object of `class` per record with the sequence in `attr`.
/// When `id_attr` names a string attribute the record id goes there.
/// Returns the number of objects created.
pub fn load_fasta<R: BufRead>(db: &mut Database, reader: R, class: &str, attr: &str, id_attr: Option<&str>) -> Result<usize, BenchError> {
    let cid = db.catalog().class_id(class).ok_or_else(|| BenchError::Config(format!("unknown class {class}")))?;
    let dna = match db.catalog().attr(cid, attr) {
        Some((_, AttrType::Dna)) => true,
        Some((_, AttrType::Protein)) => false,
        Some((_, t)) => return Err(BenchError::Config(format!("{class}.{attr} is {t}, not a sequence"))),
        None => return Err(BenchError::Config(format!("class {class} has no attribute {attr}"))),
    };
    if let Some(a) = id_attr {
        if !matches!(db.catalog().attr(cid, a), Some((_, AttrType::String))) {
            return Err(BenchError::Config(format!("{class}.{a} is not a string attribute")));
        }
    }
    let records = fasta::read(reader).map_err(|e| BenchError::Data(e.to_string()))?;
    let mut seqs = Vec::with_capacity(records.len());
    for r in &records {
        let s = if dna { encode_dna(&r.sequence).map(Sequence::Dna) } else { encode_protein(&r.sequence).map(Sequence::Protein) };
        seqs.push(s.map_err(|e| BenchError::Data(format!("record {}: {e}", r.id())))?);
    }
    for (r, s) in records.iter().zip(seqs) {
        let sid = db.put_sequence(s);
        let mut fields = vec![(attr, Value::Seq(sid))];
        if let Some(a) = id_attr {
            fields.push((a, Value::Str(r.id().to_string())));
        }
        db.insert_object(class, &fields)?;
    }
    Ok(records.len())
}

/// Sequences of a FASTA stream, for use as a generator pool.
pub fn read_pool<R: BufRead>(reader: R) -> Result<Vec<Sequence>, BenchError> {
    fasta::read(reader)
        .map_err(|e| BenchError::Data(e.to_string()))?
        .iter()
        .map(|r| encode_dna(&r.sequence).map(Sequence::Dna).map_err(|e| BenchError::Data(format!("record {}: {e}", r.id()))))
        .collect()
}
