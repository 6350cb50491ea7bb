//! FASTA reading and writing (60 residues per output line).

use super::SeqError;
use std::io::{BufRead, Write};

pub const LINE_WIDTH: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    /// Header text after `>`, trimmed.
    pub header: String,
    pub sequence: String,
}

impl FastaRecord {
    /// First whitespace-separated word of the header.
    pub fn id(&self) -> &str {
        self.header.split_whitespace().next().unwrap_or("")
    }
}

pub fn read<R: BufRead>(reader: R) -> Result<Vec<FastaRecord>, SeqError> {
    let mut out: Vec<FastaRecord> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SeqError::Fasta(n + 1, e.to_string()))?;
        let line = line.trim_end();
        if let Some(h) = line.strip_prefix('>') {
            out.push(FastaRecord { header: h.trim().to_string(), sequence: String::new() });
        } else if line.is_empty() || line.starts_with(';') {
            continue;
        } else {
            let rec = out.last_mut().ok_or_else(|| SeqError::Fasta(n + 1, "sequence before first header".into()))?;
            rec.sequence.extend(line.chars().filter(|c| !c.is_whitespace()));
        }
    }
    Ok(out)
}

pub fn write<W: Write>(mut w: W, records: &[FastaRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, ">{}", r.header)?;
        let bytes = r.sequence.as_bytes();
        for chunk in bytes.chunks(LINE_WIDTH) {
            w.write_all(chunk)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}
