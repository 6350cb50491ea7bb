//! Benchmark results as a human table and as JSON lines.

use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub suite: String,
    pub name: String,
    pub config: String,
    pub wall_ms: f64,
    pub rows: usize,
    pub plan: String,
    /// Set in verification runs: whether the naive plan agreed.
    pub verified: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub entries: Vec<Entry>,
}

impl BenchReport {
    pub fn get(&self, name: &str, config: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name && e.config == config)
    }

    pub fn all_verified(&self) -> bool {
        self.entries.iter().all(|e| e.verified != Some(false))
    }

    pub fn json_lines(&self) -> String {
        self.entries.iter().map(|e| serde_json::to_string(e).expect("entries serialize") + "\n").collect()
    }

    /// One row per query, one time column per configuration.
    pub fn table(&self) -> String {
        let mut configs: Vec<&str> = Vec::new();
        let mut names: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !configs.contains(&e.config.as_str()) {
                configs.push(&e.config);
            }
            if !names.contains(&e.name.as_str()) {
                names.push(&e.name);
            }
        }
        let mut out = format!("{:<8}", "query");
        for c in &configs {
            let _ = write!(out, " {:>16}", format!("{c} ms"));
        }
        let _ = writeln!(out, " {:>8}  verify", "rows");
        for n in names {
            let _ = write!(out, "{n:<8}");
            let mut rows = BTreeSet::new();
            let mut verdict = "-";
            for c in &configs {
                match self.get(n, c) {
                    Some(e) => {
                        let _ = write!(out, " {:>16.3}", e.wall_ms);
                        rows.insert(e.rows);
                        match e.verified {
                            Some(false) => verdict = "FAIL",
                            Some(true) if verdict != "FAIL" => verdict = "PASS",
                            _ => {}
                        }
                    }
                    None => {
                        let _ = write!(out, " {:>16}", "-");
                    }
                }
            }
            let rows = rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("/");
            let _ = writeln!(out, " {rows:>8}  {verdict}");
        }
        out
    }
}
