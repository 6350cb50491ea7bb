//! Rendering of result rows: tab-separated lines, JSON records and an
//! aligned text table.

use super::exec::Cell;
use serde_json::{json, Map, Value as Json};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

pub fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Null => "null".into(),
        Cell::Bool(b) => b.to_string(),
        Cell::Int(i) => i.to_string(),
        Cell::Real(r) => format!("{r:?}"),
        Cell::Str(s) => escape(s),
        Cell::Geom(g) => g.to_string(),
        Cell::Seq(s) => s.clone(),
        Cell::Oid(o) => o.to_string(),
        Cell::List(xs) => format!("[{}]", xs.iter().map(cell_text).collect::<Vec<_>>().join(", ")),
    }
}

/// One row as a tab-separated line; equal rows give equal lines.
pub fn tsv_line(cells: &[Cell]) -> String {
    cells.iter().map(cell_text).collect::<Vec<_>>().join("\t")
}

pub fn cell_json(c: &Cell) -> Json {
    match c {
        Cell::Null => Json::Null,
        Cell::Bool(b) => json!(b),
        Cell::Int(i) => json!(i),
        Cell::Real(r) => json!(r),
        Cell::Str(s) | Cell::Seq(s) => json!(s),
        Cell::Geom(g) => json!(g.to_string()),
        Cell::Oid(o) => json!(o.to_string()),
        Cell::List(xs) => Json::Array(xs.iter().map(cell_json).collect()),
    }
}

/// A row as a JSON object keyed by column name.
pub fn json_record(columns: &[String], cells: &[Cell]) -> String {
    let mut m = Map::new();
    for (c, v) in columns.iter().zip(cells) {
        m.insert(c.clone(), cell_json(v));
    }
    Json::Object(m).to_string()
}

pub fn table(columns: &[String], rows: &[Vec<Cell>]) -> String {
    let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(cell_text).collect()).collect();
    let mut width: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for r in &text {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = line(columns);
    out.push('\n');
    out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for r in &text {
        out.push_str(&line(r));
        out.push('\n');
    }
    out.push_str(&format!("({} row{})\n", rows.len(), if rows.len() == 1 { "" } else { "s" }));
    out
}
