//! Line-edited query prompt. A statement runs when a line ends with `;`
//! or an empty line follows it; backslash commands run at once.

use crate::commands::render;
use crate::config::{CliConfig, Format};
use anyhow::Result;
use biodb::query::{explain, Mode, Session};
use biodb::store::Database;
use rustyline::error::ReadlineError;
use rustyline::DefaultEditor;
use std::time::Instant;

const HELP: &str = "\
statements end with ';' or a blank line
\\explain          toggle printing the plan before results
\\timing           toggle elapsed-time reports
\\naive            toggle naive evaluation
\\format NAME      table, tsv or records
\\stats            extent and index sizes
\\help             this text
\\q                quit
";

struct State {
    explain: bool,
    timing: bool,
    naive: bool,
    format: Format,
}

/// Result of a backslash command: keep going or stop.
fn meta(cmd: &str, st: &mut State, db: &Database) -> bool {
    let mut parts = cmd.split_whitespace();
    let onoff = |b: bool| if b { "on" } else { "off" };
    match parts.next().unwrap_or("") {
        "\\q" | "\\quit" => return false,
        "\\explain" => {
            st.explain = !st.explain;
            println!("explain is {}", onoff(st.explain));
        }
        "\\timing" => {
            st.timing = !st.timing;
            println!("timing is {}", onoff(st.timing));
        }
        "\\naive" => {
            st.naive = !st.naive;
            println!("naive evaluation is {}", onoff(st.naive));
        }
        "\\format" => match parts.next().map(str::parse::<Format>) {
            Some(Ok(f)) => st.format = f,
            Some(Err(e)) => eprintln!("error: {e}"),
            None => eprintln!("error: \\format needs table, tsv or records"),
        },
        "\\stats" => print!("{}", db.stats()),
        "\\help" | "\\?" => print!("{HELP}"),
        other => eprintln!("error: unknown command {other} (try \\help)"),
    }
    true
}

fn statement(s: &Session, text: &str, st: &State) {
    let t = Instant::now();
    let run = || -> Result<()> {
        let plan = s.plan(text, if st.naive { Mode::Naive } else { Mode::Optimized })?;
        if st.explain {
            print!("{}", explain(&plan));
        }
        let r = s.execute(&plan)?;
        print!("{}", render(st.format, &r));
        if st.timing {
            println!("time: {:.3} ms", t.elapsed().as_secs_f64() * 1e3);
        }
        Ok(())
    };
    if let Err(e) = run() {
        eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
    }
}

pub fn run(db: &Database, cfg: &CliConfig) -> Result<()> {
    let session = Session::new(db, cfg.query.clone());
    let mut st = State { explain: false, timing: false, naive: false, format: cfg.format };
    let mut ed = DefaultEditor::new()?;
    let mut buf = String::new();
    loop {
        let prompt = if buf.is_empty() { "biodb> " } else { "  ...> " };
        let line = match ed.readline(prompt) {
            Ok(l) => l,
            Err(ReadlineError::Interrupted) => {
                buf.clear();
                continue;
            }
            Err(ReadlineError::Eof) => break,
            Err(e) => return Err(e.into()),
        };
        let trimmed = line.trim();
        if buf.is_empty() && trimmed.starts_with('\\') {
            let _ = ed.add_history_entry(trimmed);
            if !meta(trimmed, &mut st, db) {
                return Ok(());
            }
            continue;
        }
        if trimmed.is_empty() && buf.trim().is_empty() {
            continue;
        }
        if !trimmed.is_empty() {
            if !buf.is_empty() {
                buf.push('\n');
            }
            buf.push_str(&line);
        }
        if trimmed.is_empty() || trimmed.ends_with(';') {
            let _ = ed.add_history_entry(buf.as_str());
            statement(&session, &buf, &st);
            buf.clear();
        }
    }
    if !buf.trim().is_empty() {
        statement(&session, &buf, &st);
    }
    Ok(())
}
