use crate::config::{CliConfig, Format};
use crate::{BenchArgs, Command, GenArgs, QueryArgs};
use anyhow::{bail, Context, Result};
use biodb::catalog::{parse_schema, AttrType};
use biodb::query::format::{json_record, table, tsv_line};
use biodb::query::{explain, Mode, QueryResult, Session};
use biodb::seq::fasta::{self, FastaRecord};
use biodb::store::{Database, IndexData, Value};
use biodb_bench::configs::parse_configs;
use biodb_bench::fasta::{load_fasta, read_pool};
use biodb_bench::generator::generate;
use biodb_bench::schema::BIO_SCHEMA;
use biodb_bench::sequoia::{load_sequoia, write_files, SequoiaConfig};
use biodb_bench::suite::{run_suite, RunOptions, Suite, SuiteParams};
use std::fs::File;
use std::io::{BufReader, Write};
use std::time::Instant;

pub fn open(cfg: &CliConfig) -> Result<Database> {
    let path = cfg.db_path()?;
    if !path.exists() {
        bail!("database {} does not exist (create it with `biodb init`)", path.display());
    }
    Database::open(path, cfg.store()).with_context(|| format!("opening {}", path.display()))
}

/// Opens the database, applies `f` and flushes the result to disk.
fn update<T>(cfg: &CliConfig, f: impl FnOnce(&mut Database) -> Result<T>) -> Result<T> {
    let mut db = open(cfg)?;
    let out = f(&mut db)?;
    db.close().context("writing the database")?;
    Ok(out)
}

pub fn render(format: Format, r: &QueryResult) -> String {
    match format {
        Format::Table => table(&r.columns, &r.rows),
        Format::Tsv => {
            let mut out = r.columns.join("\t");
            out.push('\n');
            for row in &r.rows {
                out.push_str(&tsv_line(row));
                out.push('\n');
            }
            out
        }
        Format::Records => r.rows.iter().map(|row| json_record(&r.columns, row) + "\n").collect(),
    }
}

fn query_text(a: &QueryArgs) -> Result<String> {
    match (&a.text, &a.file) {
        (Some(t), None) => Ok(t.clone()),
        (None, Some(f)) => std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display())),
        _ => bail!("give the query text or --file"),
    }
}

fn write_out(s: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(s.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.context("writing output"),
    }
}

pub fn run(cmd: Command, cfg: &CliConfig) -> Result<()> {
    match cmd {
        Command::Init { force } => {
            let path = cfg.db_path()?;
            if path.exists() {
                if !force {
                    bail!("{} already exists (use --force to replace it)", path.display());
                }
                std::fs::remove_file(path).with_context(|| format!("removing {}", path.display()))?;
            }
            Database::create(path, cfg.store())?.close()?;
            if cfg.verbose > 0 {
                eprintln!("created {}", path.display());
            }
            Ok(())
        }
        Command::LoadSchema { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let catalog = parse_schema(&text).with_context(|| format!("schema {}", file.display()))?;
            let n = catalog.classes().len();
            update(cfg, |db| Ok(db.load_schema(catalog)?))?;
            write_out(&format!("loaded {n} classes\n"))
        }
        Command::GenData(a) => gen_data(cfg, &a),
        Command::LoadSequoia { points, polygons, graphs } => {
            let t = Instant::now();
            let c = update(cfg, |db| Ok(load_sequoia(db, &points, &polygons, &graphs)?))?;
            if cfg.verbose > 0 {
                eprintln!("loaded in {:.1}s", t.elapsed().as_secs_f64());
            }
            write_out(&format!("points {}\npolygons {}\ngraphs {}\n", c.points, c.polygons, c.graphs))
        }
        Command::GenSequoia { dir, seed, points, polygons, graphs } => {
            let d = SequoiaConfig::default();
            let c = SequoiaConfig {
                seed: seed.unwrap_or(d.seed),
                points: points.unwrap_or(d.points),
                polygons: polygons.unwrap_or(d.polygons),
                graphs: graphs.unwrap_or(d.graphs),
                ..d
            };
            write_files(&dir, &c)?;
            write_out(&format!("wrote points.tsv, polygons.tsv and graphs.tsv to {}\n", dir.display()))
        }
        Command::LoadFasta { file, class, attr, id_attr } => {
            let f = File::open(&file).with_context(|| format!("opening {}", file.display()))?;
            let n = update(cfg, |db| Ok(load_fasta(db, BufReader::new(f), &class, &attr, id_attr.as_deref())?))?;
            write_out(&format!("loaded {n} sequences into {class}.{attr}\n"))
        }
        Command::Query(a) => {
            let text = query_text(&a)?;
            let db = open(cfg)?;
            let s = Session::new(&db, cfg.query.clone());
            let t = Instant::now();
            let plan = s.plan(&text, if a.naive { Mode::Naive } else { Mode::Optimized })?;
            if cfg.verbose > 0 {
                eprint!("{}", explain(&plan));
            }
            let r = s.execute(&plan)?;
            if a.timing || cfg.verbose > 0 {
                eprintln!("{} rows in {:.3} ms", r.rows.len(), t.elapsed().as_secs_f64() * 1e3);
            }
            write_out(&render(cfg.format, &r))
        }
        Command::Explain(a) => {
            let text = query_text(&a)?;
            let db = open(cfg)?;
            let s = Session::new(&db, cfg.query.clone());
            write_out(&explain(&s.plan(&text, if a.naive { Mode::Naive } else { Mode::Optimized })?))
        }
        Command::Repl => {
            let db = open(cfg)?;
            crate::repl::run(&db, cfg)
        }
        Command::Bench(a) => bench(cfg, &a),
        Command::Stats { schema } => {
            let db = open(cfg)?;
            let mut out = db.stats().to_string();
            if schema {
                out.push_str(&db.catalog().to_string());
            }
            write_out(&out)
        }
        Command::DumpIndex { name } => {
            let db = open(cfg)?;
            write_out(&dump_index(&db, &name)?)
        }
        Command::DumpSeq { target, id_attr, limit } => {
            let db = open(cfg)?;
            dump_seq(&db, &target, id_attr.as_deref(), limit)
        }
    }
}

fn gen_data(cfg: &CliConfig, a: &GenArgs) -> Result<()> {
    let mut g = cfg.generator.clone();
    g.seed = a.seed.unwrap_or(g.seed);
    g.orders = a.orders.unwrap_or(g.orders);
    g.branch = (a.branch_min.unwrap_or(g.branch.0), a.branch_max.unwrap_or(g.branch.1));
    g.sequences_per_species = a.sequences_per_species.unwrap_or(g.sequences_per_species);
    g.seq_len = (a.seq_len_min.unwrap_or(g.seq_len.0), a.seq_len_max.unwrap_or(g.seq_len.1));
    if g.motif_len > g.seq_len.0 {
        g.motif_len = g.seq_len.0;
    }
    let pool = match &a.pool {
        Some(p) => read_pool(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))?,
        None => Vec::new(),
    };
    let t = Instant::now();
    let pop = update(cfg, |db| {
        if db.catalog().classes().is_empty() {
            db.load_schema(parse_schema(BIO_SCHEMA).expect("bundled schema parses"))?;
        }
        Ok(generate(db, &g, &pool)?)
    })?;
    if cfg.verbose > 0 {
        eprintln!("generated in {:.1}s", t.elapsed().as_secs_f64());
    }
    write_out(&format!(
        "Order {}\nFamily {}\nGenera {}\nPlantSpecies {}\nFlowerChar {}\nHabitat {}\nInfloChar {}\nEMBLEntry {}\nbases {}\n",
        pop.orders, pop.families, pop.genera, pop.species, pop.flowerchars, pop.habitats, pop.inflochars, pop.entries, pop.bases
    ))
}

fn bench(cfg: &CliConfig, a: &BenchArgs) -> Result<()> {
    let suite: Suite = a.suite.parse()?;
    let configs = parse_configs(&a.configs)?;
    if configs.is_empty() {
        bail!("no index configurations given");
    }
    let mut params = SuiteParams::default();
    if a.full {
        params.closest_sample = i64::MAX;
    }
    let opts = RunOptions { verify: a.verify, repeat: a.repeat.max(1), params, query: cfg.query.clone(), load_ms: None };
    // Index changes made for each configuration stay in memory; the file is
    // left as it was.
    let mut db = open(cfg)?;
    let report = run_suite(&mut db, suite, &configs, &opts)?;
    write_out(&if a.json { report.json_lines() } else { report.table() })?;
    if !report.all_verified() {
        let bad: Vec<String> =
            report.entries.iter().filter(|e| e.verified == Some(false)).map(|e| format!("{} under {}", e.name, e.config)).collect();
        bail!("verification failed: {}", bad.join(", "));
    }
    Ok(())
}

fn dump_index(db: &Database, name: &str) -> Result<String> {
    let Some(ix) = db.index(name) else {
        let known: Vec<&str> = db.indexes().keys().map(String::as_str).collect();
        bail!("no index {name:?} (have: {})", if known.is_empty() { "none".to_string() } else { known.join(", ") });
    };
    Ok(match ix {
        IndexData::Btree(b) => {
            let objs = db.objects();
            let mut out = String::new();
            for (_, oid) in b.entries() {
                let v = objs.get(*oid).map(|r| r.fields[b.attr_pos()].to_string()).unwrap_or_else(|_| "?".into());
                out.push_str(&format!("{v}\t{oid}\n"));
            }
            out
        }
        IndexData::Spatial(s) => s.tree().dump(),
        IndexData::Mt(m) => m.tree().dump(),
        IndexData::PathDict(p) => p.dump(),
    })
}

fn dump_seq(db: &Database, target: &str, id_attr: Option<&str>, limit: Option<usize>) -> Result<()> {
    let Some((class, attr)) = target.split_once('.') else { bail!("expected Class.attr, got {target:?}") };
    let cat = db.catalog();
    let cid = cat.class_id(class).with_context(|| format!("unknown class {class}"))?;
    match cat.attr(cid, attr) {
        Some((_, AttrType::Dna | AttrType::Protein)) => {}
        Some((_, t)) => bail!("{class}.{attr} is {t}, not a sequence"),
        None => bail!("class {class} has no attribute {attr}"),
    }
    let mut records = Vec::new();
    for (oid, _) in db.scan_extent(class, true)?.take(limit.unwrap_or(usize::MAX)) {
        let Value::Seq(sid) = db.objects().field(oid, attr)? else { continue };
        let id = match id_attr {
            Some(a) => db.objects().field(oid, a)?.to_string(),
            None => oid.to_string(),
        };
        records.push(FastaRecord { header: id, sequence: db.sequence(*sid)?.decode() });
    }
    let mut out = Vec::new();
    fasta::write(&mut out, &records)?;
    write_out(&String::from_utf8(out).expect("fasta output is ascii"))
}
