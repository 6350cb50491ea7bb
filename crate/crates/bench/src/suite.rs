//! Benchmark query suites and their runner.

use crate::configs::{apply, IndexConfig};
use crate::report::{BenchReport, Entry};
use crate::BenchError;
use biodb::query::{format::tsv_line, summary, Mode, QueryOptions, Session};
use biodb::store::Database;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub const TQ1: &str = "select s.name from m in PlantSpecies, s in PlantSpecies where m.name = \"Magnolia-champa\" and s.flowerchar.inflochar = m.flowerchar.inflochar";
pub const GQ1: &str = "select e.accession, e.dna from m in PlantSpecies, e in m.stDNAEntries where m.name = \"Magnolia-champa\"";
pub const GQ2: &str = "select distinct s.name from m in PlantSpecies, me in m.stDNAEntries, s in PlantSpecies, se in s.stDNAEntries where m.name = \"Magnolia-champa\" and se in me.dna.blast(70)";
pub const MDQ1: &str = "select s.name from m in PlantSpecies, s in PlantSpecies where m.name = \"Magnolia-champa\" and s.flowerchar.inflochar = m.flowerchar.inflochar and s.georegion overlaps m.georegion";
/// As printed, including its line breaks and trailing semicolon.
pub const MDQ2: &str = "select * from species1 in PlantSpecies, 
              species2 in PlantSpecies,
              embl1 in species1.stDNAEntries, 
              embl2 in species2.stDNAEntries 
        where
              species1.flowerchar.inflochar = species2.flowerchar.inflochar
              and
              species1.georegion overlaps species2.georegion
              and
              embl1 in embl2.dna.blast(80);";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    Bio,
    Sequoia,
    Paradise,
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "bio" => Ok(Suite::Bio),
            "sequoia" => Ok(Suite::Sequoia),
            "paradise" => Ok(Suite::Paradise),
            _ => Err(BenchError::Config(format!("unknown suite {s:?} (expected bio, sequoia or paradise)"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Bio => "bio",
            Suite::Sequoia => "sequoia",
            Suite::Paradise => "paradise",
        })
    }
}

/// Constants the vector queries are instantiated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteParams {
    /// Point whose name the name lookup asks for.
    pub name_id: i64,
    pub window: [f64; 4],
    pub min_area: f64,
    pub area_window: [f64; 4],
    /// Points probed by the box join.
    pub box_points: i64,
    pub box_half_width: f64,
    /// Polygons tested by the point-in-polygon join.
    pub minus_polygons: i64,
    pub closest_id: i64,
    /// Points probed by the closest-to-every-point query.
    pub closest_sample: i64,
    /// Graphs joined against the polygons.
    pub join_graphs: i64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            name_id: 4242,
            window: [2000.0, 2000.0, 3000.0, 3000.0],
            min_area: 8000.0,
            area_window: [1000.0, 1000.0, 4000.0, 4000.0],
            box_points: 50,
            box_half_width: 100.0,
            minus_polygons: 600,
            closest_id: 17,
            closest_sample: 200,
            join_graphs: 2000,
        }
    }
}

fn rect(r: &[f64; 4]) -> String {
    format!("rect({:?}, {:?}, {:?}, {:?})", r[0], r[1], r[2], r[3])
}

/// `(name, query text)` in run order.
pub fn queries(suite: Suite, p: &SuiteParams) -> Vec<(&'static str, String)> {
    match suite {
        Suite::Bio => vec![("TQ1", TQ1.into()), ("GQ1", GQ1.into()), ("GQ2", GQ2.into()), ("MDQ1", MDQ1.into()), ("MDQ2", MDQ2.into())],
        Suite::Sequoia => vec![
            ("S5", format!("select p.id, p.location from p in SitePoint where p.name = \"site-{}\"", p.name_id)),
            ("S6", format!("select l.id, l.landuse from l in LandPolygon where l.shape overlaps {}", rect(&p.window))),
            ("S7", format!("select l.id, l.area from l in LandPolygon where l.area > {:?} and l.shape inside {}", p.min_area, rect(&p.area_window))),
            (
                "S8",
                format!(
                    "select p.id, l.id from p in SitePoint, l in LandPolygon where p.id < {} and l.shape overlaps box(p.location, {:?})",
                    p.box_points, p.box_half_width
                ),
            ),
            ("S10", format!("select p.id, l.id from l in LandPolygon, p in SitePoint where l.id < {} and p.location inside l.shape", p.minus_polygons)),
        ],
        Suite::Paradise => vec![
            ("P11", format!("select p.id, closest(Graph.path, p.location) from p in SitePoint where p.id = {}", p.closest_id)),
            ("P12", format!("select p.id, closest(Graph.path, p.location) from p in SitePoint where p.id < {}", p.closest_sample)),
            ("P13", format!("select g.id, l.id from g in Graph, l in LandPolygon where g.id < {} and g.path overlaps l.shape", p.join_graphs)),
        ],
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub verify: bool,
    /// Timed executions per query; the fastest is reported.
    pub repeat: usize,
    pub params: SuiteParams,
    pub query: QueryOptions,
    /// Loader time added to the index build time of the load entry.
    pub load_ms: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { verify: false, repeat: 1, params: SuiteParams::default(), query: QueryOptions::default(), load_ms: None }
    }
}

pub fn multiset(rows: &[Vec<biodb::query::Cell>]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for r in rows {
        *m.entry(tsv_line(r)).or_insert(0) += 1;
    }
    m
}

/// Runs every query of `suite` under each configuration. With `verify`,
/// each result is compared against the naive plan's.
pub fn run_suite(db: &mut Database, suite: Suite, configs: &[IndexConfig], opts: &RunOptions) -> Result<BenchReport, BenchError> {
    let required = match suite {
        Suite::Bio => "PlantSpecies",
        Suite::Sequoia | Suite::Paradise => "SitePoint",
    };
    if db.catalog().class_id(required).is_none() {
        return Err(BenchError::Config(format!("suite {suite} needs class {required}; load its data first")));
    }
    let mut report = BenchReport::default();
    for &config in configs {
        let decls = match suite {
            Suite::Bio => config.bio_indexes(),
            _ => config.vector_indexes(),
        };
        let t = Instant::now();
        apply(db, &decls)?;
        let build_ms = t.elapsed().as_secs_f64() * 1e3;
        if suite == Suite::Sequoia {
            report.entries.push(Entry {
                suite: suite.to_string(),
                name: "S1".into(),
                config: config.to_string(),
                wall_ms: build_ms + opts.load_ms.unwrap_or(0.0),
                rows: 0,
                plan: "load+index".into(),
                verified: None,
            });
        }
        let session = Session::new(db, opts.query.clone());
        for (name, text) in queries(suite, &opts.params) {
            let plan = session.plan(&text, Mode::Optimized)?;
            let mut best = f64::INFINITY;
            let mut rows = Vec::new();
            for _ in 0..opts.repeat.max(1) {
                let t = Instant::now();
                rows = session.execute(&plan)?.rows;
                best = best.min(t.elapsed().as_secs_f64() * 1e3);
            }
            let verified = if opts.verify {
                let naive = session.execute(&session.plan(&text, Mode::Naive)?)?.rows;
                Some(multiset(&naive) == multiset(&rows))
            } else {
                None
            };
            report.entries.push(Entry {
                suite: suite.to_string(),
                name: name.into(),
                config: config.to_string(),
                wall_ms: best,
                rows: rows.len(),
                plan: summary(&plan),
                verified,
            });
        }
    }
    Ok(report)
}
