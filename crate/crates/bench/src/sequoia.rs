//! Vector data in the benchmark's line formats: synthesis, writing and
//! loading.
//!
//! points    `id<TAB>name<TAB>x<TAB>y`
//! polygons  `id<TAB>landuse<TAB>n<TAB>x1 y1 ... xn yn[<TAB>H m x1 y1 ... xm ym]*`
//! graphs    `id<TAB>n<TAB>x1 y1 ... xn yn`

use crate::schema::SEQUOIA_SCHEMA;
use crate::BenchError;
use biodb::catalog::parse_schema;
use biodb::geom::{self, Geometry, Point, Polygon, Polyline};
use biodb::store::{Database, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const LANDUSES: [&str; 6] = ["forest", "park", "urban", "water", "farm", "scrub"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequoiaConfig {
    pub seed: u64,
    pub points: usize,
    pub polygons: usize,
    pub graphs: usize,
    /// Side of the square world the data lies in.
    pub world: f64,
    /// Share of polygons with a hole.
    pub hole_rate: f64,
    /// Share of points placed at a polygon center (inside its hole if any).
    pub centered_points: f64,
}

impl Default for SequoiaConfig {
    fn default() -> Self {
        SequoiaConfig { seed: 2000, points: 6000, polygons: 6000, graphs: 12_000, world: 10_000.0, hole_rate: 0.3, centered_points: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SequoiaCounts {
    pub points: usize,
    pub polygons: usize,
    pub graphs: usize,
}

fn coords(out: &mut String, pts: &[Point]) {
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{} {}", p.x, p.y);
    }
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y).expect("generated coordinates are finite")
}

/// Star-shaped ring around `(cx, cy)`. Radii stay within `[r, 1.5 r]` and
/// angular gaps below a third of a turn, so the disk of radius `r / 2`
/// lies inside it.
fn star(rng: &mut ChaCha8Rng, cx: f64, cy: f64, r: f64) -> Vec<Point> {
    let n = rng.gen_range(5..=10);
    let step = TAU / n as f64;
    (0..n)
        .map(|k| {
            let a = step * (k as f64 + rng.gen_range(-0.2..0.2));
            let rr = r * rng.gen_range(1.0..1.5);
            pt(cx + rr * a.cos(), cy + rr * a.sin())
        })
        .collect()
}

/// Writes `points.tsv`, `polygons.tsv` and `graphs.tsv` into `dir`.
pub fn write_files(dir: &Path, cfg: &SequoiaConfig) -> Result<(), BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = cfg.world;
    let mut centers = Vec::with_capacity(cfg.polygons);
    let mut polys = String::new();
    for id in 0..cfg.polygons {
        let r = rng.gen_range(10.0..80.0);
        let (cx, cy) = (rng.gen_range(100.0..w - 100.0), rng.gen_range(100.0..w - 100.0));
        centers.push((cx, cy));
        let ring = star(&mut rng, cx, cy, r);
        let landuse = LANDUSES[rng.gen_range(0..LANDUSES.len())];
        let _ = write!(polys, "{id}\t{landuse}\t{}\t", ring.len());
        coords(&mut polys, &ring);
        if rng.gen_bool(cfg.hole_rate) {
            let h = r * rng.gen_range(0.15..0.3);
            let hole = [pt(cx - h, cy - h), pt(cx + h, cy - h), pt(cx + h, cy + h), pt(cx - h, cy + h)];
            polys.push_str("\tH 4 ");
            coords(&mut polys, &hole);
        }
        polys.push('\n');
    }
    let mut points = String::new();
    for id in 0..cfg.points {
        let (x, y) = if !centers.is_empty() && rng.gen_bool(cfg.centered_points) {
            let (cx, cy) = centers[rng.gen_range(0..centers.len())];
            (cx + rng.gen_range(-5.0..5.0), cy + rng.gen_range(-5.0..5.0))
        } else {
            (rng.gen_range(0.0..w), rng.gen_range(0.0..w))
        };
        let _ = writeln!(points, "{id}\tsite-{id}\t{x}\t{y}");
    }
    let mut graphs = String::new();
    for id in 0..cfg.graphs {
        let n = rng.gen_range(2..=8);
        let mut p = pt(rng.gen_range(0.0..w), rng.gen_range(0.0..w));
        let mut path = vec![p];
        while path.len() < n {
            let a = rng.gen_range(0.0..TAU);
            let d = rng.gen_range(5.0..50.0);
            p = pt((p.x + d * a.cos()).clamp(0.0, w), (p.y + d * a.sin()).clamp(0.0, w));
            if !path.last().is_some_and(|q| q.dist(&p) < 1e-6) {
                path.push(p);
            }
        }
        let _ = write!(graphs, "{id}\t{n}\t");
        coords(&mut graphs, &path);
        graphs.push('\n');
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join("points.tsv"), points)?;
    fs::write(dir.join("polygons.tsv"), polys)?;
    fs::write(dir.join("graphs.tsv"), graphs)?;
    Ok(())
}

struct LineCtx<'a> {
    file: &'a str,
    line: usize,
}

impl LineCtx<'_> {
    fn err(&self, msg: impl Into<String>) -> BenchError {
        BenchError::Parse { file: self.file.to_string(), line: self.line, msg: msg.into() }
    }

    fn num<T: std::str::FromStr>(&self, s: Option<&str>, what: &str) -> Result<T, BenchError> {
        let s = s.ok_or_else(|| self.err(format!("missing {what}")))?;
        s.trim().parse().map_err(|_| self.err(format!("bad {what} {s:?}")))
    }

    /// Parses `n` coordinate pairs from whitespace-separated tokens.
    fn points<'t>(&self, toks: &mut impl Iterator<Item = &'t str>, n: usize) -> Result<Vec<Point>, BenchError> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let x: f64 = self.num(toks.next(), &format!("x of vertex {}", i + 1))?;
            let y: f64 = self.num(toks.next(), &format!("y of vertex {}", i + 1))?;
            out.push(Point::new(x, y).map_err(|e| self.err(e.to_string()))?);
        }
        if toks.next().is_some() {
            return Err(self.err(format!("more than the declared {n} vertices")));
        }
        Ok(out)
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))).filter(|(_, l)| !l.trim().is_empty())
}

pub fn parse_point_line(file: &str, line: usize, l: &str) -> Result<(i64, String, Point), BenchError> {
    let c = LineCtx { file, line };
    let f: Vec<&str> = l.split('\t').collect();
    if f.len() != 4 {
        return Err(c.err(format!("expected 4 tab-separated fields, found {}", f.len())));
    }
    let p = Point::new(c.num(Some(f[2]), "x")?, c.num(Some(f[3]), "y")?).map_err(|e| c.err(e.to_string()))?;
    Ok((c.num(Some(f[0]), "id")?, f[1].to_string(), p))
}

pub fn parse_polygon_line(file: &str, line: usize, l: &str) -> Result<(i64, String, Polygon), BenchError> {
    let c = LineCtx { file, line };
    let f: Vec<&str> = l.split('\t').collect();
    if f.len() < 4 {
        return Err(c.err(format!("expected at least 4 tab-separated fields, found {}", f.len())));
    }
    let n: usize = c.num(Some(f[2]), "vertex count")?;
    let outer = c.points(&mut f[3].split_whitespace(), n)?;
    let mut holes = Vec::new();
    for h in &f[4..] {
        let mut toks = h.split_whitespace();
        if toks.next() != Some("H") {
            return Err(c.err("hole section must start with H"));
        }
        let m: usize = c.num(toks.next(), "hole vertex count")?;
        holes.push(c.points(&mut toks, m)?);
    }
    let poly = Polygon::new(outer, holes).map_err(|e| c.err(e.to_string()))?;
    Ok((c.num(Some(f[0]), "id")?, f[1].to_string(), poly))
}

pub fn parse_graph_line(file: &str, line: usize, l: &str) -> Result<(i64, Polyline), BenchError> {
    let c = LineCtx { file, line };
    let f: Vec<&str> = l.split('\t').collect();
    if f.len() != 3 {
        return Err(c.err(format!("expected 3 tab-separated fields, found {}", f.len())));
    }
    let n: usize = c.num(Some(f[1]), "vertex count")?;
    let path = Polyline::new(c.points(&mut f[2].split_whitespace(), n)?).map_err(|e| c.err(e.to_string()))?;
    Ok((c.num(Some(f[0]), "id")?, path))
}

fn read(path: &Path) -> Result<(String, String), BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Parse { file: path.display().to_string(), line: 0, msg: e.to_string() })?;
    Ok((path.display().to_string(), text))
}

/// Loads the three files into `db`, adding the vector schema when the
/// database has none. Every file is parsed before anything is inserted.
pub fn load_sequoia(db: &mut Database, points: &Path, polygons: &Path, graphs: &Path) -> Result<SequoiaCounts, BenchError> {
    let (pf, pt) = read(points)?;
    let (lf, lt) = read(polygons)?;
    let (gf, gt) = read(graphs)?;
    let pts = lines(&pt).map(|(n, l)| parse_point_line(&pf, n, l)).collect::<Result<Vec<_>, _>>()?;
    let polys = lines(&lt).map(|(n, l)| parse_polygon_line(&lf, n, l)).collect::<Result<Vec<_>, _>>()?;
    let grs = lines(&gt).map(|(n, l)| parse_graph_line(&gf, n, l)).collect::<Result<Vec<_>, _>>()?;
    if db.catalog().class_id("SitePoint").is_none() {
        db.load_schema(parse_schema(SEQUOIA_SCHEMA).expect("bundled schema parses"))?;
    }
    let counts = SequoiaCounts { points: pts.len(), polygons: polys.len(), graphs: grs.len() };
    for (id, name, p) in pts {
        db.insert_object("SitePoint", &[("id", Value::Int(id)), ("name", Value::Str(name)), ("location", Value::Geom(Geometry::Point(p)))])?;
    }
    for (id, landuse, poly) in polys {
        let area = geom::area(&poly);
        db.insert_object(
            "LandPolygon",
            &[("id", Value::Int(id)), ("landuse", Value::Str(landuse)), ("shape", Value::Geom(Geometry::Polygon(poly))), ("area", Value::Real(area))],
        )?;
    }
    for (id, path) in grs {
        db.insert_object("Graph", &[("id", Value::Int(id)), ("path", Value::Geom(Geometry::Polyline(path)))])?;
    }
    Ok(counts)
}
