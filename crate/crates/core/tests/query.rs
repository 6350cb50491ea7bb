use biodb::catalog::{parse_schema, IndexDecl, IndexKind};
use biodb::geom::{self, Geometry, Point, Polygon};
use biodb::query::{explain, parse_query, typecheck, Mode, QueryError, QueryOptions, Session};
use biodb::seq::{encode_dna, sw_score, ScoringScheme, Sequence};
use biodb::store::{Database, Value};
use biodb::Oid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const SCHEMA: &str = "
class Order { name: string; families: collection(ref(Family)); }
class Family { name: string; genera: collection(ref(Genera)); }
class Genera { name: string; species: collection(ref(PlantSpecies)); }
class PlantSpecies {
  name: string; georegion: polygon; habitats: collection(ref(Habitat));
  flowerchar: ref(FlowerChar); stDNAEntries: collection(ref(EMBLEntry));
}
class FlowerChar { color: string; inflochar: ref(InfloChar); }
class InfloChar { kind: string; }
class Habitat { region: polygon; }
class EMBLEntry { accession: string; dna: dna; }
cost polygon.area = 5 equiv area;
cost polygon.area_fan = 2 equiv area;
";

const TQ1: &str = "select s.name from m in PlantSpecies, s in PlantSpecies where m.name = \"Magnolia-champa\" and s.flowerchar.inflochar = m.flowerchar.inflochar";
const GQ1: &str = "select e.accession, e.dna from m in PlantSpecies, e in m.stDNAEntries where m.name = \"Magnolia-champa\"";
const GQ2: &str = "select distinct s.name from m in PlantSpecies, me in m.stDNAEntries, s in PlantSpecies, se in s.stDNAEntries where m.name = \"Magnolia-champa\" and se in me.dna.blast(70)";
const MDQ1: &str = "select s.name from m in PlantSpecies, s in PlantSpecies where m.name = \"Magnolia-champa\" and s.flowerchar.inflochar = m.flowerchar.inflochar and s.georegion overlaps m.georegion";
const MDQ2: &str = "select * from species1 in PlantSpecies,
              species2 in PlantSpecies,
              embl1 in species1.stDNAEntries,
              embl2 in species2.stDNAEntries
        where
              species1.flowerchar.inflochar = species2.flowerchar.inflochar
              and
              species1.georegion overlaps species2.georegion
              and
              embl1 in embl2.dna.blast(80);";

fn rect_poly(x: f64, y: f64, w: f64, h: f64) -> Value {
    let pts = vec![Point::new(x, y).unwrap(), Point::new(x + w, y).unwrap(), Point::new(x + w, y + h).unwrap(), Point::new(x, y + h).unwrap()];
    Value::Geom(Geometry::Polygon(Polygon::new(pts, vec![]).unwrap()))
}

fn dna(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| b"ACGT"[rng.gen_range(0..4)] as char).collect()
}

/// Small taxonomy with shared flower characteristics, overlapping regions
/// and a few near-duplicate sequences so blast finds cross-species hits.
fn build(seed: u64, species: usize) -> Database {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = Database::in_memory();
    db.load_schema(parse_schema(SCHEMA).unwrap()).unwrap();
    let inflo: Vec<Oid> = (0..3).map(|i| db.insert_object("InfloChar", &[("kind", Value::Str(format!("k{i}")))]).unwrap()).collect();
    let mut fcs: Vec<Oid> = (0..6)
        .map(|i| {
            db.insert_object("FlowerChar", &[("color", Value::Str(format!("c{i}"))), ("inflochar", Value::Ref(inflo[i % 3]))]).unwrap()
        })
        .collect();
    // One characteristic with no inflorescence exercises null chains.
    fcs.push(db.insert_object("FlowerChar", &[("color", Value::Str("bare".into()))]).unwrap());
    let mut motifs: Vec<String> = (0..4).map(|_| dna(&mut rng, 120)).collect();
    motifs.push(dna(&mut rng, 40));
    let mut sp = Vec::new();
    for i in 0..species {
        let name = if i == species / 2 { "Magnolia-champa".to_string() } else { format!("sp{i}") };
        let mut entries = Vec::new();
        for j in 0..rng.gen_range(0..4) {
            let text = if rng.gen_bool(0.5) {
                let m = &motifs[rng.gen_range(0..motifs.len())];
                format!("{}{m}{}", dna(&mut rng, 10), dna(&mut rng, 10))
            } else {
                let n = rng.gen_range(30..150);
                dna(&mut rng, n)
            };
            let s = db.put_sequence(Sequence::Dna(encode_dna(&text).unwrap()));
            entries.push(Value::Ref(
                db.insert_object("EMBLEntry", &[("accession", Value::Str(format!("E{i}_{j}"))), ("dna", Value::Seq(s))]).unwrap(),
            ));
        }
        if !entries.is_empty() && rng.gen_bool(0.1) {
            // Duplicate collection members keep their multiplicity.
            entries.push(entries[0].clone());
        }
        let mut fields = vec![
            ("name", Value::Str(name)),
            ("georegion", rect_poly(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0), rng.gen_range(1.0..30.0), rng.gen_range(1.0..30.0))),
            ("stDNAEntries", Value::List(entries)),
        ];
        if !rng.gen_bool(0.05) {
            fields.push(("flowerchar", Value::Ref(fcs[rng.gen_range(0..fcs.len())])));
        }
        sp.push(db.insert_object("PlantSpecies", &fields).unwrap());
    }
    let g = db.insert_object("Genera", &[("name", Value::Str("G".into())), ("species", Value::List(sp.iter().map(|o| Value::Ref(*o)).collect()))]).unwrap();
    let f = db.insert_object("Family", &[("name", Value::Str("F".into())), ("genera", Value::List(vec![Value::Ref(g)]))]).unwrap();
    db.insert_object("Order", &[("name", Value::Str("O".into())), ("families", Value::List(vec![Value::Ref(f)]))]).unwrap();
    db
}

fn pathdict(db: &mut Database) {
    db.create_index(IndexDecl::new(IndexKind::Btree, "PlantSpecies", &["name"])).unwrap();
    db.create_index(IndexDecl::new(IndexKind::PathDict, "PlantSpecies", &["flowerchar", "inflochar"])).unwrap();
    db.create_index(IndexDecl::new(IndexKind::PathDict, "PlantSpecies", &["stDNAEntries"])).unwrap();
}

fn configs(seed: u64, species: usize) -> Vec<(&'static str, Database)> {
    let none = build(seed, species);
    let mut pd = build(seed, species);
    pathdict(&mut pd);
    let mut rt = build(seed, species);
    pathdict(&mut rt);
    rt.create_index(IndexDecl::new(IndexKind::Rtree, "PlantSpecies", &["georegion"])).unwrap();
    let mut hb = build(seed, species);
    pathdict(&mut hb);
    hb.create_index(IndexDecl::new(IndexKind::Hilbert, "PlantSpecies", &["georegion"])).unwrap();
    vec![("none", none), ("pathdict", pd), ("pathdict+rtree", rt), ("hilbert", hb)]
}

fn multiset(s: &Session, q: &str, mode: Mode) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for r in s.run(q, mode).unwrap_or_else(|e| panic!("{q}: {e}")).rows {
        *m.entry(biodb::query::format::tsv_line(&r)).or_insert(0) += 1;
    }
    m
}

fn str_field(db: &Database, o: Oid, a: &str) -> String {
    match db.objects().field(o, a).unwrap() {
        Value::Str(s) => s.clone(),
        v => panic!("{a} is {v:?}"),
    }
}

fn inflo_of(db: &Database, s: Oid) -> Option<Oid> {
    let Value::Ref(fc) = db.objects().field(s, "flowerchar").unwrap() else { return None };
    match db.objects().field(*fc, "inflochar").unwrap() {
        Value::Ref(i) => Some(*i),
        _ => None,
    }
}

fn region(db: &Database, s: Oid) -> Geometry {
    match db.objects().field(s, "georegion").unwrap() {
        Value::Geom(g) => g.clone(),
        v => panic!("{v:?}"),
    }
}

/// Direct evaluation of TQ1 (and MDQ1 when `spatial`) over the object
/// store, without the query engine.
fn tq1_oracle(db: &Database, spatial: bool) -> BTreeMap<String, usize> {
    let cid = db.catalog().class_id("PlantSpecies").unwrap();
    let all: Vec<Oid> = db.objects().scan(cid, true).map(|(o, _)| o).collect();
    let mut out = BTreeMap::new();
    for &m in all.iter().filter(|m| str_field(db, **m, "name") == "Magnolia-champa") {
        for &s in &all {
            let same = matches!((inflo_of(db, s), inflo_of(db, m)), (Some(a), Some(b)) if a == b);
            if same && (!spatial || geom::overlaps(&region(db, s), &region(db, m))) {
                *out.entry(str_field(db, s, "name")).or_insert(0) += 1;
            }
        }
    }
    out
}

#[test]
fn mdq2_text_parses_with_four_bindings_and_three_conjuncts() {
    let ast = parse_query(MDQ2).unwrap();
    assert_eq!(ast.from.len(), 4);
    assert_eq!(ast.filter.as_ref().unwrap().conjuncts().len(), 3);
    let again = parse_query(&ast.to_string()).unwrap();
    assert_eq!(again, ast);
}

#[test]
fn type_errors_name_the_expression() {
    let db = build(1, 5);
    let cat = db.catalog();
    let bad = [
        ("select s.name from s in PlantSpecies where s.name = 3", "Type"),
        ("select s.name from s in PlantSpecies where s.georegion overlaps s.name", "Type"),
        ("select s.nope from s in PlantSpecies", "Unknown"),
        ("select s.name from s in Nothing", "Unknown"),
        ("select s.name from s in PlantSpecies where s.name.blast(70) = 1", "Type"),
        ("select e.name from s in PlantSpecies, e in s.name", "Type"),
    ];
    for (q, kind) in bad {
        let err = typecheck(&parse_query(q).unwrap(), cat).unwrap_err();
        let ok = matches!((&err, kind), (QueryError::Type(_), "Type") | (QueryError::Unknown(_), "Unknown"));
        assert!(ok, "{q}: {err}");
    }
    let err = parse_query("select from").unwrap_err();
    assert!(matches!(err, QueryError::Syntax { line: 1, .. }), "{err}");
}

#[test]
fn bench_queries_match_oracles_in_every_config() {
    for (name, db) in configs(7, 60) {
        let s = Session::new(&db, QueryOptions::default());
        assert_eq!(multiset(&s, TQ1, Mode::Optimized), tq1_oracle(&db, false), "TQ1 {name}");
        assert_eq!(multiset(&s, MDQ1, Mode::Optimized), tq1_oracle(&db, true), "MDQ1 {name}");
        for q in [TQ1, GQ1, GQ2, MDQ1, MDQ2] {
            assert_eq!(multiset(&s, q, Mode::Naive), multiset(&s, q, Mode::Optimized), "{name}: {q}\n{}", explain(&s.plan(q, Mode::Optimized).unwrap()));
        }
    }
}

#[test]
fn gq2_hits_are_true_alignments() {
    let db = build(11, 40);
    let s = Session::new(&db, QueryOptions::default());
    let names: Vec<String> = s.run(GQ2, Mode::Optimized).unwrap().rows.iter().map(|r| biodb::query::format::tsv_line(r)).collect();
    let cid = db.catalog().class_id("PlantSpecies").unwrap();
    let seqs = |o: Oid| -> Vec<&Sequence> {
        db.objects()
            .field(o, "stDNAEntries")
            .unwrap()
            .refs()
            .into_iter()
            .map(|e| match db.objects().field(e, "dna").unwrap() {
                Value::Seq(id) => db.sequence(*id).unwrap(),
                v => panic!("{v:?}"),
            })
            .collect()
    };
    let m = db.objects().scan(cid, true).find(|(o, _)| str_field(&db, *o, "name") == "Magnolia-champa").unwrap().0;
    let sch = ScoringScheme::default_dna();
    for (o, _) in db.objects().scan(cid, true) {
        let n = str_field(&db, o, "name");
        if names.contains(&n) {
            let best = seqs(m).iter().flat_map(|q| seqs(o).into_iter().map(|t| sw_score(q, t, &sch).unwrap().score)).max();
            assert!(best.unwrap_or(0) >= 70, "{n} reported without a qualifying alignment");
        }
    }
}

#[test]
fn optimized_plans_use_the_expected_access_paths() {
    let mut dbs = configs(3, 30);
    let (_, rt) = &dbs[2];
    let s = Session::new(rt, QueryOptions::default());
    let text = explain(&s.plan(MDQ1, Mode::Optimized).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    let btree = lines.iter().position(|l| l.contains("BtreeScan m via btree(PlantSpecies.name)")).expect(&text);
    let spatial = lines.iter().position(|l| l.trim_start().starts_with("SpatialJoin")).expect(&text);
    let rtree = lines.iter().position(|l| l.contains("RtreeWindow s via rtree(PlantSpecies.georegion)")).expect(&text);
    assert!(btree < rtree && spatial < btree, "{text}");
    assert!(text.contains("PdScan"), "{text}");

    let (_, pd) = &dbs[1];
    let s = Session::new(pd, QueryOptions::default());
    let text = explain(&s.plan(TQ1, Mode::Optimized).unwrap());
    assert!(text.contains("via pathdict(PlantSpecies.flowerchar.inflochar) [@2 = m.flowerchar.inflochar]"), "{text}");
    assert!(!text.contains("ExtentScan"), "{text}");

    let (_, none) = &mut dbs[0];
    none.create_index(IndexDecl::new(IndexKind::Btree, "PlantSpecies", &["name"])).unwrap();
    let s = Session::new(none, QueryOptions::default());
    let plan = s.plan("select s.georegion.area() from s in PlantSpecies", Mode::Optimized).unwrap();
    assert!(explain(&plan).contains("area_fan()"), "{}", explain(&plan));
    let naive = s.plan("select s.georegion.area() from s in PlantSpecies", Mode::Naive).unwrap();
    assert!(!explain(&naive).contains("area_fan"));
}

#[test]
fn range_and_negated_predicates_agree() {
    let queries = [
        "select s.name from s in PlantSpecies where s.name >= \"sp3\" and s.name < \"sp5\"",
        "select s.name, f.color from s in PlantSpecies, f in FlowerChar where s.flowerchar = f and not (f.color = \"c1\")",
        "select s.name from s in PlantSpecies where s.flowerchar.inflochar.kind = \"k1\" or s.name = \"sp0\"",
        "select s.name from s in PlantSpecies where s.flowerchar.inflochar.kind <> \"k1\"",
        "select e.accession from s in PlantSpecies, e in s.stDNAEntries where s.georegion inside rect(0, 0, 60, 60)",
        "select distinct g.name, s.name from g in Genera, s in g.species where s.georegion overlaps rect(10, 10, 20, 20)",
        "select * from o in Order, f in o.families, g in f.genera",
    ];
    for (name, db) in configs(5, 50) {
        let s = Session::new(&db, QueryOptions::default());
        for q in queries {
            assert_eq!(multiset(&s, q, Mode::Naive), multiset(&s, q, Mode::Optimized), "{name}: {q}");
        }
    }
}

