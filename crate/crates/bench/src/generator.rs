//! Seeded synthetic biodiversity population.
//!
//! The taxonomy shape comes from its own random stream, drawn level by
//! level (every family count, then every genus count, then every species
//! count), so the default seed pins the published tree sizes independently
//! of how much content is generated. Content (names, regions, sequences)
//! comes from a second stream of the same seed.

use crate::schema::BIO_SCHEMA;
use crate::BenchError;
use biodb::catalog::parse_schema;
use biodb::geom::{Geometry, Point, Polygon};
use biodb::seq::{encode_dna, Sequence};
use biodb::store::{Database, Value};
use biodb::Oid;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Planted in every population so the benchmark queries run verbatim.
pub const PLANTED_SPECIES: &str = "Magnolia-champa";

/// Yields 46 families, 496 genera and 5155 species under the default
/// branch factor.
pub const DEFAULT_SEED: u64 = 981_897;

const COLORS: [&str; 8] = ["white", "yellow", "pink", "red", "purple", "blue", "green", "orange"];
const INFLO_KINDS: [&str; 5] = ["raceme", "panicle", "umbel", "spike", "solitary"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Root fan-out: number of orders.
    pub orders: u32,
    /// Inclusive children-per-node range below the orders.
    pub branch: (u32, u32),
    /// Mean habitat (height, width).
    pub habitat_mean: (f64, f64),
    /// Extents are uniform on `[(1 - spread) * mean, (1 + spread) * mean]`.
    pub habitat_spread: f64,
    /// Habitat centers are uniform on `[lo, hi]` in both coordinates.
    pub center_range: (f64, f64),
    pub sequences_per_species: u32,
    /// Inclusive sequence length range in bases.
    pub seq_len: (usize, usize),
    /// Length of the segment shared by sequences within a genus.
    pub motif_len: usize,
    /// Chance that a sequence carries its genus segment.
    pub motif_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: DEFAULT_SEED,
            orders: 4,
            branch: (1, 19),
            habitat_mean: (10.0, 12.0),
            habitat_spread: 0.5,
            center_range: (-1000.0, -100.0),
            sequences_per_species: 10,
            seq_len: (1000, 10_000),
            motif_len: 120,
            motif_rate: 0.3,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.orders == 0 || self.branch.0 == 0 || self.branch.0 > self.branch.1 {
            return bad("orders and branch factors must be positive with lo <= hi");
        }
        if self.seq_len.0 == 0 || self.seq_len.0 > self.seq_len.1 {
            return bad("sequence length range must be positive with lo <= hi");
        }
        if self.motif_len > self.seq_len.0 {
            return bad("motif length exceeds the shortest sequence");
        }
        if !(0.0..1.0).contains(&self.habitat_spread) || self.habitat_mean.0 <= 0.0 || self.habitat_mean.1 <= 0.0 {
            return bad("habitat extents must stay positive");
        }
        if self.center_range.0 >= self.center_range.1 {
            return bad("center range must be nonempty");
        }
        if !(0.0..=1.0).contains(&self.motif_rate) {
            return bad("motif rate must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Population {
    pub orders: usize,
    pub families: usize,
    pub genera: usize,
    pub species: usize,
    pub flowerchars: usize,
    pub habitats: usize,
    pub inflochars: usize,
    pub entries: usize,
    pub bases: usize,
}

/// Children per node, level by level below the orders.
pub fn taxonomy_shape(cfg: &GeneratorConfig) -> [Vec<u32>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let families: Vec<u32> = (0..cfg.orders).map(|_| rng.gen_range(cfg.branch.0..=cfg.branch.1)).collect();
    let genera: Vec<u32> = (0..families.iter().sum::<u32>()).map(|_| rng.gen_range(cfg.branch.0..=cfg.branch.1)).collect();
    let species: Vec<u32> = (0..genera.iter().sum::<u32>()).map(|_| rng.gen_range(cfg.branch.0..=cfg.branch.1)).collect();
    [families, genera, species]
}

fn random_dna(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut s = String::with_capacity(n);
    while s.len() < n {
        let mut w: u64 = rng.gen();
        for _ in 0..32.min(n - s.len()) {
            s.push(b"ACGT"[(w & 3) as usize] as char);
            w >>= 2;
        }
    }
    s
}

fn rect_polygon(cx: f64, cy: f64, h: f64, w: f64) -> Result<Geometry, BenchError> {
    let p = |x: f64, y: f64| Point::new(x, y).map_err(|e| BenchError::Data(e.to_string()));
    let ring = vec![p(cx - w / 2.0, cy - h / 2.0)?, p(cx + w / 2.0, cy - h / 2.0)?, p(cx + w / 2.0, cy + h / 2.0)?, p(cx - w / 2.0, cy + h / 2.0)?];
    Ok(Geometry::Polygon(Polygon::new(ring, vec![]).map_err(|e| BenchError::Data(e.to_string()))?))
}

/// Loads the schema into an empty database and populates it.
pub fn generate_fresh(db: &mut Database, cfg: &GeneratorConfig) -> Result<Population, BenchError> {
    db.load_schema(parse_schema(BIO_SCHEMA).expect("bundled schema parses"))?;
    generate(db, cfg, &[])
}

/// Populates a database holding the biodiversity schema. Sequences are drawn
/// from `pool` round-robin when it is nonempty, else generated.
pub fn generate(db: &mut Database, cfg: &GeneratorConfig, pool: &[Sequence]) -> Result<Population, BenchError> {
    cfg.validate()?;
    for class in ["Order", "Family", "Genera", "PlantSpecies", "FlowerChar", "InfloChar", "Habitat", "EMBLEntry"] {
        if db.catalog().class_id(class).is_none() {
            return Err(BenchError::Config(format!("schema has no class {class}")));
        }
    }
    let [families, genera, species] = taxonomy_shape(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut pop = Population::default();
    let total_species = species.iter().sum::<u32>() as usize;
    let planted = rng.gen_range(0..total_species);

    let inflo: Vec<Oid> = INFLO_KINDS
        .iter()
        .map(|k| db.insert_object("InfloChar", &[("kind", Value::Str(k.to_string()))]))
        .collect::<Result<_, _>>()?;
    pop.inflochars = inflo.len();

    let mut next_species = 0usize;
    let mut next_entry = 0usize;
    let mut pool_at = 0usize;
    let mut genus_oids = Vec::with_capacity(species.len());
    for (g, &n) in species.iter().enumerate() {
        let motif = random_dna(&mut rng, cfg.motif_len);
        let mut members = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let i = next_species;
            next_species += 1;
            let mut entries = Vec::with_capacity(cfg.sequences_per_species as usize);
            for _ in 0..cfg.sequences_per_species {
                let seq = if pool.is_empty() {
                    let len = rng.gen_range(cfg.seq_len.0..=cfg.seq_len.1);
                    let mut text = random_dna(&mut rng, len);
                    if cfg.motif_len > 0 && rng.gen_bool(cfg.motif_rate) {
                        let at = rng.gen_range(0..=len - cfg.motif_len);
                        text.replace_range(at..at + cfg.motif_len, &motif);
                    }
                    Sequence::Dna(encode_dna(&text).expect("generated bases are valid"))
                } else {
                    pool_at += 1;
                    pool[(pool_at - 1) % pool.len()].clone()
                };
                pop.bases += seq.len();
                let sid = db.put_sequence(seq);
                let acc = format!("EMBL{next_entry:07}");
                next_entry += 1;
                entries.push(Value::Ref(db.insert_object("EMBLEntry", &[("accession", Value::Str(acc)), ("dna", Value::Seq(sid))])?));
            }
            let color = COLORS.choose(&mut rng).expect("colors are nonempty");
            let fc = db.insert_object(
                "FlowerChar",
                &[("color", Value::Str(color.to_string())), ("inflochar", Value::Ref(inflo[rng.gen_range(0..inflo.len())]))],
            )?;
            let (lo, hi) = cfg.center_range;
            let (cx, cy) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
            let s = cfg.habitat_spread;
            let h = rng.gen_range((1.0 - s) * cfg.habitat_mean.0..=(1.0 + s) * cfg.habitat_mean.0);
            let w = rng.gen_range((1.0 - s) * cfg.habitat_mean.1..=(1.0 + s) * cfg.habitat_mean.1);
            let region = rect_polygon(cx, cy, h, w)?;
            let hab = db.insert_object("Habitat", &[("region", Value::Geom(region.clone()))])?;
            let name = if i == planted { PLANTED_SPECIES.to_string() } else { format!("Species-{i}") };
            members.push(Value::Ref(db.insert_object(
                "PlantSpecies",
                &[
                    ("name", Value::Str(name)),
                    ("georegion", Value::Geom(region)),
                    ("habitats", Value::List(vec![Value::Ref(hab)])),
                    ("flowerchar", Value::Ref(fc)),
                    ("stDNAEntries", Value::List(entries)),
                ],
            )?));
        }
        pop.species += members.len();
        genus_oids.push(Value::Ref(
            db.insert_object("Genera", &[("name", Value::Str(format!("Genus-{g}"))), ("species", Value::List(members))])?,
        ));
    }
    pop.flowerchars = pop.species;
    pop.habitats = pop.species;
    pop.entries = next_entry;
    pop.genera = genus_oids.len();

    let mut genus_iter = genus_oids.into_iter();
    let mut family_oids = Vec::with_capacity(genera.len());
    for (f, &n) in genera.iter().enumerate() {
        let members: Vec<Value> = genus_iter.by_ref().take(n as usize).collect();
        family_oids.push(Value::Ref(
            db.insert_object("Family", &[("name", Value::Str(format!("Family-{f}"))), ("genera", Value::List(members))])?,
        ));
    }
    pop.families = family_oids.len();
    let mut family_iter = family_oids.into_iter();
    for (o, &n) in families.iter().enumerate() {
        let members: Vec<Value> = family_iter.by_ref().take(n as usize).collect();
        db.insert_object("Order", &[("name", Value::Str(format!("Order-{o}"))), ("families", Value::List(members))])?;
    }
    pop.orders = families.len();
    Ok(pop)
}
