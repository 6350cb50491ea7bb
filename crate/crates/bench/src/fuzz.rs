//! Random well-typed queries over the biodiversity schema.
//!
//! Each query binds one to three variables (extents, or collections of an
//! earlier variable) and combines predicates drawn from templates that
//! exercise every access path: name lookups and ranges, reference chains,
//! spatial windows and joins, collection membership, blast, and `or`/`not`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Species,
    Entry,
    Flower,
    Inflo,
    Genus,
}

struct Var {
    name: String,
    kind: Kind,
}

/// Names and constants the templates draw from.
#[derive(Debug, Clone)]
pub struct FuzzDomain {
    pub species: Vec<String>,
    pub accessions: Vec<String>,
    pub colors: Vec<String>,
    pub kinds: Vec<String>,
    /// Box the habitat regions lie in.
    pub area: [f64; 4],
    /// Whether blast predicates may appear.
    pub blast: bool,
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn random_rect(rng: &mut ChaCha8Rng, a: &[f64; 4]) -> String {
    let w = (a[2] - a[0]) * rng.gen_range(0.1..0.6);
    let h = (a[3] - a[1]) * rng.gen_range(0.1..0.6);
    let x = rng.gen_range(a[0]..a[2] - w);
    let y = rng.gen_range(a[1]..a[3] - h);
    format!("rect({x:.1}, {y:.1}, {:.1}, {:.1})", x + w, y + h)
}

fn cmp(rng: &mut ChaCha8Rng) -> &'static str {
    ["=", "<>", "<", "<=", ">", ">="].choose(rng).copied().expect("nonempty")
}

fn atom(rng: &mut ChaCha8Rng, d: &FuzzDomain, vars: &[Var], v: usize) -> Option<String> {
    let x = &vars[v].name;
    let other = |k: Kind| vars.iter().enumerate().filter(|(i, o)| *i != v && o.kind == k).map(|(_, o)| o.name.clone()).collect::<Vec<_>>();
    let pick = |rng: &mut ChaCha8Rng, xs: &[String]| xs.choose(rng).cloned();
    Some(match vars[v].kind {
        Kind::Species => match rng.gen_range(0..11) {
            0 => format!("{x}.name = {}", quote(&pick(rng, &d.species)?)),
            1 => format!("{x}.name {} {}", cmp(rng), quote(&pick(rng, &d.species)?)),
            2 => format!("{x}.flowerchar.inflochar = {}.flowerchar.inflochar", pick(rng, &other(Kind::Species))?),
            3 => format!("{x}.flowerchar.inflochar.kind = {}", quote(&pick(rng, &d.kinds)?)),
            4 => format!("{x}.flowerchar.color <> {}", quote(&pick(rng, &d.colors)?)),
            5 => format!("{x}.georegion overlaps {}.georegion", pick(rng, &other(Kind::Species))?),
            6 => format!("{x}.georegion overlaps {}", random_rect(rng, &d.area)),
            7 => format!("{x}.georegion inside {}", random_rect(rng, &d.area)),
            8 => format!("{x}.flowerchar = {}", pick(rng, &other(Kind::Flower))?),
            9 => format!("{x}.flowerchar.inflochar = {}", pick(rng, &other(Kind::Inflo))?),
            _ => format!("{x} in {}.species", pick(rng, &other(Kind::Genus))?),
        },
        Kind::Entry => match rng.gen_range(0..4) {
            0 => format!("{x}.accession {} {}", cmp(rng), quote(&pick(rng, &d.accessions)?)),
            1 if d.blast => format!("{x} in {}.dna.blast({})", pick(rng, &other(Kind::Entry))?, rng.gen_range(40..90)),
            2 => format!("{x} in {}.stDNAEntries", pick(rng, &other(Kind::Species))?),
            _ => format!("{x}.accession = {}", quote(&pick(rng, &d.accessions)?)),
        },
        Kind::Flower => match rng.gen_range(0..2) {
            0 => format!("{x}.color = {}", quote(&pick(rng, &d.colors)?)),
            _ => format!("{x}.inflochar.kind {} {}", cmp(rng), quote(&pick(rng, &d.kinds)?)),
        },
        Kind::Inflo => format!("{x}.kind {} {}", cmp(rng), quote(&pick(rng, &d.kinds)?)),
        Kind::Genus => format!("{x}.name {} \"Genus-{}\"", cmp(rng), rng.gen_range(0..20)),
    })
}

fn predicate(rng: &mut ChaCha8Rng, d: &FuzzDomain, vars: &[Var]) -> Option<String> {
    let v = rng.gen_range(0..vars.len());
    let a = atom(rng, d, vars, v)?;
    Some(match rng.gen_range(0..10) {
        0 => format!("not ({a})"),
        1 => {
            let w = rng.gen_range(0..vars.len());
            match atom(rng, d, vars, w) {
                Some(b) => format!("({a} or {b})"),
                None => a,
            }
        }
        _ => a,
    })
}

fn projection(rng: &mut ChaCha8Rng, v: &Var) -> String {
    let attr = match v.kind {
        Kind::Species => ["name", "flowerchar.color", "flowerchar.inflochar.kind", "georegion"][rng.gen_range(0..4)].to_string(),
        Kind::Entry => ["accession", "dna"][rng.gen_range(0..2)].to_string(),
        Kind::Flower => ["color", "inflochar"][rng.gen_range(0..2)].to_string(),
        Kind::Inflo => "kind".to_string(),
        Kind::Genus => "name".to_string(),
    };
    format!("{}.{attr}", v.name)
}

/// One random query text.
pub fn random_query(rng: &mut ChaCha8Rng, d: &FuzzDomain) -> String {
    let mut vars: Vec<Var> = Vec::new();
    let mut from = Vec::new();
    let n: usize = rng.gen_range(1..=3);
    for i in 0..n {
        let name = format!("v{i}");
        let species: Vec<String> = vars.iter().filter(|v| v.kind == Kind::Species).map(|v| v.name.clone()).collect();
        let genera: Vec<String> = vars.iter().filter(|v| v.kind == Kind::Genus).map(|v| v.name.clone()).collect();
        let (src, kind) = match rng.gen_range(0..10) {
            0..=3 => ("PlantSpecies".to_string(), Kind::Species),
            4 if !species.is_empty() => (format!("{}.stDNAEntries", species.choose(rng).expect("nonempty")), Kind::Entry),
            5 if !genera.is_empty() => (format!("{}.species", genera.choose(rng).expect("nonempty")), Kind::Species),
            5 => ("Genera".to_string(), Kind::Genus),
            6 if !species.is_empty() => (format!("{}.flowerchar.inflochar", species.choose(rng).expect("nonempty")), Kind::Inflo),
            6 => ("InfloChar".to_string(), Kind::Inflo),
            7 => ("FlowerChar".to_string(), Kind::Flower),
            8 => ("EMBLEntry".to_string(), Kind::Entry),
            _ => ("PlantSpecies".to_string(), Kind::Species),
        };
        from.push(format!("{name} in {src}"));
        vars.push(Var { name, kind });
    }
    let mut preds = Vec::new();
    // Every extra variable gets at least one predicate so results stay small.
    let want = rng.gen_range(n.saturating_sub(1).max(1)..=n + 1);
    for _ in 0..want * 4 {
        if preds.len() >= want {
            break;
        }
        if let Some(p) = predicate(rng, d, &vars) {
            preds.push(p);
        }
    }
    let select = if rng.gen_bool(0.15) {
        "*".to_string()
    } else {
        let k = rng.gen_range(1..=vars.len().min(2));
        let picked: Vec<String> = vars.choose_multiple(rng, k).map(|v| projection(rng, v)).collect();
        picked.join(", ")
    };
    let distinct = if rng.gen_bool(0.2) { "distinct " } else { "" };
    let mut q = format!("select {distinct}{select} from {}", from.join(", "));
    if !preds.is_empty() {
        q.push_str(" where ");
        q.push_str(&preds.join(" and "));
    }
    q
}
