//! Random class forest with MT and path-dictionary indexes, plus oracles.

#![allow(dead_code)]

use biodb::catalog::{parse_schema, IndexDecl, IndexKind};
use biodb::hidx::HidxError;
use biodb::store::{encode_key, Database, IndexData, KeyValue, Objects, Value};
use biodb::Oid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::ops::Bound;

/// Three class trees (Top, Mid, Leaf roots) grown to `classes` classes.
pub fn forest_schema(rng: &mut ChaCha8Rng, classes: usize) -> String {
    let mut s = String::from(
        "class Top { tag: int; kids: collection(ref(Mid), N:M); }\n\
         class Mid { tag: int; down: ref(Leaf); alt: collection(ref(Leaf)); }\n\
         class Leaf { tag: int; key: int; }\n",
    );
    let names = ["Top", "Mid", "Leaf"];
    let mut all: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    for i in 3..classes {
        let parent = all[rng.gen_range(0..all.len())].clone();
        let name = format!("K{i}");
        s.push_str(&format!("class {name} extends {parent} {{ x{i}: int; }}\n"));
        all.push(name);
    }
    s
}

pub fn subtree_members(db: &Database, root: &str) -> Vec<String> {
    let cat = db.catalog();
    let id = cat.class_id(root).unwrap();
    cat.subtree(id).into_iter().map(|c| cat.class(c).name.clone()).collect()
}

pub fn random_object(db: &mut Database, rng: &mut ChaCha8Rng, class: &str) -> Oid {
    let cat = db.catalog();
    let cid = cat.class_id(class).unwrap();
    let root = {
        let mut c = cid;
        while let Some(p) = &cat.class(c).parent {
            c = cat.class_id(p).unwrap();
        }
        cat.class(c).name.clone()
    };
    let pick = |db: &Database, rng: &mut ChaCha8Rng, root: &str| -> Option<Oid> {
        let live: Vec<Oid> = db.scan_extent(root, true).unwrap().map(|(o, _)| o).collect();
        (!live.is_empty()).then(|| live[rng.gen_range(0..live.len())])
    };
    let mut fields: Vec<(&str, Value)> = vec![("tag", Value::Int(rng.gen_range(-20..20)))];
    match root.as_str() {
        "Top" => {
            let n = rng.gen_range(0..4);
            let kids: Vec<Value> = (0..n).filter_map(|_| pick(db, rng, "Mid")).map(Value::Ref).collect();
            fields.push(("kids", Value::List(kids)));
        }
        "Mid" => {
            if rng.gen_bool(0.85) {
                if let Some(l) = pick(db, rng, "Leaf") {
                    fields.push(("down", Value::Ref(l)));
                }
            }
            let n = rng.gen_range(0..3);
            let alt: Vec<Value> = (0..n).filter_map(|_| pick(db, rng, "Leaf")).map(Value::Ref).collect();
            fields.push(("alt", Value::List(alt)));
        }
        _ => fields.push(("key", Value::Int(rng.gen_range(0..1000)))),
    }
    db.insert_object(class, &fields).unwrap()
}

pub fn populate(seed: u64, classes: usize, objects: usize) -> (Database, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = Database::in_memory();
    db.load_schema(parse_schema(&forest_schema(&mut rng, classes)).unwrap()).unwrap();
    for root in ["Leaf", "Mid", "Top"] {
        let members = subtree_members(&db, root);
        for _ in 0..objects / 3 {
            let c = members[rng.gen_range(0..members.len())].clone();
            random_object(&mut db, &mut rng, &c);
        }
    }
    for d in [
        IndexDecl::new(IndexKind::Mt, "Top", &["tag"]),
        IndexDecl::new(IndexKind::Mt, "Leaf", &["key"]),
        IndexDecl::new(IndexKind::PathDict, "Top", &["kids", "down", "key"]),
        IndexDecl::new(IndexKind::PathDict, "Mid", &["alt"]),
    ] {
        db.create_index(d).unwrap();
    }
    (db, rng)
}

pub fn live_set(objs: &Objects, root: &str) -> HashSet<Oid> {
    let id = objs.catalog().class_id(root).unwrap();
    objs.scan(id, true).map(|(o, _)| o).collect()
}

pub fn field<'a>(objs: &'a Objects, o: Oid, a: &str) -> &'a Value {
    objs.field(o, a).unwrap()
}

/// Join of the path extents, following each link through extent membership.
pub fn join_oracle(objs: &Objects, root: &str, path: &[&str], classes: &[&str]) -> Vec<Vec<Oid>> {
    let sets: Vec<HashSet<Oid>> = classes.iter().map(|c| live_set(objs, c)).collect();
    let root_id = objs.catalog().class_id(root).unwrap();
    let mut partial: Vec<Vec<Oid>> = objs.scan(root_id, true).map(|(o, _)| vec![o]).collect();
    for (i, step) in path.iter().enumerate() {
        if i + 1 >= classes.len() {
            break;
        }
        let mut next = Vec::new();
        for chain in partial {
            let last = *chain.last().unwrap();
            let targets = match field(objs, last, step) {
                Value::Ref(o) => vec![*o],
                Value::List(vs) => vs.iter().map(|v| if let Value::Ref(o) = v { *o } else { unreachable!() }).collect(),
                _ => vec![],
            };
            for t in targets {
                if sets[i + 1].contains(&t) {
                    let mut c = chain.clone();
                    c.push(t);
                    next.push(c);
                }
            }
        }
        partial = next;
    }
    partial.sort();
    partial
}

pub fn check_all(db: &Database, rng: &mut ChaCha8Rng) {
    let objs = db.objects();
    let Some(IndexData::PathDict(pd)) = db.index("pathdict(Top.kids.down.key)") else { panic!() };
    let oracle = join_oracle(objs, "Top", &["kids", "down"], &["Top", "Mid", "Leaf"]);
    assert_eq!(pd.chains(), oracle);
    let Some(IndexData::PathDict(alt)) = db.index("pathdict(Mid.alt)") else { panic!() };
    assert_eq!(alt.chains(), join_oracle(objs, "Mid", &["alt"], &["Mid", "Leaf"]));

    // Identity lookups against a full record scan, with position symmetry.
    let all: Vec<Oid> = ["Top", "Mid", "Leaf"].iter().flat_map(|c| live_set(objs, c)).collect();
    for _ in 0..50 {
        let o = all[rng.gen_range(0..all.len())];
        let mut got: Vec<Vec<Oid>> = pd
            .lookup_oid(o)
            .map(|(_, r, p)| {
                assert_eq!(r.chain[p], o);
                r.chain.clone()
            })
            .collect();
        got.sort();
        got.dedup();
        let mut expect: Vec<Vec<Oid>> = oracle.iter().filter(|c| c.contains(&o)).cloned().collect();
        expect.dedup();
        assert_eq!(got, expect, "identity lookup {o}");
    }
    assert_eq!(pd.lookup_oid(Oid::new(999, 0)).count(), 0);

    // Attribute lookups against join-then-filter.
    for _ in 0..50 {
        let a = rng.gen_range(-10..1010);
        let b = a + rng.gen_range(-5..200);
        let (ka, kb) = (encode_key(&KeyValue::Int(a)).unwrap(), encode_key(&KeyValue::Int(b)).unwrap());
        let mut got: Vec<Vec<Oid>> =
            pd.lookup_attr(Bound::Included(&ka), Bound::Excluded(&kb)).unwrap().map(|(_, r)| r.chain.clone()).collect();
        got.sort();
        let expect: Vec<Vec<Oid>> = oracle
            .iter()
            .filter(|c| matches!(field(objs, c[2], "key"), Value::Int(k) if *k >= a && *k < b))
            .cloned()
            .collect();
        assert_eq!(got, expect, "attr range [{a}, {b})");
    }
    assert!(matches!(alt.lookup_attr(Bound::Unbounded, Bound::Unbounded), Err(HidxError::NoAttrIndex(_))));

    // MT queries against the union of per-class scans.
    let Some(IndexData::Mt(mt)) = db.index("mt(Leaf, key)") else { panic!() };
    let leaf_classes = subtree_members(db, "Leaf");
    for _ in 0..50 {
        let class = &leaf_classes[rng.gen_range(0..leaf_classes.len())];
        let a = rng.gen_range(0..1000);
        let b = a + rng.gen_range(0..300);
        let (ka, kb) = (encode_key(&KeyValue::Int(a)).unwrap(), encode_key(&KeyValue::Int(b)).unwrap());
        let got = mt.query(objs, class, Bound::Included(&ka), Bound::Included(&kb)).unwrap();
        let mut expect = Vec::new();
        for c in subtree_members(db, class) {
            let cid = objs.catalog().class_id(&c).unwrap();
            for (o, _) in objs.scan(cid, false) {
                if matches!(field(objs, o, "key"), Value::Int(k) if (a..=b).contains(k)) {
                    expect.push(o);
                }
            }
        }
        expect.sort();
        assert_eq!(got, expect, "mt {class} [{a}, {b}]");
    }
    let whole = mt.query(objs, "Leaf", Bound::Unbounded, Bound::Unbounded).unwrap();
    assert_eq!(whole.len(), live_set(objs, "Leaf").len());
    assert!(matches!(
        mt.query(objs, "Top", Bound::Unbounded, Bound::Unbounded),
        Err(HidxError::OutsideSubtree { .. })
    ));
}

pub fn rebuild_equal(db: &Database) {
    for (name, ix) in db.indexes() {
        if let IndexData::PathDict(pd) = ix {
            let decl = db.catalog().indexes().iter().find(|d| &d.name() == name).unwrap();
            let IndexData::PathDict(fresh) = IndexData::build(decl, db.objects()).unwrap() else { unreachable!() };
            assert_eq!(pd.chains(), fresh.chains(), "{name} differs from rebuild");
        }
    }
}

pub fn mutate(db: &mut Database, rng: &mut ChaCha8Rng) {
    let roots = ["Top", "Mid", "Leaf"];
    let root = roots[rng.gen_range(0..3)];
    let live: Vec<Oid> = db.scan_extent(root, true).unwrap().map(|(o, _)| o).collect();
    let pick = |db: &Database, rng: &mut ChaCha8Rng, r: &str| {
        let v: Vec<Oid> = db.scan_extent(r, true).unwrap().map(|(o, _)| o).collect();
        v[rng.gen_range(0..v.len())]
    };
    match rng.gen_range(0..4) {
        0 => {
            let members = subtree_members(db, root);
            let c = members[rng.gen_range(0..members.len())].clone();
            random_object(db, rng, &c);
        }
        1 if live.len() > 10 => db.delete_object(live[rng.gen_range(0..live.len())]).unwrap(),
        _ if !live.is_empty() => {
            let o = live[rng.gen_range(0..live.len())];
            match root {
                "Top" => {
                    let kids: Vec<Value> = (0..rng.gen_range(0..4)).map(|_| Value::Ref(pick(db, rng, "Mid"))).collect();
                    db.set_field(o, "kids", Value::List(kids)).unwrap();
                }
                "Mid" => {
                    let v = if rng.gen_bool(0.2) { Value::Null } else { Value::Ref(pick(db, rng, "Leaf")) };
                    db.set_field(o, "down", v).unwrap();
                    let alt: Vec<Value> = (0..rng.gen_range(0..3)).map(|_| Value::Ref(pick(db, rng, "Leaf"))).collect();
                    db.set_field(o, "alt", Value::List(alt)).unwrap();
                }
                _ => db.set_field(o, "key", Value::Int(rng.gen_range(0..1000))).unwrap(),
            }
        }
        _ => {}
    }
}
