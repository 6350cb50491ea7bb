#[path = "support/forest.rs"]
mod forest;

use biodb::catalog::{parse_schema, IndexDecl, IndexKind};
use biodb::store::{encode_key, Database, IndexData, KeyValue, Value};
use forest::{check_all, mutate, populate, rebuild_equal};
use std::ops::Bound;

#[test]
fn indexes_match_oracles_through_mutations() {
    let (mut db, mut rng) = populate(7, 50, 1500);
    check_all(&db, &mut rng);
    for i in 1..=300 {
        mutate(&mut db, &mut rng);
        if i % 100 == 0 {
            rebuild_equal(&db);
            check_all(&db, &mut rng);
        }
    }
}

#[test]
fn one_to_one_chain_counts() {
    let mut db = Database::in_memory();
    db.load_schema(
        parse_schema(
            "class S { fc: ref(F); hab: collection(ref(H)); }\n\
             class F { ic: ref(I); }\nclass I { kind: string; }\nclass H { n: int; }",
        )
        .unwrap(),
    )
    .unwrap();
    let mut roots = Vec::new();
    for k in 0..5 {
        let i = db.insert_object("I", &[("kind", Value::Str(format!("k{k}")))]).unwrap();
        let f = db.insert_object("F", &[("ic", Value::Ref(i))]).unwrap();
        let hs: Vec<Value> =
            (0..3).map(|n| Value::Ref(db.insert_object("H", &[("n", Value::Int(n))]).unwrap())).collect();
        roots.push(db.insert_object("S", &[("fc", Value::Ref(f)), ("hab", Value::List(hs))]).unwrap());
    }
    db.create_index(IndexDecl::new(IndexKind::PathDict, "S", &["fc", "ic", "kind"])).unwrap();
    db.create_index(IndexDecl::new(IndexKind::PathDict, "S", &["hab"])).unwrap();
    let Some(IndexData::PathDict(pd)) = db.index("pathdict(S.fc.ic.kind)") else { panic!() };
    assert_eq!(pd.len(), 5);
    assert_eq!(pd.lookup_oid(roots[0]).count(), 1);
    let k = encode_key(&KeyValue::Str("k3".into())).unwrap();
    let hits: Vec<_> = pd.lookup_attr(Bound::Included(&k), Bound::Included(&k)).unwrap().collect();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].1.chain[0], roots[3]);
    let none = encode_key(&KeyValue::Str("zz".into())).unwrap();
    assert_eq!(pd.lookup_attr(Bound::Included(&none), Bound::Unbounded).unwrap().count(), 0);
    let Some(IndexData::PathDict(hab)) = db.index("pathdict(S.hab)") else { panic!() };
    assert_eq!(hab.len(), 15);
    assert_eq!(hab.lookup_oid(roots[1]).count(), 3);

    // A new species with a full chain adds exactly one record.
    let i = db.insert_object("I", &[("kind", Value::Str("new".into()))]).unwrap();
    let f = db.insert_object("F", &[("ic", Value::Ref(i))]).unwrap();
    db.insert_object("S", &[("fc", Value::Ref(f))]).unwrap();
    let Some(IndexData::PathDict(pd)) = db.index("pathdict(S.fc.ic.kind)") else { panic!() };
    assert_eq!(pd.len(), 6);
    // Deleting a terminal object drops its records.
    db.delete_object(i).unwrap();
    let Some(IndexData::PathDict(pd)) = db.index("pathdict(S.fc.ic.kind)") else { panic!() };
    assert_eq!(pd.len(), 5);
    assert!(pd.dump().lines().count() == 5);
}
