//! Path dictionary: one record per joinable chain of objects along a declared
//! aggregation path, stored root first. Collections fan out fully; a null or
//! dangling link yields no record (inner-join semantics).
//!
//! The identity index maps every oid to the records and positions it occurs
//! at; the attribute index maps the terminal object's scalar key to records.
//! Both are ordered sets, so range lookups stream without materializing.

use super::HidxError;
use crate::oid::Oid;
use crate::store::index::range_is_empty;
use crate::store::{Objects, TypedKey, Value};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::Bound;

pub type RecordId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub chain: Vec<Oid>,
    /// Terminal attribute key of the last object, if indexed and non-null.
    pub key: Option<TypedKey>,
}

#[derive(Debug, Clone)]
pub struct PathDictionary {
    name: String,
    /// Class id per chain position.
    classes: Vec<usize>,
    /// Attribute position of each reference step.
    steps: Vec<usize>,
    terminal: Option<usize>,
    records: BTreeMap<RecordId, PathRecord>,
    next_id: RecordId,
    identity: BTreeSet<(Oid, RecordId, u32)>,
    attr: BTreeSet<(TypedKey, RecordId)>,
}

#[derive(Serialize, Deserialize)]
struct Image {
    next_id: RecordId,
    records: Vec<(RecordId, PathRecord)>,
}

impl PathDictionary {
    fn empty(objs: &Objects, root: &str, path: &[String]) -> Result<PathDictionary, HidxError> {
        let cat = objs.catalog();
        let shape = cat.resolve_path(root, path)?;
        let classes: Vec<usize> = shape
            .classes
            .iter()
            .map(|c| cat.class_id(c).ok_or_else(|| HidxError::UnknownClass(c.clone())))
            .collect::<Result<_, _>>()?;
        let steps = shape.steps.iter().enumerate().map(|(i, s)| cat.attr(classes[i], &s.attr).unwrap().0).collect();
        let terminal = shape.terminal_attr.as_ref().map(|a| cat.attr(*classes.last().unwrap(), a).unwrap().0);
        Ok(PathDictionary {
            name: format!("pathdict({root}.{})", path.join(".")),
            classes,
            steps,
            terminal,
            records: BTreeMap::new(),
            next_id: 0,
            identity: BTreeSet::new(),
            attr: BTreeSet::new(),
        })
    }

    pub fn build(objs: &Objects, root: &str, path: &[String]) -> Result<PathDictionary, HidxError> {
        let mut pd = PathDictionary::empty(objs, root, path)?;
        for (oid, _) in objs.scan(pd.classes[0], true) {
            for chain in pd.suffixes(objs, oid, 0) {
                pd.add(objs, chain)?;
            }
        }
        Ok(pd)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Chain length (objects per record).
    pub fn arity(&self) -> usize {
        self.classes.len()
    }

    pub fn class_ids(&self) -> &[usize] {
        &self.classes
    }

    pub fn has_attr_index(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = (RecordId, &PathRecord)> {
        self.records.iter().map(|(id, r)| (*id, r))
    }

    /// Every chain, sorted; the multiset used for rebuild comparisons.
    pub fn chains(&self) -> Vec<Vec<Oid>> {
        let mut v: Vec<Vec<Oid>> = self.records.values().map(|r| r.chain.clone()).collect();
        v.sort();
        v
    }

    /// Records containing `oid`, with the position it occupies.
    pub fn lookup_oid(&self, oid: Oid) -> impl Iterator<Item = (RecordId, &PathRecord, usize)> + '_ {
        self.identity
            .range((oid, 0, 0)..=(oid, RecordId::MAX, u32::MAX))
            .map(move |&(_, id, pos)| (id, &self.records[&id], pos as usize))
    }

    /// Records whose terminal key lies in the range, in key order.
    pub fn lookup_attr<'a>(
        &'a self,
        lo: Bound<&TypedKey>,
        hi: Bound<&TypedKey>,
    ) -> Result<Box<dyn Iterator<Item = (RecordId, &'a PathRecord)> + 'a>, HidxError> {
        if self.terminal.is_none() {
            return Err(HidxError::NoAttrIndex(self.name.clone()));
        }
        if range_is_empty(lo, hi) {
            return Ok(Box::new(std::iter::empty()));
        }
        let lo = match lo {
            Bound::Included(k) => Bound::Included((k.clone(), 0)),
            Bound::Excluded(k) => Bound::Excluded((k.clone(), RecordId::MAX)),
            Bound::Unbounded => Bound::Unbounded,
        };
        let hi = match hi {
            Bound::Included(k) => Bound::Included((k.clone(), RecordId::MAX)),
            Bound::Excluded(k) => Bound::Excluded((k.clone(), 0)),
            Bound::Unbounded => Bound::Unbounded,
        };
        Ok(Box::new(self.attr.range((lo, hi)).map(move |(_, id)| (*id, &self.records[id]))))
    }

    fn terminal_key(&self, objs: &Objects, last: Oid) -> Result<Option<TypedKey>, HidxError> {
        let Some(pos) = self.terminal else { return Ok(None) };
        match objs.get(last) {
            Ok(rec) => Ok(rec.fields[pos].to_key()?),
            Err(_) => Ok(None),
        }
    }

    fn add(&mut self, objs: &Objects, chain: Vec<Oid>) -> Result<(), HidxError> {
        let id = self.next_id;
        self.next_id += 1;
        let key = self.terminal_key(objs, *chain.last().unwrap())?;
        self.index(id, &chain, key.as_ref());
        self.records.insert(id, PathRecord { chain, key });
        Ok(())
    }

    fn index(&mut self, id: RecordId, chain: &[Oid], key: Option<&TypedKey>) {
        for (p, o) in chain.iter().enumerate() {
            self.identity.insert((*o, id, p as u32));
        }
        if let Some(k) = key {
            self.attr.insert((k.clone(), id));
        }
    }

    fn remove(&mut self, id: RecordId) {
        if let Some(r) = self.records.remove(&id) {
            for (p, o) in r.chain.iter().enumerate() {
                self.identity.remove(&(*o, id, p as u32));
            }
            if let Some(k) = r.key {
                self.attr.remove(&(k, id));
            }
        }
    }

    fn fits(&self, objs: &Objects, oid: Oid, pos: usize) -> bool {
        objs.is_live(oid) && objs.catalog().is_subclass(oid.extent as usize, self.classes[pos])
    }

    /// All valid chain tails starting with `oid` at `pos`.
    fn suffixes(&self, objs: &Objects, oid: Oid, pos: usize) -> Vec<Vec<Oid>> {
        if !self.fits(objs, oid, pos) {
            return Vec::new();
        }
        if pos + 1 == self.classes.len() {
            return vec![vec![oid]];
        }
        let rec = objs.get(oid).expect("checked live");
        let mut out = Vec::new();
        for next in rec.fields[self.steps[pos]].refs() {
            for tail in self.suffixes(objs, next, pos + 1) {
                let mut c = Vec::with_capacity(tail.len() + 1);
                c.push(oid);
                c.extend(tail);
                out.push(c);
            }
        }
        out
    }

    /// All valid chain heads ending with `oid` at `pos`, found by scanning
    /// the previous step's extents for links to `oid`.
    fn prefixes(&self, objs: &Objects, oid: Oid, pos: usize) -> Vec<Vec<Oid>> {
        if !self.fits(objs, oid, pos) {
            return Vec::new();
        }
        if pos == 0 {
            return vec![vec![oid]];
        }
        let mut out = Vec::new();
        for (q, rec) in objs.scan(self.classes[pos - 1], true) {
            let links = match &rec.fields[self.steps[pos - 1]] {
                Value::Ref(o) => usize::from(*o == oid),
                Value::List(vs) => vs.iter().filter(|v| matches!(v, Value::Ref(o) if *o == oid)).count(),
                _ => 0,
            };
            if links == 0 {
                continue;
            }
            let heads = self.prefixes(objs, q, pos - 1);
            for _ in 0..links {
                for h in &heads {
                    let mut c = h.clone();
                    c.push(oid);
                    out.push(c);
                }
            }
        }
        out
    }

    /// Brings the dictionary in line with the current state of `oid` after it
    /// was inserted, deleted or had a field changed: drop every record that
    /// mentions it, then regenerate the chains through it. A chain is
    /// generated only at the first position the object occupies in it.
    pub fn maintain(&mut self, objs: &Objects, oid: Oid) -> Result<(), HidxError> {
        let stale: BTreeSet<RecordId> = self.lookup_oid(oid).map(|(id, _, _)| id).collect();
        for id in stale {
            self.remove(id);
        }
        if !objs.is_live(oid) {
            return Ok(());
        }
        for pos in 0..self.classes.len() {
            if !self.fits(objs, oid, pos) {
                continue;
            }
            let heads = self.prefixes(objs, oid, pos);
            if heads.is_empty() {
                continue;
            }
            let tails = self.suffixes(objs, oid, pos);
            for h in &heads {
                for t in &tails {
                    let mut chain = h.clone();
                    chain.extend_from_slice(&t[1..]);
                    if chain.iter().position(|o| *o == oid) == Some(pos) {
                        self.add(objs, chain)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let img = Image { next_id: self.next_id, records: self.records.iter().map(|(k, v)| (*k, v.clone())).collect() };
        bincode::serialize(&img).expect("records serialize")
    }

    pub fn from_bytes(objs: &Objects, root: &str, path: &[String], bytes: &[u8]) -> Result<PathDictionary, HidxError> {
        let img: Image = bincode::deserialize(bytes).map_err(|e| HidxError::Corrupt(e.to_string()))?;
        let mut pd = PathDictionary::empty(objs, root, path)?;
        pd.next_id = img.next_id;
        for (id, r) in img.records {
            if r.chain.len() != pd.classes.len() {
                return Err(HidxError::Corrupt(format!("record {id} has {} objects", r.chain.len())));
            }
            pd.index(id, &r.chain, r.key.as_ref());
            pd.records.insert(id, r);
        }
        Ok(pd)
    }

    /// One line per record: id, chain, terminal key in hex.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, r) in &self.records {
            let chain: Vec<String> = r.chain.iter().map(|o| o.to_string()).collect();
            let _ = write!(out, "{id}: {}", chain.join(" -> "));
            if let Some(k) = &r.key {
                let _ = write!(out, " key={}", k.0.iter().map(|b| format!("{b:02x}")).collect::<String>());
            }
            out.push('\n');
        }
        out
    }
}
