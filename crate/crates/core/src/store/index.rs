//! The declared-index set and its maintenance hooks.
//!
//! Every index covers the objects of its class subtree. Mutations call
//! `before_change` while the old record is still visible and `after_change`
//! once the new state is in place; path dictionaries only need the latter.

use super::pager::PAGE_PAYLOAD;
use super::{Objects, Record, StoreError, TypedKey, Value};
use crate::catalog::{IndexDecl, IndexKind};
use crate::geom::{mbr, Geometry, Rect};
use crate::hidx::{MtIndex, PathDictionary};
use crate::oid::Oid;
use crate::sidx::{RTree, SidxError, SpatialEntry, TreeParams, Variant};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::ops::Bound;

const OID_MIN: Oid = Oid::new(0, 0);
const OID_MAX: Oid = Oid::new(u32::MAX, u32::MAX);

/// Ordered multimap from typed key to oid. Backed by the standard library's
/// B-tree; paging is emulated only for size accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct BtreeIndex {
    class_id: usize,
    attr_pos: usize,
    set: BTreeSet<(TypedKey, Oid)>,
}

impl BtreeIndex {
    pub fn new(class_id: usize, attr_pos: usize) -> Self {
        BtreeIndex { class_id, attr_pos, set: BTreeSet::new() }
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn attr_pos(&self) -> usize {
        self.attr_pos
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn insert(&mut self, key: TypedKey, oid: Oid) {
        self.set.insert((key, oid));
    }

    pub fn remove(&mut self, key: &TypedKey, oid: Oid) {
        self.set.remove(&(key.clone(), oid));
    }

    pub fn lookup<'a>(&'a self, key: &TypedKey) -> impl Iterator<Item = Oid> + 'a {
        self.range(Bound::Included(key), Bound::Included(key))
    }

    /// Oids with key in the range, in (key, oid) order; an inverted range is
    /// empty.
    pub fn range<'a>(&'a self, lo: Bound<&TypedKey>, hi: Bound<&TypedKey>) -> Box<dyn Iterator<Item = Oid> + 'a> {
        if range_is_empty(lo, hi) {
            return Box::new(std::iter::empty());
        }
        let lo = match lo {
            Bound::Included(k) => Bound::Included((k.clone(), OID_MIN)),
            Bound::Excluded(k) => Bound::Excluded((k.clone(), OID_MAX)),
            Bound::Unbounded => Bound::Unbounded,
        };
        let hi = match hi {
            Bound::Included(k) => Bound::Included((k.clone(), OID_MAX)),
            Bound::Excluded(k) => Bound::Excluded((k.clone(), OID_MIN)),
            Bound::Unbounded => Bound::Unbounded,
        };
        Box::new(self.set.range((lo, hi)).map(|(_, o)| *o))
    }

    pub fn entries(&self) -> impl Iterator<Item = &(TypedKey, Oid)> {
        self.set.iter()
    }
}

/// True when no key can satisfy both bounds.
pub fn range_is_empty(lo: Bound<&TypedKey>, hi: Bound<&TypedKey>) -> bool {
    match (lo, hi) {
        (Bound::Included(a), Bound::Included(b)) => a > b,
        (Bound::Included(a), Bound::Excluded(b))
        | (Bound::Excluded(a), Bound::Included(b))
        | (Bound::Excluded(a), Bound::Excluded(b)) => a >= b,
        _ => false,
    }
}

/// R-tree over the MBRs of one spatial attribute.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    class_id: usize,
    attr_pos: usize,
    tree: RTree,
}

impl SpatialIndex {
    pub fn new(class_id: usize, attr_pos: usize, variant: Variant) -> Self {
        SpatialIndex { class_id, attr_pos, tree: RTree::new(variant, TreeParams::default()) }
    }

    pub fn tree(&self) -> &RTree {
        &self.tree
    }

    pub fn attr_pos(&self) -> usize {
        self.attr_pos
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn insert(&mut self, key: Rect, oid: Oid) -> Result<(), StoreError> {
        let e = SpatialEntry { key, oid };
        match self.tree.insert(e) {
            Err(SidxError::OutOfDomain) => {
                // Grow the Hilbert grid to cover the new key and rebuild.
                let world = self.tree.params().world;
                let need = world.union(&key);
                let side = (need.width().max(need.height()) * 2.0).max(1.0);
                let c = need.center();
                let params = self.tree.params().clone().with_world(Rect::around(c, side / 2.0));
                let mut entries = self.tree.entries();
                entries.sort_by_key(|e| e.oid);
                let mut tree = RTree::new(self.tree.variant(), params);
                for x in entries {
                    tree.insert(x)?;
                }
                tree.insert(e)?;
                self.tree = tree;
                Ok(())
            }
            other => Ok(other?),
        }
    }

    pub fn remove(&mut self, key: Rect, oid: Oid) {
        self.tree.delete(&SpatialEntry { key, oid });
    }
}

#[derive(Debug, Clone)]
pub enum IndexData {
    Btree(BtreeIndex),
    Spatial(SpatialIndex),
    Mt(MtIndex),
    PathDict(PathDictionary),
}

/// Serialized form of one index: a metadata blob plus any page images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexImage {
    pub meta: Vec<u8>,
    pub pages: Vec<Vec<u8>>,
}

impl IndexImage {
    pub fn page_count(&self) -> usize {
        let blob = |n: usize| n.div_ceil(PAGE_PAYLOAD).max(1);
        blob(self.meta.len()) + self.pages.iter().map(|p| blob(p.len())).sum::<usize>()
    }
}

#[derive(Serialize, Deserialize)]
struct TreeMeta {
    variant: Variant,
    params: TreeParams,
    len: usize,
}

fn covers(objs: &Objects, class_id: usize, oid: Oid) -> bool {
    objs.catalog().is_subclass(oid.extent as usize, class_id)
}

fn geometry_key(v: &Value) -> Option<Rect> {
    match v {
        Value::Geom(g) => Some(mbr(g)),
        _ => None,
    }
}

fn single_attr(objs: &Objects, decl: &IndexDecl) -> Result<(usize, usize), StoreError> {
    let cat = objs.catalog();
    let cid = cat.class_id(&decl.class).ok_or_else(|| StoreError::UnknownClass(decl.class.clone()))?;
    let (pos, _) = cat
        .attr(cid, &decl.path[0])
        .ok_or_else(|| StoreError::Index(decl.name(), format!("no attribute {}", decl.path[0])))?;
    Ok((cid, pos))
}

impl IndexData {
    pub fn build(decl: &IndexDecl, objs: &Objects) -> Result<IndexData, StoreError> {
        let mut ix = match decl.kind {
            IndexKind::Btree => {
                let (cid, pos) = single_attr(objs, decl)?;
                IndexData::Btree(BtreeIndex::new(cid, pos))
            }
            IndexKind::Rtree | IndexKind::Hilbert => {
                let (cid, pos) = single_attr(objs, decl)?;
                let variant = if decl.kind == IndexKind::Rtree { Variant::RStar } else { Variant::Hilbert };
                IndexData::Spatial(SpatialIndex::new(cid, pos, variant))
            }
            IndexKind::Mt => {
                let (cid, pos) = single_attr(objs, decl)?;
                return Ok(IndexData::Mt(MtIndex::build(objs, cid, pos)?));
            }
            IndexKind::PathDict => return Ok(IndexData::PathDict(PathDictionary::build(objs, &decl.class, &decl.path)?)),
        };
        let cid = objs.catalog().class_id(&decl.class).unwrap();
        for (oid, _) in objs.scan(cid, true) {
            ix.after_change(objs, oid)?;
        }
        Ok(ix)
    }

    /// Drops entries derived from `oid`'s current record.
    pub fn before_change(&mut self, objs: &Objects, oid: Oid) -> Result<(), StoreError> {
        let Ok(rec) = objs.get(oid) else { return Ok(()) };
        self.remove_record(objs, oid, rec)
    }

    fn remove_record(&mut self, objs: &Objects, oid: Oid, rec: &Record) -> Result<(), StoreError> {
        match self {
            IndexData::Btree(b) if covers(objs, b.class_id, oid) => {
                if let Some(k) = rec.fields[b.attr_pos].to_key()? {
                    b.remove(&k, oid);
                }
            }
            IndexData::Spatial(s) if covers(objs, s.class_id, oid) => {
                if let Some(r) = geometry_key(&rec.fields[s.attr_pos]) {
                    s.remove(r, oid);
                }
            }
            IndexData::Mt(m) => m.remove(objs, oid, rec)?,
            _ => {}
        }
        Ok(())
    }

    /// Adds entries for `oid`'s new record (if live) and repairs path records.
    pub fn after_change(&mut self, objs: &Objects, oid: Oid) -> Result<(), StoreError> {
        if let IndexData::PathDict(pd) = self {
            pd.maintain(objs, oid)?;
            return Ok(());
        }
        let Ok(rec) = objs.get(oid) else { return Ok(()) };
        match self {
            IndexData::Btree(b) if covers(objs, b.class_id, oid) => {
                if let Some(k) = rec.fields[b.attr_pos].to_key()? {
                    b.insert(k, oid);
                }
            }
            IndexData::Spatial(s) if covers(objs, s.class_id, oid) => {
                if let Some(r) = geometry_key(&rec.fields[s.attr_pos]) {
                    s.insert(r, oid)?;
                }
            }
            IndexData::Mt(m) => m.insert(objs, oid, rec)?,
            _ => {}
        }
        Ok(())
    }

    pub fn kind(&self) -> IndexKind {
        match self {
            IndexData::Btree(_) => IndexKind::Btree,
            IndexData::Spatial(s) if s.tree.variant() == Variant::Hilbert => IndexKind::Hilbert,
            IndexData::Spatial(_) => IndexKind::Rtree,
            IndexData::Mt(_) => IndexKind::Mt,
            IndexData::PathDict(_) => IndexKind::PathDict,
        }
    }

    pub fn entry_count(&self) -> usize {
        match self {
            IndexData::Btree(b) => b.len(),
            IndexData::Spatial(s) => s.tree.len(),
            IndexData::Mt(m) => m.len(),
            IndexData::PathDict(p) => p.len(),
        }
    }

    pub fn image(&self) -> IndexImage {
        let tree_image = |t: &RTree| IndexImage {
            meta: bincode::serialize(&TreeMeta { variant: t.variant(), params: t.params().clone(), len: t.len() }).unwrap(),
            pages: t.to_pages(),
        };
        match self {
            IndexData::Btree(b) => {
                let entries: Vec<&(TypedKey, Oid)> = b.set.iter().collect();
                IndexImage { meta: bincode::serialize(&entries).unwrap(), pages: Vec::new() }
            }
            IndexData::Spatial(s) => tree_image(&s.tree),
            IndexData::Mt(m) => tree_image(m.tree()),
            IndexData::PathDict(p) => IndexImage { meta: p.to_bytes(), pages: Vec::new() },
        }
    }

    pub fn from_image(decl: &IndexDecl, objs: &Objects, img: &IndexImage) -> Result<IndexData, StoreError> {
        let corrupt = |e: bincode::Error| StoreError::Corrupt(format!("index {}: {e}", decl.name()));
        let tree = |img: &IndexImage| -> Result<RTree, StoreError> {
            let m: TreeMeta = bincode::deserialize(&img.meta).map_err(corrupt)?;
            Ok(RTree::from_pages(m.variant, m.params, m.len, &img.pages)?)
        };
        Ok(match decl.kind {
            IndexKind::Btree => {
                let (cid, pos) = single_attr(objs, decl)?;
                let entries: Vec<(TypedKey, Oid)> = bincode::deserialize(&img.meta).map_err(corrupt)?;
                IndexData::Btree(BtreeIndex { class_id: cid, attr_pos: pos, set: entries.into_iter().collect() })
            }
            IndexKind::Rtree | IndexKind::Hilbert => {
                let (cid, pos) = single_attr(objs, decl)?;
                IndexData::Spatial(SpatialIndex { class_id: cid, attr_pos: pos, tree: tree(img)? })
            }
            IndexKind::Mt => {
                let (cid, pos) = single_attr(objs, decl)?;
                IndexData::Mt(MtIndex::from_tree(objs, cid, pos, tree(img)?))
            }
            IndexKind::PathDict => IndexData::PathDict(
                PathDictionary::from_bytes(objs, &decl.class, &decl.path, &img.meta)
                    .map_err(|e| StoreError::Corrupt(format!("index {}: {e}", decl.name())))?,
            ),
        })
    }

    /// Human-readable dump for debugging.
    pub fn dump(&self) -> String {
        match self {
            IndexData::Btree(b) => {
                let mut out = String::new();
                for (k, o) in &b.set {
                    out.push_str(&format!("{} {}\n", hex(&k.0), o));
                }
                out
            }
            IndexData::Spatial(s) => s.tree.dump(),
            IndexData::Mt(m) => m.tree().dump(),
            IndexData::PathDict(p) => p.dump(),
        }
    }
}

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

/// Geometry stored in `oid`'s field, if any.
pub fn geometry_of<'a>(objs: &'a Objects, oid: Oid, attr_pos: usize) -> Option<&'a Geometry> {
    match objs.get(oid).ok()?.fields.get(attr_pos)? {
        Value::Geom(g) => Some(g),
        _ => None,
    }
}
