//! Multi-key type index: every object of the indexed subtree becomes a point
//! (typecode, key rank) in an R*-tree. A class query is a window whose x-range
//! is the class's typecode interval; the rank axis is an 8-byte key prefix,
//! so candidates are refined against the exact key on the base object.

use super::HidxError;
use crate::geom::{Point, Rect};
use crate::oid::Oid;
use crate::sidx::{RTree, SpatialEntry, TreeParams, Variant};
use crate::store::index::range_is_empty;
use crate::store::{Objects, Record, TypedKey};
use std::ops::Bound;

#[derive(Debug, Clone)]
pub struct MtIndex {
    class_id: usize,
    attr_pos: usize,
    interval: (u32, u32),
    tree: RTree,
}

fn rank_axis(k: &TypedKey) -> f64 {
    k.rank() as f64
}

fn point_of(typecode: u32, key: &TypedKey) -> Rect {
    Rect::from_point(Point { x: typecode as f64, y: rank_axis(key) })
}

impl MtIndex {
    pub fn build(objs: &Objects, class_id: usize, attr_pos: usize) -> Result<MtIndex, HidxError> {
        let mut ix = MtIndex::from_tree(objs, class_id, attr_pos, RTree::new(Variant::RStar, TreeParams::default()));
        for (oid, rec) in objs.scan(class_id, true) {
            ix.insert(objs, oid, rec)?;
        }
        Ok(ix)
    }

    pub fn from_tree(objs: &Objects, class_id: usize, attr_pos: usize, tree: RTree) -> MtIndex {
        let cat = objs.catalog();
        let iv = cat.subtree_interval(&cat.class(class_id).name).expect("class id is valid");
        MtIndex { class_id, attr_pos, interval: (iv.lo, iv.hi), tree }
    }

    pub fn tree(&self) -> &RTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn attr_pos(&self) -> usize {
        self.attr_pos
    }

    fn covers(&self, rec: &Record) -> bool {
        (self.interval.0..=self.interval.1).contains(&rec.typecode)
    }

    pub fn insert(&mut self, _objs: &Objects, oid: Oid, rec: &Record) -> Result<(), HidxError> {
        if !self.covers(rec) {
            return Ok(());
        }
        if let Some(k) = rec.fields[self.attr_pos].to_key()? {
            self.tree.insert(SpatialEntry { key: point_of(rec.typecode, &k), oid })?;
        }
        Ok(())
    }

    pub fn remove(&mut self, _objs: &Objects, oid: Oid, rec: &Record) -> Result<(), HidxError> {
        if !self.covers(rec) {
            return Ok(());
        }
        if let Some(k) = rec.fields[self.attr_pos].to_key()? {
            self.tree.delete(&SpatialEntry { key: point_of(rec.typecode, &k), oid });
        }
        Ok(())
    }

    /// Objects of `class`'s subtree whose key lies in the range, sorted by
    /// oid.
    pub fn query(&self, objs: &Objects, class: &str, lo: Bound<&TypedKey>, hi: Bound<&TypedKey>) -> Result<Vec<Oid>, HidxError> {
        let cat = objs.catalog();
        let iv = cat.subtree_interval(class).map_err(|_| HidxError::UnknownClass(class.to_string()))?;
        if iv.lo < self.interval.0 || iv.hi > self.interval.1 {
            return Err(HidxError::OutsideSubtree { class: class.to_string(), root: cat.class(self.class_id).name.clone() });
        }
        if range_is_empty(lo, hi) {
            return Ok(Vec::new());
        }
        let ylo = match lo {
            Bound::Included(k) | Bound::Excluded(k) => rank_axis(k),
            Bound::Unbounded => 0.0,
        };
        let yhi = match hi {
            Bound::Included(k) | Bound::Excluded(k) => rank_axis(k),
            Bound::Unbounded => u64::MAX as f64,
        };
        let window = Rect { xmin: iv.lo as f64, ymin: ylo, xmax: iv.hi as f64, ymax: yhi };
        let mut out = Vec::new();
        for oid in self.tree.window_query(window) {
            let Ok(rec) = objs.get(oid) else { continue };
            let Some(k) = rec.fields[self.attr_pos].to_key()? else { continue };
            if (lo, hi).contains(&k) && iv.contains(rec.typecode) {
                out.push(oid);
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

trait RangeContains {
    fn contains(&self, k: &TypedKey) -> bool;
}

impl RangeContains for (Bound<&TypedKey>, Bound<&TypedKey>) {
    fn contains(&self, k: &TypedKey) -> bool {
        std::ops::RangeBounds::contains(self, k)
    }
}
