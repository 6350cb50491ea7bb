//! Disk-page oriented R-tree with two maintenance policies:
//!
//! * `RStar`: R*-tree choose-subtree, forced reinsertion on the first overflow
//!   per level during one insertion, and margin/overlap driven splits.
//! * `Hilbert`: entries kept in Hilbert order with each internal entry
//!   carrying the largest Hilbert value (LHV) of its subtree; overflow spills
//!   into one cooperating sibling and splits 2-to-3 when both are full.
//!
//! Nodes live in an arena indexed by [`NodeId`]; each node serializes into one
//! fixed-size page.

use super::hilbert::hilbert_value;
use super::{SidxError, SpatialEntry};
use crate::geom::Rect;
use crate::oid::Oid;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    RStar,
    Hilbert,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::RStar => "rstar",
            Variant::Hilbert => "hilbert",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// M: maximum entries per node.
    pub max_entries: usize,
    /// m: minimum entries per non-root node.
    pub min_entries: usize,
    /// Share of M removed for forced reinsertion (R* only).
    pub reinsert_fraction: f64,
    /// Hilbert curve order k used for entry keys (Hilbert only).
    pub hilbert_order: u32,
    /// Target leaf fill for bulk loading, in (0, 1].
    pub fill_factor: f64,
    /// Data space the Hilbert grid is laid over.
    pub world: Rect,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams::with_fanout(32)
    }
}

impl TreeParams {
    pub fn with_fanout(max_entries: usize) -> Self {
        TreeParams {
            max_entries,
            min_entries: ((max_entries as f64 * 0.4).floor() as usize).max(2),
            reinsert_fraction: 0.3,
            hilbert_order: 16,
            fill_factor: 1.0,
            world: Rect { xmin: -1.0e6, ymin: -1.0e6, xmax: 1.0e6, ymax: 1.0e6 },
        }
    }

    pub fn with_world(mut self, world: Rect) -> Self {
        self.world = world;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    rect: Rect,
    /// Packed oid in leaves, child node id in internal nodes.
    id: u64,
    /// Hilbert value (leaf) or LHV of the child subtree (internal); 0 for R*.
    hv: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    /// 0 for leaves.
    level: u32,
    entries: Vec<Entry>,
}

#[derive(Debug, Clone)]
pub struct RTree {
    variant: Variant,
    params: TreeParams,
    nodes: Vec<Node>,
    free: Vec<NodeId>,
    root: NodeId,
    len: usize,
}

/// Size of one serialized node page.
pub const NODE_PAGE_BYTES: usize = 8192;
const ENTRY_BYTES: usize = 48;

impl RTree {
    pub fn new(variant: Variant, params: TreeParams) -> Self {
        assert!(params.max_entries >= 4, "fanout too small");
        assert!(params.min_entries >= 1 && params.min_entries * 2 <= params.max_entries);
        assert!(8 + (params.max_entries + 1) * ENTRY_BYTES <= NODE_PAGE_BYTES, "node does not fit a page");
        RTree {
            variant,
            params,
            nodes: vec![Node { level: 0, entries: Vec::new() }],
            free: Vec::new(),
            root: 0,
            len: 0,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of levels; a lone leaf root has height 1.
    pub fn height(&self) -> usize {
        self.node(self.root).level as usize + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    /// MBR of all stored entries.
    pub fn bounds(&self) -> Option<Rect> {
        self.node_mbr(self.root)
    }

    fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id as usize]
    }

    fn alloc(&mut self, level: u32) -> NodeId {
        let node = Node { level, entries: Vec::with_capacity(self.params.max_entries + 1) };
        if let Some(id) = self.free.pop() {
            self.nodes[id as usize] = node;
            id
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as NodeId
        }
    }

    fn release(&mut self, id: NodeId) {
        self.nodes[id as usize].entries.clear();
        self.free.push(id);
    }

    fn node_mbr(&self, id: NodeId) -> Option<Rect> {
        self.node(id).entries.iter().map(|e| e.rect).reduce(|a, b| a.union(&b))
    }

    fn node_lhv(&self, id: NodeId) -> u64 {
        self.node(id).entries.iter().map(|e| e.hv).max().unwrap_or(0)
    }

    fn entry_for(&self, id: NodeId) -> Entry {
        Entry {
            rect: self.node_mbr(id).expect("non-empty node"),
            id: id as u64,
            hv: if self.variant == Variant::Hilbert { self.node_lhv(id) } else { 0 },
        }
    }

    fn refresh(&mut self, parent: NodeId, idx: usize) {
        let child = self.node(parent).entries[idx].id as NodeId;
        let e = self.entry_for(child);
        self.node_mut(parent).entries[idx] = e;
    }

    fn refresh_path(&mut self, path: &[(NodeId, usize)]) {
        for &(n, i) in path.iter().rev() {
            self.refresh(n, i);
        }
    }

    fn leaf_entry(&self, e: &SpatialEntry) -> Result<Entry, SidxError> {
        let hv = match self.variant {
            Variant::RStar => 0,
            Variant::Hilbert => hilbert_value(&e.key, self.params.hilbert_order, &self.params.world)?.0,
        };
        Ok(Entry { rect: e.key, id: e.oid.to_u64(), hv })
    }

    /// Adds `e`; duplicates are kept (multiset semantics).
    pub fn insert(&mut self, e: SpatialEntry) -> Result<(), SidxError> {
        let entry = self.leaf_entry(&e)?;
        let mut reinserted = vec![false; self.height() + 1];
        self.insert_at(entry, 0, &mut reinserted);
        self.len += 1;
        Ok(())
    }

    fn choose(&self, node: NodeId, e: &Entry) -> usize {
        let n = self.node(node);
        match self.variant {
            Variant::Hilbert => n.entries.iter().position(|c| c.hv >= e.hv).unwrap_or(n.entries.len() - 1),
            Variant::RStar if n.level == 1 => {
                // Children are leaves: least overlap enlargement.
                let mut best = 0;
                let mut best_key = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
                for (k, c) in n.entries.iter().enumerate() {
                    let grown = c.rect.union(&e.rect);
                    let mut overlap = 0.0;
                    for (j, o) in n.entries.iter().enumerate() {
                        if j != k {
                            overlap += grown.intersection_area(&o.rect) - c.rect.intersection_area(&o.rect);
                        }
                    }
                    let key = (overlap, grown.area() - c.rect.area(), c.rect.area());
                    if key < best_key {
                        best_key = key;
                        best = k;
                    }
                }
                best
            }
            Variant::RStar => {
                let mut best = 0;
                let mut best_key = (f64::INFINITY, f64::INFINITY);
                for (k, c) in n.entries.iter().enumerate() {
                    let key = (c.rect.union(&e.rect).area() - c.rect.area(), c.rect.area());
                    if key < best_key {
                        best_key = key;
                        best = k;
                    }
                }
                best
            }
        }
    }

    fn place(&mut self, node: NodeId, e: Entry) {
        let variant = self.variant;
        let entries = &mut self.node_mut(node).entries;
        match variant {
            Variant::RStar => entries.push(e),
            Variant::Hilbert => {
                let pos = entries.partition_point(|x| x.hv <= e.hv);
                entries.insert(pos, e);
            }
        }
    }

    /// Places `entry` into a node at `level` (0 = leaf) and repairs overflow.
    fn insert_at(&mut self, entry: Entry, level: u32, reinserted: &mut Vec<bool>) {
        let mut path: Vec<(NodeId, usize)> = Vec::new();
        let mut cur = self.root;
        while self.node(cur).level > level {
            let idx = self.choose(cur, &entry);
            path.push((cur, idx));
            cur = self.node(cur).entries[idx].id as NodeId;
        }
        self.place(cur, entry);

        loop {
            let overflow = self.node(cur).entries.len() > self.params.max_entries;
            let Some((parent, idx)) = path.pop() else {
                if overflow {
                    self.split_root();
                }
                return;
            };
            if overflow {
                match self.variant {
                    Variant::RStar => {
                        let lvl = self.node(cur).level as usize;
                        if reinserted.len() <= lvl {
                            reinserted.resize(lvl + 1, false);
                        }
                        if !reinserted[lvl] {
                            reinserted[lvl] = true;
                            let removed = self.take_far_entries(cur);
                            self.refresh(parent, idx);
                            self.refresh_path(&path);
                            for e in removed {
                                self.insert_at(e, lvl as u32, reinserted);
                            }
                            return;
                        }
                        let sibling = self.split_rstar(cur);
                        self.refresh(parent, idx);
                        let e = self.entry_for(sibling);
                        self.node_mut(parent).entries.push(e);
                    }
                    Variant::Hilbert => self.spill_or_split(parent, idx),
                }
            } else {
                self.refresh(parent, idx);
            }
            cur = parent;
        }
    }

    /// Removes the reinsert share of entries farthest from the node centre;
    /// returned nearest-first.
    fn take_far_entries(&mut self, node: NodeId) -> Vec<Entry> {
        let center = self.node_mbr(node).unwrap().center();
        let count = ((self.params.max_entries as f64 * self.params.reinsert_fraction).round() as usize).max(1);
        let entries = &mut self.node_mut(node).entries;
        let dist = |e: &Entry| e.rect.center().dist(&center);
        entries.sort_by(|a, b| dist(b).total_cmp(&dist(a)));
        let mut removed: Vec<Entry> = entries.drain(..count).collect();
        removed.reverse();
        removed
    }

    fn split_root(&mut self) {
        let old = self.root;
        let sibling = match self.variant {
            Variant::RStar => self.split_rstar(old),
            Variant::Hilbert => self.split_half(old),
        };
        let level = self.node(old).level + 1;
        let root = self.alloc(level);
        let a = self.entry_for(old);
        let b = self.entry_for(sibling);
        self.node_mut(root).entries.extend([a, b]);
        self.root = root;
    }

    fn split_half(&mut self, node: NodeId) -> NodeId {
        let level = self.node(node).level;
        let sibling = self.alloc(level);
        let n = self.node(node).entries.len();
        let tail = self.node_mut(node).entries.split_off(n / 2);
        self.node_mut(sibling).entries = tail;
        sibling
    }

    /// R* split: axis with least margin sum, then distribution with least
    /// overlap (ties by area). The second group moves to a new node.
    fn split_rstar(&mut self, node: NodeId) -> NodeId {
        let m = self.params.min_entries;
        let mut entries = std::mem::take(&mut self.node_mut(node).entries);
        let total = entries.len();
        let distributions = total - 2 * m + 1;

        let sorts: [fn(&Entry, &Entry) -> std::cmp::Ordering; 4] = [
            |a, b| a.rect.xmin.total_cmp(&b.rect.xmin).then(a.rect.xmax.total_cmp(&b.rect.xmax)),
            |a, b| a.rect.xmax.total_cmp(&b.rect.xmax).then(a.rect.xmin.total_cmp(&b.rect.xmin)),
            |a, b| a.rect.ymin.total_cmp(&b.rect.ymin).then(a.rect.ymax.total_cmp(&b.rect.ymax)),
            |a, b| a.rect.ymax.total_cmp(&b.rect.ymax).then(a.rect.ymin.total_cmp(&b.rect.ymin)),
        ];
        let group_rects = |v: &[Entry], k: usize| -> (Rect, Rect) {
            let first = v[..k].iter().map(|e| e.rect).reduce(|a, b| a.union(&b)).unwrap();
            let second = v[k..].iter().map(|e| e.rect).reduce(|a, b| a.union(&b)).unwrap();
            (first, second)
        };

        let mut best_axis = 0;
        let mut best_margin = f64::INFINITY;
        for axis in 0..2 {
            let mut margin = 0.0;
            for sort in &sorts[axis * 2..axis * 2 + 2] {
                entries.sort_by(sort);
                for d in 0..distributions {
                    let (a, b) = group_rects(&entries, m + d);
                    margin += a.margin() + b.margin();
                }
            }
            if margin < best_margin {
                best_margin = margin;
                best_axis = axis;
            }
        }

        let mut best: Option<(usize, usize)> = None;
        let mut best_key = (f64::INFINITY, f64::INFINITY);
        for (s, sort) in sorts[best_axis * 2..best_axis * 2 + 2].iter().enumerate() {
            entries.sort_by(sort);
            for d in 0..distributions {
                let (a, b) = group_rects(&entries, m + d);
                let key = (a.intersection_area(&b), a.area() + b.area());
                if key < best_key {
                    best_key = key;
                    best = Some((s, m + d));
                }
            }
        }
        let (s, k) = best.unwrap();
        entries.sort_by(sorts[best_axis * 2 + s]);
        let second = entries.split_off(k);
        let level = self.node(node).level;
        self.node_mut(node).entries = entries;
        let sibling = self.alloc(level);
        self.node_mut(sibling).entries = second;
        sibling
    }

    /// Hilbert overflow of child `idx` of `parent`: share with an adjacent
    /// sibling, or split the pair 2-to-3 when both are full.
    fn spill_or_split(&mut self, parent: NodeId, idx: usize) {
        let n = self.node(parent).entries.len();
        let sib = if idx + 1 < n {
            Some(idx + 1)
        } else if idx > 0 {
            Some(idx - 1)
        } else {
            None
        };
        let Some(sib) = sib else {
            let child = self.node(parent).entries[idx].id as NodeId;
            let sibling = self.split_half(child);
            self.refresh(parent, idx);
            let e = self.entry_for(sibling);
            self.node_mut(parent).entries.insert(idx + 1, e);
            return;
        };
        let (a, b) = (idx.min(sib), idx.max(sib));
        let na = self.node(parent).entries[a].id as NodeId;
        let nb = self.node(parent).entries[b].id as NodeId;
        let mut all = std::mem::take(&mut self.node_mut(na).entries);
        all.append(&mut self.node_mut(nb).entries);
        let targets = if all.len() <= 2 * self.params.max_entries {
            vec![na, nb]
        } else {
            let level = self.node(na).level;
            vec![na, nb, self.alloc(level)]
        };
        let k = targets.len();
        let (base, extra) = (all.len() / k, all.len() % k);
        let mut rest = all.into_iter();
        for (i, &t) in targets.iter().enumerate() {
            let take = base + usize::from(i < extra);
            self.node_mut(t).entries = rest.by_ref().take(take).collect();
        }
        self.refresh(parent, a);
        self.refresh(parent, b);
        if k == 3 {
            let e = self.entry_for(targets[2]);
            self.node_mut(parent).entries.insert(b + 1, e);
        }
    }

    /// Removes one entry matching `(key, oid)` exactly.
    pub fn delete(&mut self, e: &SpatialEntry) -> bool {
        let target = e.oid.to_u64();
        let mut path = Vec::new();
        let Some((leaf, pos)) = self.find_leaf(self.root, &e.key, target, &mut path) else {
            return false;
        };
        self.node_mut(leaf).entries.remove(pos);
        self.len -= 1;

        let mut orphans: Vec<(Entry, u32)> = Vec::new();
        let mut cur = leaf;
        while let Some((parent, idx)) = path.pop() {
            if self.node(cur).entries.len() < self.params.min_entries {
                self.node_mut(parent).entries.remove(idx);
                let level = self.node(cur).level;
                let removed = std::mem::take(&mut self.node_mut(cur).entries);
                orphans.extend(removed.into_iter().map(|x| (x, level)));
                self.release(cur);
            } else {
                self.refresh(parent, idx);
            }
            cur = parent;
        }

        let root_level = self.node(self.root).level;
        if root_level > 0 && self.node(self.root).entries.is_empty() {
            self.node_mut(self.root).level = 0;
        }
        for (entry, level) in orphans {
            let root_level = self.node(self.root).level;
            if self.variant == Variant::Hilbert || level == 0 || level >= root_level {
                let mut leaves = Vec::new();
                self.collect_leaf_entries(entry, level, &mut leaves);
                for l in leaves {
                    let mut flags = vec![false; self.height() + 1];
                    self.insert_at(l, 0, &mut flags);
                }
            } else {
                let mut flags = vec![false; self.height() + 1];
                self.insert_at(entry, level, &mut flags);
            }
        }

        while self.node(self.root).level > 0 && self.node(self.root).entries.len() == 1 {
            let old = self.root;
            self.root = self.node(old).entries[0].id as NodeId;
            self.release(old);
        }
        true
    }

    /// Leaf entries under an orphaned entry found in a node at `level`.
    fn collect_leaf_entries(&mut self, e: Entry, level: u32, out: &mut Vec<Entry>) {
        if level == 0 {
            out.push(e);
            return;
        }
        let child = e.id as NodeId;
        let entries = std::mem::take(&mut self.node_mut(child).entries);
        let child_level = self.node(child).level;
        self.release(child);
        for c in entries {
            self.collect_leaf_entries(c, child_level, out);
        }
    }

    fn find_leaf(&self, node: NodeId, key: &Rect, id: u64, path: &mut Vec<(NodeId, usize)>) -> Option<(NodeId, usize)> {
        let n = self.node(node);
        if n.level == 0 {
            return n.entries.iter().position(|e| e.id == id && e.rect == *key).map(|p| (node, p));
        }
        for (i, e) in n.entries.iter().enumerate() {
            if e.rect.contains_rect(key) {
                path.push((node, i));
                if let Some(found) = self.find_leaf(e.id as NodeId, key, id, path) {
                    return Some(found);
                }
                path.pop();
            }
        }
        None
    }

    /// Oids whose stored MBR intersects `window` (closed test).
    pub fn window_query(&self, window: Rect) -> WindowIter<'_> {
        WindowIter { tree: self, window, stack: vec![(self.root, 0)] }
    }

    /// Every stored entry, in leaf order.
    pub fn entries(&self) -> Vec<SpatialEntry> {
        let mut out = Vec::with_capacity(self.len);
        self.collect(self.root, &mut out);
        out
    }

    fn collect(&self, id: NodeId, out: &mut Vec<SpatialEntry>) {
        let n = self.node(id);
        for e in &n.entries {
            if n.level == 0 {
                out.push(SpatialEntry { key: e.rect, oid: Oid::from_u64(e.id) });
            } else {
                self.collect(e.id as NodeId, out);
            }
        }
    }

    /// Hilbert values of leaf entries, left to right (Hilbert variant).
    pub fn leaf_hilbert_values(&self) -> Vec<u64> {
        let mut out = Vec::new();
        fn walk(t: &RTree, id: NodeId, out: &mut Vec<u64>) {
            let n = t.node(id);
            for e in &n.entries {
                if n.level == 0 {
                    out.push(e.hv);
                } else {
                    walk(t, e.id as NodeId, out);
                }
            }
        }
        walk(self, self.root, &mut out);
        out
    }

    /// Mean node fill (entries / M) over all nodes.
    pub fn utilization(&self) -> Result<f64, SidxError> {
        if self.len == 0 {
            return Err(SidxError::EmptyTree);
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let n = self.node(id);
            sum += n.entries.len() as f64 / self.params.max_entries as f64;
            count += 1;
            if n.level > 0 {
                stack.extend(n.entries.iter().map(|e| e.id as NodeId));
            }
        }
        Ok(sum / count as f64)
    }

    /// Checks containment, fill bounds, uniform leaf depth, entry count and,
    /// for the Hilbert variant, LHV correctness and leaf ordering.
    pub fn validate(&self) -> Result<(), String> {
        let root = self.node(self.root);
        if root.entries.len() > self.params.max_entries {
            return Err(format!("root overfull: {}", root.entries.len()));
        }
        if root.level > 0 && root.entries.len() < 2 {
            return Err("internal root with fewer than two children".into());
        }
        let mut count = 0;
        self.validate_node(self.root, true, &mut count)?;
        if count != self.len {
            return Err(format!("entry count {count} != len {}", self.len));
        }
        if self.variant == Variant::Hilbert {
            let hv = self.leaf_hilbert_values();
            if let Some(w) = hv.windows(2).find(|w| w[0] > w[1]) {
                return Err(format!("leaf hilbert order broken: {} > {}", w[0], w[1]));
            }
        }
        Ok(())
    }

    fn validate_node(&self, id: NodeId, is_root: bool, count: &mut usize) -> Result<(), String> {
        let n = self.node(id);
        if !is_root && (n.entries.len() < self.params.min_entries || n.entries.len() > self.params.max_entries) {
            return Err(format!("node {id} at level {} holds {} entries", n.level, n.entries.len()));
        }
        if self.variant == Variant::Hilbert && n.entries.windows(2).any(|w| w[0].hv > w[1].hv) {
            return Err(format!("node {id} entries not in hilbert order"));
        }
        if n.level == 0 {
            *count += n.entries.len();
            return Ok(());
        }
        for e in &n.entries {
            let child = self.node(e.id as NodeId);
            if child.level + 1 != n.level {
                return Err(format!("child {} of node {id} at wrong level", e.id));
            }
            let mbr = self.node_mbr(e.id as NodeId).ok_or_else(|| format!("empty child {}", e.id))?;
            if !e.rect.contains_rect(&mbr) {
                return Err(format!("entry rect of child {} does not contain its MBR", e.id));
            }
            if self.variant == Variant::Hilbert && e.hv != self.node_lhv(e.id as NodeId) {
                return Err(format!("stale LHV for child {}", e.id));
            }
            self.validate_node(e.id as NodeId, false, count)?;
        }
        Ok(())
    }

    /// One node per line, preorder: `depth<TAB>mbr<TAB>children<TAB>lhv`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let n = self.node(id);
            let mbr = self.node_mbr(id);
            let mbr_text = match mbr {
                Some(r) => format!("{} {} {} {}", r.xmin, r.ymin, r.xmax, r.ymax),
                None => "empty".to_string(),
            };
            let _ = writeln!(out, "{depth}\t{mbr_text}\t{}\t{}", n.entries.len(), self.node_lhv(id));
            if n.level > 0 {
                for e in n.entries.iter().rev() {
                    stack.push((e.id as NodeId, depth + 1));
                }
            }
        }
        out
    }

    /// Packed Hilbert bulk load: entries sorted by Hilbert value, leaves
    /// filled to `fill_factor` (last node rebalanced with its neighbour if it
    /// would underflow), upper levels packed the same way.
    pub fn bulk_load_hilbert(entries: Vec<SpatialEntry>, params: TreeParams) -> Result<RTree, SidxError> {
        if entries.is_empty() {
            return Err(SidxError::EmptyInput);
        }
        let mut tree = RTree::new(Variant::Hilbert, params);
        let mut leaf_entries = entries.iter().map(|e| tree.leaf_entry(e)).collect::<Result<Vec<_>, _>>()?;
        leaf_entries.sort_by_key(|e| (e.hv, e.id));
        tree.len = leaf_entries.len();
        tree.nodes.clear();
        let per_node = ((tree.params.max_entries as f64 * tree.params.fill_factor).floor() as usize)
            .clamp(tree.params.min_entries, tree.params.max_entries);

        let mut level = 0u32;
        let mut current = leaf_entries;
        loop {
            let mut groups: Vec<Vec<Entry>> = current.chunks(per_node).map(|c| c.to_vec()).collect();
            if groups.len() > 1 && groups.last().unwrap().len() < tree.params.min_entries {
                let last = groups.pop().unwrap();
                let mut prev = groups.pop().unwrap();
                prev.extend(last);
                let tail = prev.split_off(prev.len() / 2);
                groups.push(prev);
                groups.push(tail);
            }
            let mut ids = Vec::with_capacity(groups.len());
            for g in groups {
                let id = tree.alloc(level);
                tree.node_mut(id).entries = g;
                ids.push(id);
            }
            if ids.len() == 1 {
                tree.root = ids[0];
                break;
            }
            current = ids.iter().map(|&id| tree.entry_for(id)).collect();
            level += 1;
        }
        Ok(tree)
    }

    /// Nodes renumbered breadth-first (root = 0), one page image each.
    pub fn to_pages(&self) -> Vec<Vec<u8>> {
        let mut order = vec![self.root];
        let mut i = 0;
        while i < order.len() {
            let n = self.node(order[i]);
            if n.level > 0 {
                order.extend(n.entries.iter().map(|e| e.id as NodeId));
            }
            i += 1;
        }
        let mut renumber = vec![u32::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            renumber[old as usize] = new as u32;
        }
        order
            .iter()
            .map(|&id| {
                let n = self.node(id);
                let mut page = Vec::with_capacity(8 + n.entries.len() * ENTRY_BYTES);
                page.extend_from_slice(&n.level.to_le_bytes());
                page.extend_from_slice(&(n.entries.len() as u32).to_le_bytes());
                for e in &n.entries {
                    for v in [e.rect.xmin, e.rect.ymin, e.rect.xmax, e.rect.ymax] {
                        page.extend_from_slice(&v.to_le_bytes());
                    }
                    let id = if n.level == 0 { e.id } else { renumber[e.id as usize] as u64 };
                    page.extend_from_slice(&id.to_le_bytes());
                    page.extend_from_slice(&e.hv.to_le_bytes());
                }
                page
            })
            .collect()
    }

    pub fn from_pages(variant: Variant, params: TreeParams, len: usize, pages: &[Vec<u8>]) -> Result<RTree, SidxError> {
        let corrupt = || SidxError::Corrupt("node page truncated".into());
        let mut nodes = Vec::with_capacity(pages.len());
        for page in pages {
            let word = |at: usize| -> Result<[u8; 8], SidxError> {
                page.get(at..at + 8).and_then(|s| s.try_into().ok()).ok_or_else(corrupt)
            };
            let head: [u8; 8] = word(0)?;
            let level = u32::from_le_bytes(head[..4].try_into().unwrap());
            let count = u32::from_le_bytes(head[4..].try_into().unwrap()) as usize;
            let mut entries = Vec::with_capacity(count);
            for k in 0..count {
                let base = 8 + k * ENTRY_BYTES;
                let f = |j: usize| word(base + j * 8).map(f64::from_le_bytes);
                let rect = Rect { xmin: f(0)?, ymin: f(1)?, xmax: f(2)?, ymax: f(3)? };
                let id = u64::from_le_bytes(word(base + 32)?);
                let hv = u64::from_le_bytes(word(base + 40)?);
                if level > 0 && id as usize >= pages.len() {
                    return Err(SidxError::Corrupt(format!("child {id} out of range")));
                }
                entries.push(Entry { rect, id, hv });
            }
            nodes.push(Node { level, entries });
        }
        if nodes.is_empty() {
            return Err(SidxError::Corrupt("no root page".into()));
        }
        Ok(RTree { variant, params, nodes, free: Vec::new(), root: 0, len })
    }
}

pub struct WindowIter<'a> {
    tree: &'a RTree,
    window: Rect,
    stack: Vec<(NodeId, usize)>,
}

impl Iterator for WindowIter<'_> {
    type Item = Oid;

    fn next(&mut self) -> Option<Oid> {
        while let Some((id, pos)) = self.stack.last_mut() {
            let node = self.tree.node(*id);
            if *pos >= node.entries.len() {
                self.stack.pop();
                continue;
            }
            let e = node.entries[*pos];
            *pos += 1;
            if !e.rect.intersects(&self.window) {
                continue;
            }
            if node.level == 0 {
                return Some(Oid::from_u64(e.id));
            }
            self.stack.push((e.id as NodeId, 0));
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(i: u32, x: f64, y: f64) -> SpatialEntry {
        SpatialEntry { key: Rect::new(x, y, x + 1.0, y + 1.0).unwrap(), oid: Oid::new(0, i) }
    }

    #[test]
    fn empty_tree() {
        let t = RTree::new(Variant::RStar, TreeParams::default());
        assert_eq!(t.window_query(Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap()).count(), 0);
        assert_eq!(t.utilization(), Err(SidxError::EmptyTree));
        t.validate().unwrap();
    }

    #[test]
    fn duplicates_are_kept() {
        for v in [Variant::RStar, Variant::Hilbert] {
            let mut t = RTree::new(v, TreeParams::default());
            t.insert(entry(1, 0.0, 0.0)).unwrap();
            t.insert(entry(1, 0.0, 0.0)).unwrap();
            assert_eq!(t.window_query(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap()).count(), 2);
            assert!(t.delete(&entry(1, 0.0, 0.0)));
            assert_eq!(t.len(), 1);
        }
    }

    #[test]
    fn delete_absent() {
        let mut t = RTree::new(Variant::Hilbert, TreeParams::default());
        t.insert(entry(1, 0.0, 0.0)).unwrap();
        assert!(!t.delete(&entry(2, 0.0, 0.0)));
        assert!(!t.delete(&entry(1, 5.0, 0.0)));
        assert!(t.delete(&entry(1, 0.0, 0.0)));
        assert!(t.is_empty());
    }

    #[test]
    fn grows_and_shrinks() {
        for v in [Variant::RStar, Variant::Hilbert] {
            let mut t = RTree::new(v, TreeParams::with_fanout(8));
            let es: Vec<_> = (0..500).map(|i| entry(i, (i % 37) as f64 * 3.0, (i / 37) as f64 * 3.0)).collect();
            for e in &es {
                t.insert(*e).unwrap();
                t.validate().unwrap();
            }
            assert!(t.height() > 2);
            for e in &es {
                assert!(t.delete(e));
                t.validate().unwrap();
            }
            assert_eq!(t.height(), 1);
        }
    }

    #[test]
    fn hilbert_insert_outside_world_fails() {
        let params = TreeParams::default().with_world(Rect::new(0.0, 0.0, 10.0, 10.0).unwrap());
        let mut t = RTree::new(Variant::Hilbert, params);
        assert_eq!(t.insert(entry(0, 20.0, 20.0)), Err(SidxError::OutOfDomain));
    }

    #[test]
    fn bulk_load_shapes() {
        assert_eq!(RTree::bulk_load_hilbert(vec![], TreeParams::default()).unwrap_err(), SidxError::EmptyInput);
        let one = RTree::bulk_load_hilbert(vec![entry(0, 0.0, 0.0)], TreeParams::default()).unwrap();
        assert_eq!((one.height(), one.node_count()), (1, 1));
        let full: Vec<_> = (0..32).map(|i| entry(i, i as f64, 0.0)).collect();
        let t = RTree::bulk_load_hilbert(full, TreeParams::default()).unwrap();
        assert_eq!((t.height(), t.node_count()), (1, 1));
        assert_eq!(t.utilization().unwrap(), 1.0);
    }

    #[test]
    fn page_round_trip() {
        let mut t = RTree::new(Variant::Hilbert, TreeParams::with_fanout(6));
        for i in 0..100 {
            t.insert(entry(i, (i * 7 % 50) as f64, (i * 3 % 40) as f64)).unwrap();
        }
        let pages = t.to_pages();
        assert!(pages.iter().all(|p| p.len() <= NODE_PAGE_BYTES));
        let back = RTree::from_pages(Variant::Hilbert, t.params().clone(), t.len(), &pages).unwrap();
        back.validate().unwrap();
        assert_eq!(back.to_pages(), pages);
        let w = Rect::new(10.0, 10.0, 30.0, 30.0).unwrap();
        let mut a: Vec<_> = t.window_query(w).collect();
        let mut b: Vec<_> = back.window_query(w).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn dump_lists_every_node() {
        let mut t = RTree::new(Variant::RStar, TreeParams::with_fanout(4));
        for i in 0..20 {
            t.insert(entry(i, i as f64, i as f64)).unwrap();
        }
        assert_eq!(t.dump().lines().count(), t.node_count());
        assert!(t.dump().starts_with("0\t0 0 20 20\t"));
    }
}
