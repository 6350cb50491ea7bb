//! Physical plans and the two planners.
//!
//! The naive planner binds variables in `from` order (collections by
//! dereference), applies each conjunct as soon as its variables are bound,
//! and uses no index. It is the reference the optimizer is checked against.
//!
//! The optimizer works on top-level conjuncts. Reference paths inside them
//! are unnested into hidden variables, one per (variable, attribute) prefix,
//! each tied to its parent by a link predicate; paths under `or`/`not` and in
//! the select list keep dereference semantics. A `from` binding over a
//! collection becomes a scan of the element class plus a link that counts
//! occurrences, so duplicates survive exactly as they do under unnesting.
//! Joins over links are value joins: without a path dictionary a link is
//! checked by scanning the child extent for each outer row.
//!
//! `from` variables are then ordered greedily: each round binds the variable
//! with the smallest estimated output, ties going to variables that do not
//! wait on a blast receiver, then to source order. Its access path is the
//! applicable one with the lowest selectivity (btree, mt, spatial window,
//! dictionary lookups, blast probe), else an extent scan. Hidden variables
//! are materialized only when a conjunct or key expression needs them, by a
//! dictionary lookup from the root when one covers the chain and by link
//! joins otherwise.

use super::typeck::{CmpOp, Const, TExpr, Ty, TypedQuery, VarId, VarSource};
use crate::catalog::{Catalog, IndexKind};
use crate::store::{Database, Value};
use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Int,
    Real,
    Str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KeyBound {
    Unbounded,
    Incl(TExpr, KeyKind),
    Excl(TExpr, KeyKind),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    Expr(TExpr),
    Class { var: VarId, class_id: usize, subclasses: bool },
    /// `child` occurs in `parent.attr`; passes the row once per occurrence.
    Link { parent: VarId, attr_pos: usize, child: VarId, attr: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PdMode {
    /// Records holding the key object at `pos`.
    Identity { pos: usize, key: TExpr },
    /// Records whose terminal key lies in the range.
    Attr { lo: KeyBound, hi: KeyBound },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AccessOp {
    ExtentScan { var: VarId, class_id: usize, subclasses: bool },
    Unnest { var: VarId, parent: TExpr, attr_pos: usize, attr: String },
    BtreeScan { var: VarId, index: String, lo: KeyBound, hi: KeyBound },
    MtScan { var: VarId, index: String, class: String, lo: KeyBound, hi: KeyBound },
    RtreeWindow { var: VarId, index: String, window: TExpr },
    /// `binds[i]` is the variable at chain position `i`; already bound ones
    /// are checked instead of set.
    PdScan { index: String, mode: PdMode, binds: Vec<Option<VarId>> },
    /// Subjects come from `source` (parent variable, collection attribute)
    /// when given, else from the class extent.
    BlastProbe {
        var: VarId,
        query: TExpr,
        threshold: i32,
        attr_pos: usize,
        source: Option<(VarId, usize)>,
        class_id: usize,
        subclasses: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Access {
    pub op: AccessOp,
    /// Applied to every produced row.
    pub checks: Vec<Pred>,
    pub est: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(Access),
    /// Re-opens `inner` for every outer row.
    Join { outer: Box<Node>, inner: Access, est: f64 },
    Filter { input: Box<Node>, preds: Vec<Pred>, est: f64 },
}

impl Node {
    pub fn est(&self) -> f64 {
        match self {
            Node::Leaf(a) => a.est,
            Node::Join { est, .. } | Node::Filter { est, .. } => *est,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanVar {
    pub name: String,
    pub class_id: usize,
    pub subclasses: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub vars: Vec<PlanVar>,
    pub root: Node,
    pub columns: Vec<(String, TExpr)>,
    pub distinct: bool,
}

impl Plan {
    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }
}

/// Selectivity constants for predicates without better information.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Selectivity {
    pub range: f64,
    pub spatial: f64,
    pub blast: f64,
    pub other: f64,
}

impl Default for Selectivity {
    fn default() -> Self {
        Selectivity { range: 1.0 / 3.0, spatial: 0.1, blast: 0.01, other: 0.5 }
    }
}

/// Extent sizes and distinct counts, gathered lazily once per database
/// state and reused across plans.
pub struct PlanStats<'a> {
    db: &'a Database,
    extents: RefCell<HashMap<(usize, bool), f64>>,
    distinct: RefCell<HashMap<(usize, usize), f64>>,
}

impl<'a> PlanStats<'a> {
    pub fn new(db: &'a Database) -> Self {
        PlanStats { db, extents: RefCell::default(), distinct: RefCell::default() }
    }

    pub fn extent(&self, class_id: usize, subclasses: bool) -> f64 {
        *self.extents.borrow_mut().entry((class_id, subclasses)).or_insert_with(|| {
            let objs = self.db.objects();
            if subclasses {
                objs.catalog().subtree(class_id).iter().map(|c| objs.live_count(*c)).sum::<usize>() as f64
            } else {
                objs.live_count(class_id) as f64
            }
        })
    }

    /// Distinct non-null values of an attribute over a class subtree.
    pub fn distinct(&self, class_id: usize, pos: usize) -> f64 {
        if let Some(d) = self.distinct.borrow().get(&(class_id, pos)) {
            return *d;
        }
        let mut seen: HashSet<Vec<u8>> = HashSet::new();
        let mut others = 0usize;
        for (_, rec) in self.db.objects().scan(class_id, true) {
            match &rec.fields[pos] {
                Value::Null => {}
                Value::Ref(o) => {
                    seen.insert(o.to_u64().to_be_bytes().to_vec());
                }
                v => match v.to_key() {
                    Ok(Some(k)) => {
                        seen.insert(k.0);
                    }
                    _ => others += 1,
                },
            }
        }
        let d = ((seen.len() + others) as f64).max(1.0);
        self.distinct.borrow_mut().insert((class_id, pos), d);
        d
    }
}

pub fn naive(q: &TypedQuery, stats: &PlanStats) -> Plan {
    let vars: Vec<PlanVar> =
        q.vars.iter().map(|v| PlanVar { name: v.name.clone(), class_id: v.class_id, subclasses: v.subclasses }).collect();
    let sel = Selectivity::default();
    let mut applied = vec![false; q.conjuncts.len()];
    let mut node: Option<Node> = None;
    let mut card = 1.0;
    for (i, v) in q.vars.iter().enumerate() {
        let (op, size) = match &v.source {
            VarSource::Extent => {
                (AccessOp::ExtentScan { var: i, class_id: v.class_id, subclasses: v.subclasses }, stats.extent(v.class_id, v.subclasses))
            }
            VarSource::Path { parent, attr_pos, attr, .. } => {
                (AccessOp::Unnest { var: i, parent: parent.clone(), attr_pos: *attr_pos, attr: attr.clone() }, 1.0)
            }
        };
        card *= size;
        let acc = Access { op, checks: Vec::new(), est: card };
        node = Some(match node {
            None => Node::Leaf(acc),
            Some(n) => Node::Join { outer: Box::new(n), inner: acc, est: card },
        });
        let mut preds = Vec::new();
        for (k, c) in q.conjuncts.iter().enumerate() {
            if !applied[k] && c.vars().iter().all(|x| *x <= i) {
                applied[k] = true;
                card *= expr_sel(c, &sel, &|e| plain_distinct(e, q, stats), stats, &|x| (q.vars[x].class_id, q.vars[x].subclasses));
                preds.push(Pred::Expr(c.clone()));
            }
        }
        if !preds.is_empty() {
            node = Some(Node::Filter { input: Box::new(node.take().expect("node built above")), preds, est: card });
        }
    }
    Plan { vars, root: node.expect("queries bind at least one variable"), columns: q.columns.clone(), distinct: q.distinct }
}

fn plain_distinct(e: &TExpr, q: &TypedQuery, stats: &PlanStats) -> Option<f64> {
    match e {
        TExpr::Var(x) => Some(stats.extent(q.vars[*x].class_id, q.vars[*x].subclasses)),
        TExpr::Field { obj, pos, .. } => match obj.as_ref() {
            TExpr::Var(x) => Some(stats.distinct(q.vars[*x].class_id, *pos)),
            _ => None,
        },
        _ => None,
    }
}

fn expr_sel(
    e: &TExpr,
    sel: &Selectivity,
    distinct: &dyn Fn(&TExpr) -> Option<f64>,
    stats: &PlanStats,
    class_of: &dyn Fn(VarId) -> (usize, bool),
) -> f64 {
    let rec = |x: &TExpr| expr_sel(x, sel, distinct, stats, class_of);
    match e {
        TExpr::Cmp(CmpOp::Eq, a, b) => match (distinct(a), distinct(b)) {
            (Some(x), Some(y)) => 1.0 / x.max(y),
            (Some(x), None) | (None, Some(x)) => 1.0 / x,
            (None, None) => sel.other,
        },
        TExpr::Cmp(CmpOp::Ne, a, b) => 1.0 - rec(&TExpr::Cmp(CmpOp::Eq, a.clone(), b.clone())),
        TExpr::Cmp(..) => sel.range,
        TExpr::Overlaps(..) | TExpr::Inside(..) => sel.spatial,
        TExpr::In(_, b) => match b.as_ref() {
            TExpr::Blast { .. } => sel.blast,
            TExpr::Field { obj, ty: Ty::List(_), .. } => match obj.as_ref() {
                TExpr::Var(p) => {
                    let (c, s) = class_of(*p);
                    1.0 / stats.extent(c, s).max(1.0)
                }
                _ => sel.other,
            },
            _ => sel.other,
        },
        TExpr::And(xs) => xs.iter().map(rec).product(),
        TExpr::Or(xs) => xs.iter().map(rec).sum::<f64>().min(1.0),
        TExpr::Not(x) => 1.0 - rec(x),
        TExpr::Const(Const::Bool(true)) => 1.0,
        _ => sel.other,
    }
}

enum Conj {
    Expr(TExpr),
    Link { parent: VarId, attr_pos: usize, child: VarId, attr: String, collection: bool },
}

/// One way to bind a `from` variable.
struct Candidate {
    op: AccessOp,
    /// Conjuncts the access enforces exactly.
    consumed: Vec<usize>,
    /// A consumed conjunct that must still be rechecked per row.
    recheck: Option<usize>,
    /// Hidden variables the key expression needs bound first.
    needs: Vec<VarId>,
    /// Hidden variables the access binds besides the target.
    binds_hidden: Vec<VarId>,
    sel: f64,
    rank: u8,
}

struct Hidden {
    parent: VarId,
    attr_pos: usize,
    attr: String,
}

struct Optimizer<'s, 'a> {
    cat: &'s Catalog,
    db: &'a Database,
    stats: &'s PlanStats<'a>,
    sel: &'s Selectivity,
    vars: Vec<PlanVar>,
    n_from: usize,
    root: Vec<VarId>,
    hidden: Vec<Option<Hidden>>,
    memo: HashMap<(VarId, usize), VarId>,
    conjs: Vec<Conj>,
    applied: Vec<bool>,
    bound: Vec<bool>,
}

fn key_kind(attr: &Ty, key: Option<Ty>) -> Option<KeyKind> {
    match (attr, key?) {
        (Ty::Int, Ty::Int) => Some(KeyKind::Int),
        (Ty::Real, Ty::Int | Ty::Real) => Some(KeyKind::Real),
        (Ty::Str, Ty::Str) => Some(KeyKind::Str),
        _ => None,
    }
}

fn static_ty(e: &TExpr) -> Option<Ty> {
    match e {
        TExpr::Const(Const::Int(_)) => Some(Ty::Int),
        TExpr::Const(Const::Real(_)) => Some(Ty::Real),
        TExpr::Const(Const::Str(_)) => Some(Ty::Str),
        TExpr::Field { ty, .. } => Some(ty.clone()),
        TExpr::Area { .. } => Some(Ty::Real),
        _ => None,
    }
}

fn bounds(op: CmpOp, k: TExpr, kind: KeyKind) -> Option<(KeyBound, KeyBound)> {
    Some(match op {
        CmpOp::Eq => (KeyBound::Incl(k.clone(), kind), KeyBound::Incl(k, kind)),
        CmpOp::Lt => (KeyBound::Unbounded, KeyBound::Excl(k, kind)),
        CmpOp::Le => (KeyBound::Unbounded, KeyBound::Incl(k, kind)),
        CmpOp::Gt => (KeyBound::Excl(k, kind), KeyBound::Unbounded),
        CmpOp::Ge => (KeyBound::Incl(k, kind), KeyBound::Unbounded),
        CmpOp::Ne => return None,
    })
}

impl<'s, 'a> Optimizer<'s, 'a> {
    fn class_of(&self, v: VarId) -> (usize, bool) {
        (self.vars[v].class_id, self.vars[v].subclasses)
    }

    fn hidden_var(&mut self, parent: VarId, pos: usize, attr: &str, class_id: usize) -> VarId {
        if let Some(h) = self.memo.get(&(parent, pos)) {
            return *h;
        }
        let h = self.vars.len();
        self.vars.push(PlanVar { name: format!("{}.{attr}", self.vars[parent].name), class_id, subclasses: true });
        self.root.push(self.root[parent]);
        self.hidden.push(Some(Hidden { parent, attr_pos: pos, attr: attr.to_string() }));
        self.bound.push(false);
        self.memo.insert((parent, pos), h);
        h
    }

    fn unnest(&mut self, e: TExpr) -> TExpr {
        match e {
            TExpr::Or(_) | TExpr::Not(_) | TExpr::Closest { .. } => e,
            e => {
                let e = e.map_children(&mut |c| self.unnest(c));
                if let TExpr::Field { obj, pos, name, ty: Ty::Obj(c) } = &e {
                    if let TExpr::Var(p) = obj.as_ref() {
                        return TExpr::Var(self.hidden_var(*p, *pos, name, *c));
                    }
                }
                e
            }
        }
    }

    /// Replaces area methods on polygon attributes with the cheapest
    /// registered equivalent.
    fn substitute(&self, e: TExpr) -> TExpr {
        let e = e.map_children(&mut |c| self.substitute(c));
        match e {
            TExpr::Area { arg, fan } if matches!(arg.as_ref(), TExpr::Field { ty: Ty::Polygon, .. }) => {
                let (m, _) = self.cat.cheapest_equivalent("polygon", if fan { "area_fan" } else { "area" });
                TExpr::Area { arg, fan: m == "area_fan" }
            }
            TExpr::Closest { class_id, attr_pos, label, probe, .. } => {
                let attr = &self.cat.all_attrs(class_id)[attr_pos].name;
                let index = self
                    .cat
                    .indexes()
                    .iter()
                    .filter(|d| matches!(d.kind, IndexKind::Rtree | IndexKind::Hilbert))
                    .find(|d| self.cat.class_id(&d.class) == Some(class_id) && d.path[0] == *attr)
                    .map(|d| d.name())
                    .filter(|n| self.db.index(n).is_some());
                TExpr::Closest { class_id, attr_pos, label, probe, index }
            }
            e => e,
        }
    }

    fn conj_vars(&self, c: &Conj) -> Vec<VarId> {
        match c {
            Conj::Expr(e) => e.vars(),
            Conj::Link { parent, child, .. } => vec![*parent, *child],
        }
    }

    fn roots(&self, vs: &[VarId]) -> Vec<VarId> {
        let mut r: Vec<VarId> = vs.iter().map(|v| self.root[*v]).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    fn from_bound(&self, v: VarId) -> bool {
        self.bound[self.root[v]]
    }

    fn distinct_of(&self, e: &TExpr) -> Option<f64> {
        match e {
            TExpr::Var(x) => {
                let (c, s) = self.class_of(*x);
                Some(self.stats.extent(c, s))
            }
            TExpr::Field { obj, pos, .. } => match obj.as_ref() {
                TExpr::Var(x) => Some(self.stats.distinct(self.vars[*x].class_id, *pos)),
                _ => None,
            },
            _ => None,
        }
    }

    fn conj_sel(&self, c: &Conj) -> f64 {
        match c {
            Conj::Link { parent, child, collection, .. } => {
                let (cls, sub) = self.class_of(if *collection { *parent } else { *child });
                1.0 / self.stats.extent(cls, sub).max(1.0)
            }
            Conj::Expr(e) => expr_sel(e, self.sel, &|x| self.distinct_of(x), self.stats, &|x| self.class_of(x)),
        }
    }

    /// Conjuncts that become evaluable once `v` is bound.
    fn newly_evaluable(&self, v: VarId) -> Vec<usize> {
        (0..self.conjs.len())
            .filter(|&k| !self.applied[k])
            .filter(|&k| {
                let r = self.roots(&self.conj_vars(&self.conjs[k]));
                r.contains(&v) && r.iter().all(|x| *x == v || self.bound[*x])
            })
            .collect()
    }

    fn estimate(&self, card: f64, v: VarId) -> f64 {
        let (c, s) = self.class_of(v);
        let mut est = card * self.stats.extent(c, s);
        for k in self.newly_evaluable(v) {
            est *= self.conj_sel(&self.conjs[k]);
        }
        est
    }

    /// The variable waits on an unbound blast receiver.
    fn defers(&self, v: VarId) -> bool {
        self.conjs.iter().enumerate().any(|(k, c)| {
            !self.applied[k]
                && matches!(c, Conj::Expr(TExpr::In(a, b))
                    if matches!(a.as_ref(), TExpr::Var(x) if *x == v)
                    && matches!(b.as_ref(), TExpr::Blast { query, .. } if !query.vars().iter().all(|q| self.from_bound(*q))))
        })
    }

    /// `e` depends only on bound `from` variables other than `v`.
    fn evaluable_without(&self, e: &TExpr, v: VarId) -> bool {
        e.vars().iter().all(|x| self.root[*x] != v && self.from_bound(*x))
    }

    fn unbound_hidden(&self, e: &TExpr) -> Vec<VarId> {
        e.vars().into_iter().filter(|x| !self.bound[*x]).collect()
    }

    fn chain(&self, h: VarId) -> Vec<VarId> {
        let mut c = vec![h];
        let mut cur = h;
        while let Some(hd) = &self.hidden[cur] {
            cur = hd.parent;
            c.push(cur);
        }
        c.reverse();
        c
    }

    fn chain_attrs(&self, chain: &[VarId]) -> Vec<String> {
        chain[1..].iter().map(|x| self.hidden[*x].as_ref().expect("chain members are hidden").attr.clone()).collect()
    }

    /// A path dictionary whose path is exactly `attrs` from a class covering
    /// `root`'s; returns its name and terminal attribute.
    fn find_pd(&self, root: VarId, attrs: &[String]) -> Option<(String, Option<String>)> {
        let (cls, _) = self.class_of(root);
        self.cat.indexes().iter().filter(|d| d.kind == IndexKind::PathDict).find_map(|d| {
            let cid = self.cat.class_id(&d.class)?;
            if !self.cat.is_subclass(cls, cid) {
                return None;
            }
            let shape = self.cat.resolve_path(&d.class, &d.path).ok()?;
            let steps: Vec<&String> = shape.steps.iter().map(|s| &s.attr).collect();
            (steps.len() == attrs.len() && steps.iter().zip(attrs).all(|(a, b)| *a == b) && self.db.index(&d.name()).is_some())
                .then(|| (d.name(), shape.terminal_attr.clone()))
        })
    }

    fn find_index(&self, kinds: &[IndexKind], v: VarId, attr: &str) -> Option<(String, usize)> {
        let (cls, _) = self.class_of(v);
        self.cat.indexes().iter().filter(|d| kinds.contains(&d.kind)).find_map(|d| {
            let cid = self.cat.class_id(&d.class)?;
            (self.cat.is_subclass(cls, cid) && d.path.len() == 1 && d.path[0] == attr && self.db.index(&d.name()).is_some())
                .then(|| (d.name(), cid))
        })
    }

    fn class_check(&self, v: VarId, index_class: usize) -> Option<Pred> {
        let (cls, sub) = self.class_of(v);
        (cls != index_class || !sub).then_some(Pred::Class { var: v, class_id: cls, subclasses: sub })
    }

    /// Candidate access paths for `v`, cheapest first.
    fn options(&self, v: VarId) -> Vec<Candidate> {
        let mut out = Vec::new();
        let (cls, sub) = self.class_of(v);
        for (k, c) in self.conjs.iter().enumerate() {
            if self.applied[k] {
                continue;
            }
            let r = self.roots(&self.conj_vars(c));
            if !(r.contains(&v) && r.iter().all(|x| *x == v || self.bound[*x])) {
                continue;
            }
            let s = self.conj_sel(c);
            match c {
                Conj::Expr(e) => self.expr_options(v, k, e, s, &mut out),
                Conj::Link { parent, attr_pos: _, child, attr, collection: _ } => {
                    if *child == v && self.from_bound(*parent) {
                        if let Some((name, _)) = self.find_pd(*parent, std::slice::from_ref(attr)) {
                            out.push(Candidate {
                                op: AccessOp::PdScan {
                                    index: name,
                                    mode: PdMode::Identity { pos: 0, key: TExpr::Var(*parent) },
                                    binds: vec![Some(*parent), Some(v)],
                                },
                                consumed: vec![k],
                                recheck: None,
                                needs: self.unbound_hidden(&TExpr::Var(*parent)),
                                binds_hidden: Vec::new(),
                                sel: s,
                                rank: 4,
                            });
                        }
                    } else if *parent == v && self.from_bound(*child) {
                        if let Some((name, _)) = self.find_pd(v, std::slice::from_ref(attr)) {
                            out.push(Candidate {
                                op: AccessOp::PdScan {
                                    index: name,
                                    mode: PdMode::Identity { pos: 1, key: TExpr::Var(*child) },
                                    binds: vec![Some(v), Some(*child)],
                                },
                                consumed: vec![k],
                                recheck: None,
                                needs: self.unbound_hidden(&TExpr::Var(*child)),
                                binds_hidden: Vec::new(),
                                sel: s,
                                rank: 4,
                            });
                        }
                    }
                }
            }
        }
        out.push(Candidate {
            op: AccessOp::ExtentScan { var: v, class_id: cls, subclasses: sub },
            consumed: Vec::new(),
            recheck: None,
            needs: Vec::new(),
            binds_hidden: Vec::new(),
            sel: 1.0,
            rank: 9,
        });
        out.sort_by(|a, b| a.sel.total_cmp(&b.sel).then(a.rank.cmp(&b.rank)));
        out
    }

    fn expr_options(&self, v: VarId, k: usize, e: &TExpr, s: f64, out: &mut Vec<Candidate>) {
        let field_of = |x: &TExpr| -> Option<(VarId, usize, String, Ty)> {
            match x {
                TExpr::Field { obj, pos, name, ty } => match obj.as_ref() {
                    TExpr::Var(h) => Some((*h, *pos, name.clone(), ty.clone())),
                    _ => None,
                },
                _ => None,
            }
        };
        match e {
            TExpr::Cmp(op, a, b) => {
                for (x, key, op) in [(a, b, *op), (b, a, op.flip())] {
                    if !self.evaluable_without(key, v) {
                        continue;
                    }
                    // Attribute of `v` itself: btree or mt.
                    if let Some((h, _pos, name, ty)) = field_of(x) {
                        if let Some(kind) = key_kind(&ty, static_ty(key)) {
                            let Some((lo, hi)) = bounds(op, (**key).clone(), kind) else { continue };
                            if h == v {
                                if let Some((index, _)) = self.find_index(&[IndexKind::Btree], v, &name) {
                                    out.push(Candidate {
                                        op: AccessOp::BtreeScan { var: v, index, lo: lo.clone(), hi: hi.clone() },
                                        consumed: vec![k],
                                        recheck: None,
                                        needs: self.unbound_hidden(key),
                                        binds_hidden: Vec::new(),
                                        sel: s,
                                        rank: 0,
                                    });
                                }
                                if let Some((index, _)) = self.find_index(&[IndexKind::Mt], v, &name) {
                                    out.push(Candidate {
                                        op: AccessOp::MtScan {
                                            var: v,
                                            index,
                                            class: self.cat.class(self.vars[v].class_id).name.clone(),
                                            lo: lo.clone(),
                                            hi: hi.clone(),
                                        },
                                        consumed: vec![k],
                                        recheck: None,
                                        needs: self.unbound_hidden(key),
                                        binds_hidden: Vec::new(),
                                        sel: s,
                                        rank: 1,
                                    });
                                }
                            } else if self.hidden[h].is_some() && self.root[h] == v {
                                let chain = self.chain(h);
                                if let Some((index, Some(term))) = self.find_pd(v, &self.chain_attrs(&chain)) {
                                    if term == name {
                                        out.push(Candidate {
                                            op: AccessOp::PdScan {
                                                index,
                                                mode: PdMode::Attr { lo, hi },
                                                binds: chain.iter().map(|x| Some(*x)).collect(),
                                            },
                                            consumed: vec![k],
                                            recheck: None,
                                            needs: self.unbound_hidden(key),
                                            binds_hidden: chain[1..].to_vec(),
                                            sel: s,
                                            rank: 3,
                                        });
                                    }
                                }
                            }
                        }
                    }
                    // Chain object equal to a bound object: identity lookup.
                    if let (CmpOp::Eq, TExpr::Var(h)) = (op, x.as_ref()) {
                        if self.hidden[*h].is_some() && self.root[*h] == v {
                            let chain = self.chain(*h);
                            if let Some((index, _)) = self.find_pd(v, &self.chain_attrs(&chain)) {
                                out.push(Candidate {
                                    op: AccessOp::PdScan {
                                        index,
                                        mode: PdMode::Identity { pos: chain.len() - 1, key: (**key).clone() },
                                        binds: chain.iter().map(|x| Some(*x)).collect(),
                                    },
                                    consumed: vec![k],
                                    recheck: None,
                                    needs: self.unbound_hidden(key),
                                    binds_hidden: chain[1..].to_vec(),
                                    sel: s,
                                    rank: 4,
                                });
                            }
                        }
                    }
                }
            }
            TExpr::Overlaps(a, b) | TExpr::Inside(a, b) => {
                for (x, key) in [(a, b), (b, a)] {
                    let Some((h, _, name, _)) = field_of(x) else { continue };
                    if h != v || !self.evaluable_without(key, v) {
                        continue;
                    }
                    if let Some((index, _)) = self.find_index(&[IndexKind::Rtree, IndexKind::Hilbert], v, &name) {
                        out.push(Candidate {
                            op: AccessOp::RtreeWindow { var: v, index, window: (**key).clone() },
                            consumed: vec![k],
                            recheck: Some(k),
                            needs: self.unbound_hidden(key),
                            binds_hidden: Vec::new(),
                            sel: s,
                            rank: 2,
                        });
                    }
                }
            }
            TExpr::In(a, b) => {
                let (TExpr::Var(x), TExpr::Blast { query, threshold, class_id, attr_pos }) = (a.as_ref(), b.as_ref()) else {
                    return;
                };
                let (cls, sub) = self.class_of(v);
                if *x != v || !self.evaluable_without(query, v) || !self.cat.is_subclass(cls, *class_id) {
                    return;
                }
                let mut consumed = vec![k];
                let mut source = None;
                for (j, c) in self.conjs.iter().enumerate() {
                    if let Conj::Link { parent, attr_pos: p, child, .. } = c {
                        if !self.applied[j] && *child == v && self.bound[*parent] && source.is_none() {
                            source = Some((*parent, *p));
                            consumed.push(j);
                        }
                    }
                }
                let sel: f64 = consumed.iter().map(|j| self.conj_sel(&self.conjs[*j])).product();
                out.push(Candidate {
                    op: AccessOp::BlastProbe {
                        var: v,
                        query: (**query).clone(),
                        threshold: *threshold,
                        attr_pos: *attr_pos,
                        source,
                        class_id: cls,
                        subclasses: sub,
                    },
                    consumed,
                    recheck: None,
                    needs: self.unbound_hidden(query),
                    binds_hidden: Vec::new(),
                    sel,
                    rank: 5,
                });
            }
            _ => {}
        }
    }

    /// Binds the hidden variables in `needed` (and their ancestors).
    fn materialize(&mut self, mut node: Node, needed: &[VarId]) -> Node {
        let mut all: Vec<VarId> = needed.iter().flat_map(|h| self.chain(*h)).filter(|x| self.hidden[*x].is_some()).collect();
        all.sort_unstable_by_key(|h| (self.root[*h], *h));
        all.dedup();
        for h in all {
            if self.bound[h] {
                continue;
            }
            let est = node.est();
            // Deepest needed chain through `h` that a dictionary covers.
            let mut through: Vec<Vec<VarId>> =
                needed.iter().map(|d| self.chain(*d)).filter(|c| c.contains(&h)).collect();
            through.sort_by_key(|c| std::cmp::Reverse(c.len()));
            let mut done = false;
            for chain in through {
                let r = chain[0];
                if let Some((index, _)) = self.find_pd(r, &self.chain_attrs(&chain)) {
                    let acc = Access {
                        op: AccessOp::PdScan {
                            index,
                            mode: PdMode::Identity { pos: 0, key: TExpr::Var(r) },
                            binds: chain.iter().map(|x| Some(*x)).collect(),
                        },
                        checks: Vec::new(),
                        est,
                    };
                    for x in &chain {
                        self.bound[*x] = true;
                    }
                    node = Node::Join { outer: Box::new(node), inner: acc, est };
                    done = true;
                    break;
                }
            }
            if done {
                continue;
            }
            let hd = self.hidden[h].as_ref().expect("hidden");
            let acc = Access {
                op: AccessOp::ExtentScan { var: h, class_id: self.vars[h].class_id, subclasses: true },
                checks: vec![Pred::Link { parent: hd.parent, attr_pos: hd.attr_pos, child: h, attr: hd.attr.clone() }],
                est,
            };
            self.bound[h] = true;
            node = Node::Join { outer: Box::new(node), inner: acc, est };
        }
        node
    }

    fn pred_of(&self, k: usize) -> Pred {
        match &self.conjs[k] {
            Conj::Expr(e) => Pred::Expr(e.clone()),
            Conj::Link { parent, attr_pos, child, attr, .. } => {
                Pred::Link { parent: *parent, attr_pos: *attr_pos, child: *child, attr: attr.clone() }
            }
        }
    }

    fn run(&mut self) -> Node {
        let mut node: Option<Node> = None;
        let mut card = 1.0;
        // Conjuncts with no variables run after the first access.
        while (0..self.n_from).any(|v| !self.bound[v]) {
            let mut best: Option<(f64, bool, VarId)> = None;
            for v in (0..self.n_from).filter(|v| !self.bound[*v]) {
                let key = (self.estimate(card, v), self.defers(v), v);
                let better = match &best {
                    None => true,
                    Some(b) => key.0 < b.0 || (key.0 == b.0 && (!key.1 && b.1)),
                };
                if better {
                    best = Some(key);
                }
            }
            let (_, _, v) = best.expect("an unbound variable remains");
            let opt = self.options(v).into_iter().next().expect("extent scan is always possible");
            if let Some(n) = node.take() {
                node = Some(self.materialize(n, &opt.needs));
            }
            let (cls, sub) = self.class_of(v);
            let mut checks = Vec::new();
            match &opt.op {
                AccessOp::BtreeScan { index, .. } | AccessOp::RtreeWindow { index, .. } => {
                    checks.extend(self.class_check(v, self.index_class(index)));
                }
                AccessOp::PdScan { index, binds, .. } if binds[0] == Some(v) => {
                    checks.extend(self.class_check(v, self.index_class(index)));
                }
                AccessOp::PdScan { .. } | AccessOp::MtScan { .. } if !sub => {
                    checks.push(Pred::Class { var: v, class_id: cls, subclasses: false });
                }
                _ => {}
            }
            if let AccessOp::BlastProbe { source: Some(_), .. } = &opt.op {
                if !sub {
                    checks.push(Pred::Class { var: v, class_id: cls, subclasses: false });
                }
            }
            if let Some(k) = opt.recheck {
                checks.push(self.pred_of(k));
            }
            let size = self.stats.extent(cls, sub);
            let acc_est = card * size * opt.sel;
            for k in &opt.consumed {
                self.applied[*k] = true;
            }
            self.bound[v] = true;
            for h in &opt.binds_hidden {
                self.bound[*h] = true;
            }
            let acc = Access { op: opt.op, checks, est: acc_est };
            let mut n = match node.take() {
                None => Node::Leaf(acc),
                Some(outer) => Node::Join { outer: Box::new(outer), inner: acc, est: acc_est },
            };
            card = acc_est;
            // Cheap filters first, then the ones that need chains.
            let ready: Vec<usize> = (0..self.conjs.len())
                .filter(|&k| !self.applied[k] && self.roots(&self.conj_vars(&self.conjs[k])).iter().all(|x| self.bound[*x]))
                .collect();
            let (now, later): (Vec<usize>, Vec<usize>) =
                ready.into_iter().partition(|&k| self.conj_vars(&self.conjs[k]).iter().all(|x| self.bound[*x]));
            if !now.is_empty() {
                for k in &now {
                    card *= self.conj_sel(&self.conjs[*k]);
                    self.applied[*k] = true;
                }
                n = Node::Filter { input: Box::new(n), preds: now.iter().map(|k| self.pred_of(*k)).collect(), est: card };
            }
            for k in later {
                let need: Vec<VarId> = self.conj_vars(&self.conjs[k]).into_iter().filter(|x| !self.bound[*x]).collect();
                n = self.materialize(n, &need);
                card *= self.conj_sel(&self.conjs[k]);
                self.applied[k] = true;
                n = Node::Filter { input: Box::new(n), preds: vec![self.pred_of(k)], est: card };
            }
            node = Some(n);
        }
        node.expect("at least one variable")
    }

    fn index_class(&self, index: &str) -> usize {
        let d = self.cat.indexes().iter().find(|d| d.name() == index).expect("index is declared");
        self.cat.class_id(&d.class).expect("declared class")
    }
}

pub fn optimize(q: &TypedQuery, db: &Database, stats: &PlanStats, sel: &Selectivity) -> Plan {
    let cat = db.catalog();
    let n = q.vars.len();
    let mut o = Optimizer {
        cat,
        db,
        stats,
        sel,
        vars: q.vars.iter().map(|v| PlanVar { name: v.name.clone(), class_id: v.class_id, subclasses: v.subclasses }).collect(),
        n_from: n,
        root: (0..n).collect(),
        hidden: (0..n).map(|_| None).collect(),
        memo: HashMap::new(),
        conjs: Vec::new(),
        applied: Vec::new(),
        bound: vec![false; n],
    };
    for (i, v) in q.vars.iter().enumerate() {
        if let VarSource::Path { parent, attr_pos, attr, collection } = &v.source {
            let TExpr::Var(p) = o.unnest(parent.clone()) else { unreachable!("binding parents are reference chains") };
            o.conjs.push(Conj::Link { parent: p, attr_pos: *attr_pos, child: i, attr: attr.clone(), collection: *collection });
        }
    }
    for c in &q.conjuncts {
        let c = o.substitute(c.clone());
        let c = o.unnest(c);
        o.conjs.push(Conj::Expr(c));
    }
    o.applied = vec![false; o.conjs.len()];
    let root = o.run();
    let columns = q.columns.iter().map(|(n, e)| (n.clone(), o.substitute(e.clone()))).collect();
    Plan { vars: o.vars, root, columns, distinct: q.distinct }
}
