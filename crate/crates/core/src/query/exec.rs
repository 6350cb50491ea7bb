//! Pull-based execution. Every node is an iterator of rows; a row holds one
//! optional oid per plan variable. Joins re-open their inner access once per
//! outer row, so nothing is materialized except the candidate list of an
//! MT lookup and the blast candidates of one outer row.

use super::plan::{Access, AccessOp, KeyBound, KeyKind, Node, PdMode, Plan, Pred};
use super::typeck::{CmpOp, Const, TExpr, VarId};
use super::{QueryError, QueryOptions};
use crate::geom::{self, Geometry, Point, Rect};
use crate::oid::Oid;
use crate::seq::{PreparedQuery, ScoringScheme, Sequence};
use crate::sidx;
use crate::store::{Database, IndexData, KeyValue, SeqId, TypedKey, Value};
use std::borrow::Cow;
use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::ops::Bound;
use std::rc::Rc;

pub type Row = Vec<Option<Oid>>;
type Rows<'p> = Box<dyn Iterator<Item = Result<Row, QueryError>> + 'p>;

#[derive(Debug, Clone)]
pub enum Val<'a> {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(Cow<'a, str>),
    Geom(Cow<'a, Geometry>),
    Seq(SeqId),
    Obj(Oid),
    Coll(&'a [Value]),
    Oids(Rc<Vec<Oid>>),
}

impl<'a> Val<'a> {
    fn stored(v: &'a Value) -> Val<'a> {
        match v {
            Value::Null => Val::Null,
            Value::Int(i) => Val::Int(*i),
            Value::Real(r) => Val::Real(*r),
            Value::Str(s) => Val::Str(Cow::Borrowed(s)),
            Value::Geom(g) => Val::Geom(Cow::Borrowed(g)),
            Value::Seq(id) => Val::Seq(*id),
            Value::Ref(o) => Val::Obj(*o),
            Value::List(vs) => Val::Coll(vs),
        }
    }

    fn num(&self) -> Option<f64> {
        match self {
            Val::Int(i) => Some(*i as f64),
            Val::Real(r) => Some(*r),
            _ => None,
        }
    }
}

/// Order between two values; `None` when either is null or they are not
/// comparable.
fn compare(a: &Val, b: &Val) -> Option<Ordering> {
    match (a, b) {
        (Val::Int(x), Val::Int(y)) => Some(x.cmp(y)),
        (Val::Str(x), Val::Str(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        (Val::Bool(x), Val::Bool(y)) => Some(x.cmp(y)),
        (Val::Obj(x), Val::Obj(y)) => Some(x.cmp(y)),
        (Val::Seq(x), Val::Seq(y)) => Some(x.cmp(y)),
        _ => a.num()?.partial_cmp(&b.num()?),
    }
}

fn holds(op: CmpOp, o: Ordering) -> bool {
    match op {
        CmpOp::Eq => o == Ordering::Equal,
        CmpOp::Ne => o != Ordering::Equal,
        CmpOp::Lt => o == Ordering::Less,
        CmpOp::Le => o != Ordering::Greater,
        CmpOp::Gt => o == Ordering::Greater,
        CmpOp::Ge => o != Ordering::Less,
    }
}

pub fn key_of(v: &Val, kind: KeyKind) -> Result<Option<TypedKey>, QueryError> {
    let kv = match (kind, v) {
        (KeyKind::Int, Val::Int(i)) => KeyValue::Int(*i),
        (KeyKind::Real, Val::Int(i)) => KeyValue::Real(*i as f64),
        (KeyKind::Real, Val::Real(r)) => KeyValue::Real(*r),
        (KeyKind::Str, Val::Str(s)) => KeyValue::Str(s.to_string()),
        _ => return Ok(None),
    };
    Ok(Some(crate::store::encode_key(&kv).map_err(|e| QueryError::Runtime(e.to_string()))?))
}

/// Per-execution state: memoized sequence work and the closest cache.
pub struct ExecCtx<'a> {
    pub db: &'a Database,
    pub opts: &'a QueryOptions,
    prepared: RefCell<HashMap<SeqId, Rc<PreparedQuery<'a>>>>,
    pairs: RefCell<HashMap<(SeqId, SeqId, i32), bool>>,
    searches: RefCell<HashMap<(SeqId, i32, usize, usize), Rc<Vec<Oid>>>>,
}

impl<'a> ExecCtx<'a> {
    pub fn new(db: &'a Database, opts: &'a QueryOptions) -> Self {
        ExecCtx {
            db,
            opts,
            prepared: RefCell::new(HashMap::new()),
            pairs: RefCell::new(HashMap::new()),
            searches: RefCell::new(HashMap::new()),
        }
    }

    fn scheme(&self, s: &Sequence) -> &'a ScoringScheme {
        match s {
            Sequence::Dna(_) => &self.opts.dna_scoring,
            Sequence::Protein(_) => &self.opts.protein_scoring,
        }
    }

    fn sequence(&self, id: SeqId) -> Result<&'a Sequence, QueryError> {
        self.db.sequence(id).map_err(QueryError::from)
    }

    fn prepared(&self, q: SeqId) -> Result<Rc<PreparedQuery<'a>>, QueryError> {
        if let Some(p) = self.prepared.borrow().get(&q) {
            return Ok(p.clone());
        }
        let s = self.sequence(q)?;
        let p = Rc::new(PreparedQuery::new(s, self.scheme(s), &self.opts.blast));
        self.prepared.borrow_mut().insert(q, p.clone());
        Ok(p)
    }

    /// Whether subject `oid` (its sequence attribute at `attr_pos`) is a
    /// blast hit of query sequence `q`.
    fn blast_hit(&self, q: SeqId, oid: Oid, attr_pos: usize, threshold: i32) -> Result<bool, QueryError> {
        let rec = self.db.objects().get(oid).map_err(|_| QueryError::Dangling(oid))?;
        let Value::Seq(sid) = rec.fields[attr_pos] else { return Ok(false) };
        if let Some(&b) = self.pairs.borrow().get(&(q, sid, threshold)) {
            return Ok(b);
        }
        let p = self.prepared(q)?;
        let hit = p.probe(oid, self.sequence(sid)?, threshold).map_err(|e| QueryError::Runtime(e.to_string()))?.is_some();
        self.pairs.borrow_mut().insert((q, sid, threshold), hit);
        Ok(hit)
    }

    /// Every hit over the class subtree, by descending score then oid.
    fn blast_all(&self, q: SeqId, threshold: i32, class_id: usize, attr_pos: usize) -> Result<Rc<Vec<Oid>>, QueryError> {
        let key = (q, threshold, class_id, attr_pos);
        if let Some(r) = self.searches.borrow().get(&key) {
            return Ok(r.clone());
        }
        let p = self.prepared(q)?;
        let mut hits = Vec::new();
        for (oid, rec) in self.db.objects().scan(class_id, true) {
            let Value::Seq(sid) = rec.fields[attr_pos] else { continue };
            if let Some(h) = p.probe(oid, self.sequence(sid)?, threshold).map_err(|e| QueryError::Runtime(e.to_string()))? {
                hits.push(h);
            }
        }
        hits.sort_by(|a, b| b.score.cmp(&a.score).then(a.oid.cmp(&b.oid)));
        let r = Rc::new(hits.into_iter().map(|h| h.oid).collect::<Vec<_>>());
        self.searches.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn field(&self, o: Oid, pos: usize) -> Result<Val<'a>, QueryError> {
        let rec = self.db.objects().get(o).map_err(|_| QueryError::Dangling(o))?;
        Ok(Val::stored(&rec.fields[pos]))
    }

    fn closest(&self, class_id: usize, attr_pos: usize, index: Option<&str>, p: Point) -> Result<Val<'a>, QueryError> {
        let objs = self.db.objects();
        if let Some(IndexData::Spatial(ix)) = index.and_then(|n| self.db.index(n)) {
            if ix.tree().is_empty() {
                return Ok(Val::Null);
            }
            let resolve = |o: Oid| crate::store::index::geometry_of(objs, o, attr_pos).cloned();
            let (o, _) = sidx::closest(ix.tree(), p, resolve).map_err(|e| QueryError::Runtime(e.to_string()))?;
            return Ok(Val::Obj(o));
        }
        let mut best: Option<(Oid, f64)> = None;
        for (oid, rec) in objs.scan(class_id, true) {
            let Value::Geom(g) = &rec.fields[attr_pos] else { continue };
            let d = geom::distance_to(&p, g);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((oid, d));
            }
        }
        Ok(best.map_or(Val::Null, |(o, _)| Val::Obj(o)))
    }

    pub fn eval(&self, e: &TExpr, row: &[Option<Oid>]) -> Result<Val<'a>, QueryError> {
        Ok(match e {
            TExpr::Const(c) => match c {
                Const::Int(i) => Val::Int(*i),
                Const::Real(r) => Val::Real(*r),
                Const::Str(s) => Val::Str(Cow::Owned(s.clone())),
                Const::Bool(b) => Val::Bool(*b),
                Const::Null => Val::Null,
            },
            TExpr::Var(v) => match row[*v] {
                Some(o) => Val::Obj(o),
                None => return Err(QueryError::Runtime(format!("variable {v} used before it is bound"))),
            },
            TExpr::Field { obj, pos, .. } => match self.eval(obj, row)? {
                Val::Obj(o) => self.field(o, *pos)?,
                _ => Val::Null,
            },
            TExpr::Area { arg, fan } => match self.eval(arg, row)? {
                Val::Geom(g) => match g.as_ref() {
                    Geometry::Polygon(p) if *fan => Val::Real(geom::area_fan(p)),
                    Geometry::Polygon(p) => Val::Real(geom::area(p)),
                    Geometry::Rect(r) => Val::Real(r.area()),
                    _ => Val::Null,
                },
                _ => Val::Null,
            },
            TExpr::Blast { query, threshold, class_id, attr_pos } => match self.eval(query, row)? {
                Val::Seq(q) => Val::Oids(self.blast_all(q, *threshold, *class_id, *attr_pos)?),
                _ => Val::Null,
            },
            TExpr::Rect(xs) => {
                let Some(v) = self.numbers(xs, row)? else { return Ok(Val::Null) };
                let r = Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| QueryError::Runtime(format!("rect: {e}")))?;
                Val::Geom(Cow::Owned(Geometry::Rect(r)))
            }
            TExpr::Point(xs) => {
                let Some(v) = self.numbers(xs, row)? else { return Ok(Val::Null) };
                let p = Point::new(v[0], v[1]).map_err(|e| QueryError::Runtime(format!("point: {e}")))?;
                Val::Geom(Cow::Owned(Geometry::Point(p)))
            }
            TExpr::BoxAround(p, w) => {
                let (Val::Geom(g), Some(w)) = (self.eval(p, row)?, self.eval(w, row)?.num()) else { return Ok(Val::Null) };
                let Geometry::Point(p) = g.as_ref() else { return Ok(Val::Null) };
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(QueryError::Runtime(format!("box half-width {w} must be finite and non-negative")));
                }
                Val::Geom(Cow::Owned(Geometry::Rect(Rect::around(*p, w))))
            }
            TExpr::Closest { class_id, attr_pos, probe, index, .. } => match self.eval(probe, row)? {
                Val::Geom(g) => match g.as_ref() {
                    Geometry::Point(p) => self.closest(*class_id, *attr_pos, index.as_deref(), *p)?,
                    _ => Val::Null,
                },
                _ => Val::Null,
            },
            e => Val::Bool(self.test(e, row)?),
        })
    }

    fn numbers(&self, xs: &[TExpr], row: &[Option<Oid>]) -> Result<Option<Vec<f64>>, QueryError> {
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            match self.eval(x, row)?.num() {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    /// Boolean value of a predicate; null and incomparable operands are false.
    pub fn test(&self, e: &TExpr, row: &[Option<Oid>]) -> Result<bool, QueryError> {
        match e {
            TExpr::Cmp(op, a, b) => {
                let (x, y) = (self.eval(a, row)?, self.eval(b, row)?);
                Ok(compare(&x, &y).is_some_and(|o| holds(*op, o)))
            }
            TExpr::And(xs) => {
                for x in xs {
                    if !self.test(x, row)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            TExpr::Or(xs) => {
                for x in xs {
                    if self.test(x, row)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            TExpr::Not(a) => Ok(!self.test(a, row)?),
            TExpr::Overlaps(a, b) => match (self.eval(a, row)?, self.eval(b, row)?) {
                (Val::Geom(x), Val::Geom(y)) => Ok(geom::overlaps(&x, &y)),
                _ => Ok(false),
            },
            TExpr::Inside(a, b) => match (self.eval(a, row)?, self.eval(b, row)?) {
                (Val::Geom(x), Val::Geom(y)) => Ok(geom::contained_in(&x, &y).unwrap_or(false)),
                _ => Ok(false),
            },
            TExpr::In(a, b) => {
                let x = self.eval(a, row)?;
                if let TExpr::Blast { query, threshold, class_id, attr_pos } = b.as_ref() {
                    let (Val::Obj(o), Val::Seq(q)) = (x, self.eval(query, row)?) else { return Ok(false) };
                    if !self.db.catalog().is_subclass(o.extent as usize, *class_id) {
                        return Ok(false);
                    }
                    return self.blast_hit(q, o, *attr_pos, *threshold);
                }
                Ok(match self.eval(b, row)? {
                    Val::Coll(vs) => vs.iter().any(|v| compare(&x, &Val::stored(v)) == Some(Ordering::Equal)),
                    Val::Oids(os) => matches!(x, Val::Obj(o) if os.contains(&o)),
                    _ => false,
                })
            }
            TExpr::Const(Const::Bool(b)) => Ok(*b),
            e => Ok(matches!(self.eval(e, row)?, Val::Bool(true))),
        }
    }

    /// How many copies of `row` the predicates let through.
    fn multiplicity(&self, preds: &[Pred], row: &[Option<Oid>]) -> Result<usize, QueryError> {
        let mut n = 1;
        for p in preds {
            match p {
                Pred::Expr(e) => {
                    if !self.test(e, row)? {
                        return Ok(0);
                    }
                }
                Pred::Class { var, class_id, subclasses } => {
                    let c = row[*var].expect("checked variable is bound").extent as usize;
                    let ok = if *subclasses { self.db.catalog().is_subclass(c, *class_id) } else { c == *class_id };
                    if !ok {
                        return Ok(0);
                    }
                }
                Pred::Link { parent, attr_pos, child, .. } => {
                    let (Some(p), Some(c)) = (row[*parent], row[*child]) else { return Ok(0) };
                    let rec = self.db.objects().get(p).map_err(|_| QueryError::Dangling(p))?;
                    let k = match &rec.fields[*attr_pos] {
                        Value::Ref(o) => usize::from(*o == c),
                        Value::List(vs) => vs.iter().filter(|v| matches!(v, Value::Ref(o) if *o == c)).count(),
                        _ => 0,
                    };
                    if k == 0 {
                        return Ok(0);
                    }
                    n *= k;
                }
            }
        }
        Ok(n)
    }

    fn key_bounds(&self, lo: &KeyBound, hi: &KeyBound, row: &[Option<Oid>]) -> Result<Option<(Bound<TypedKey>, Bound<TypedKey>)>, QueryError> {
        let one = |b: &KeyBound| -> Result<Option<Bound<TypedKey>>, QueryError> {
            Ok(match b {
                KeyBound::Unbounded => Some(Bound::Unbounded),
                KeyBound::Incl(e, k) => key_of(&self.eval(e, row)?, *k)?.map(Bound::Included),
                KeyBound::Excl(e, k) => key_of(&self.eval(e, row)?, *k)?.map(Bound::Excluded),
            })
        };
        match (one(lo)?, one(hi)?) {
            (Some(l), Some(h)) => Ok(Some((l, h))),
            _ => Ok(None),
        }
    }
}

enum Cand<'a> {
    One(Oid),
    Chain(&'a [Oid]),
}

type Cands<'p, 'a> = Box<dyn Iterator<Item = Result<Cand<'a>, QueryError>> + 'p>;

fn ok_oids<'p, 'a, I>(it: I) -> Cands<'p, 'a>
where
    I: Iterator<Item = Oid> + 'p,
{
    Box::new(it.map(|o| Ok(Cand::One(o))))
}

fn index<'a>(ctx: &ExecCtx<'a>, name: &str) -> Result<&'a IndexData, QueryError> {
    ctx.db.index(name).ok_or_else(|| QueryError::Runtime(format!("index {name} is not declared")))
}

fn candidates<'p, 'a: 'p>(ctx: &'p ExecCtx<'a>, acc: &'p Access, row: &Row) -> Result<Cands<'p, 'a>, QueryError> {
    let objs = ctx.db.objects();
    Ok(match &acc.op {
        AccessOp::ExtentScan { class_id, subclasses, .. } => ok_oids(objs.scan(*class_id, *subclasses).map(|(o, _)| o)),
        AccessOp::Unnest { parent, attr_pos, .. } => {
            let Val::Obj(p) = ctx.eval(parent, row)? else { return Ok(Box::new(std::iter::empty())) };
            let rec = objs.get(p).map_err(|_| QueryError::Dangling(p))?;
            let refs = rec.fields[*attr_pos].refs();
            for o in &refs {
                if !objs.is_live(*o) {
                    return Err(QueryError::Dangling(*o));
                }
            }
            ok_oids(refs.into_iter())
        }
        AccessOp::BtreeScan { index: name, lo, hi, .. } => {
            let IndexData::Btree(ix) = index(ctx, name)? else { return Err(QueryError::Runtime(format!("{name} is not a btree"))) };
            match ctx.key_bounds(lo, hi, row)? {
                Some((l, h)) => {
                    if crate::store::index::range_is_empty(l.as_ref(), h.as_ref()) {
                        Box::new(std::iter::empty())
                    } else {
                        let v: Vec<Oid> = ix.range(l.as_ref(), h.as_ref()).collect();
                        ok_oids(v.into_iter())
                    }
                }
                None => Box::new(std::iter::empty()),
            }
        }
        AccessOp::MtScan { index: name, class, lo, hi, .. } => {
            let IndexData::Mt(ix) = index(ctx, name)? else { return Err(QueryError::Runtime(format!("{name} is not an mt index"))) };
            match ctx.key_bounds(lo, hi, row)? {
                Some((l, h)) => {
                    let v = ix.query(objs, class, l.as_ref(), h.as_ref()).map_err(|e| QueryError::Runtime(e.to_string()))?;
                    ok_oids(v.into_iter())
                }
                None => Box::new(std::iter::empty()),
            }
        }
        AccessOp::RtreeWindow { index: name, window, .. } => {
            let IndexData::Spatial(ix) = index(ctx, name)? else { return Err(QueryError::Runtime(format!("{name} is not spatial"))) };
            match ctx.eval(window, row)? {
                Val::Geom(g) => ok_oids(ix.tree().window_query(geom::mbr(&g))),
                _ => Box::new(std::iter::empty()),
            }
        }
        AccessOp::PdScan { index: name, mode, .. } => {
            let IndexData::PathDict(pd) = index(ctx, name)? else { return Err(QueryError::Runtime(format!("{name} is not a path dictionary"))) };
            match mode {
                PdMode::Identity { pos, key } => match ctx.eval(key, row)? {
                    Val::Obj(o) => {
                        let pos = *pos;
                        Box::new(pd.lookup_oid(o).filter(move |(_, _, p)| *p == pos).map(|(_, r, _)| Ok(Cand::Chain(&r.chain))))
                    }
                    _ => Box::new(std::iter::empty()),
                },
                PdMode::Attr { lo, hi } => match ctx.key_bounds(lo, hi, row)? {
                    Some((l, h)) => {
                        let it = pd.lookup_attr(l.as_ref(), h.as_ref()).map_err(|e| QueryError::Runtime(e.to_string()))?;
                        let v: Vec<Cand<'a>> = it.map(|(_, r)| Cand::Chain(&r.chain)).collect();
                        Box::new(v.into_iter().map(Ok))
                    }
                    None => Box::new(std::iter::empty()),
                },
            }
        }
        AccessOp::BlastProbe { var: _, query, threshold, attr_pos, source, class_id, subclasses } => {
            let Val::Seq(q) = ctx.eval(query, row)? else { return Ok(Box::new(std::iter::empty())) };
            let pool: Vec<Oid> = match source {
                Some((parent, pos)) => match row[*parent] {
                    Some(p) => objs.get(p).map_err(|_| QueryError::Dangling(p))?.fields[*pos].refs(),
                    None => Vec::new(),
                },
                None => objs.scan(*class_id, *subclasses).map(|(o, _)| o).collect(),
            };
            let (threshold, attr_pos) = (*threshold, *attr_pos);
            let mut hits = Vec::new();
            for o in pool {
                if ctx.blast_hit(q, o, attr_pos, threshold)? {
                    hits.push(o);
                }
            }
            ok_oids(hits.into_iter())
        }
    })
}

struct AccessIter<'p, 'a> {
    ctx: &'p ExecCtx<'a>,
    acc: &'p Access,
    row: Row,
    bound: Vec<bool>,
    cands: Cands<'p, 'a>,
    repeat: usize,
}

impl Iterator for AccessIter<'_, '_> {
    type Item = Result<Row, QueryError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.repeat > 0 {
            self.repeat -= 1;
            return Some(Ok(self.row.clone()));
        }
        loop {
            let cand = match self.cands.next()? {
                Ok(c) => c,
                Err(e) => return Some(Err(e)),
            };
            match cand {
                Cand::One(o) => self.row[self.acc.op.var()] = Some(o),
                Cand::Chain(chain) => {
                    let AccessOp::PdScan { binds, .. } = &self.acc.op else { unreachable!("chains come from path dictionaries") };
                    let mut ok = true;
                    for (pos, b) in binds.iter().enumerate() {
                        let Some(v) = b else { continue };
                        if self.bound[*v] {
                            if self.row[*v] != Some(chain[pos]) {
                                ok = false;
                                break;
                            }
                        } else {
                            self.row[*v] = Some(chain[pos]);
                        }
                    }
                    if !ok {
                        continue;
                    }
                }
            }
            match self.ctx.multiplicity(&self.acc.checks, &self.row) {
                Ok(0) => continue,
                Ok(n) => {
                    self.repeat = n - 1;
                    return Some(Ok(self.row.clone()));
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

fn open_access<'p, 'a: 'p>(ctx: &'p ExecCtx<'a>, acc: &'p Access, row: Row) -> Rows<'p> {
    match candidates(ctx, acc, &row) {
        Ok(cands) => {
            let bound = row.iter().map(Option::is_some).collect();
            Box::new(AccessIter { ctx, acc, row, bound, cands, repeat: 0 })
        }
        Err(e) => Box::new(std::iter::once(Err(e))),
    }
}

struct JoinIter<'p, 'a> {
    ctx: &'p ExecCtx<'a>,
    outer: Rows<'p>,
    inner: &'p Access,
    cur: Option<Rows<'p>>,
}

impl Iterator for JoinIter<'_, '_> {
    type Item = Result<Row, QueryError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(c) = &mut self.cur {
                if let Some(r) = c.next() {
                    return Some(r);
                }
                self.cur = None;
            }
            match self.outer.next()? {
                Ok(row) => self.cur = Some(open_access(self.ctx, self.inner, row)),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

struct FilterIter<'p, 'a> {
    ctx: &'p ExecCtx<'a>,
    input: Rows<'p>,
    preds: &'p [Pred],
    pending: Option<(Row, usize)>,
}

impl Iterator for FilterIter<'_, '_> {
    type Item = Result<Row, QueryError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some((row, n)) = &mut self.pending {
            if *n > 0 {
                *n -= 1;
                return Some(Ok(row.clone()));
            }
            self.pending = None;
        }
        loop {
            let row = match self.input.next()? {
                Ok(r) => r,
                Err(e) => return Some(Err(e)),
            };
            match self.ctx.multiplicity(self.preds, &row) {
                Ok(0) => continue,
                Ok(n) => {
                    if n > 1 {
                        self.pending = Some((row.clone(), n - 1));
                    }
                    return Some(Ok(row));
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

fn open<'p, 'a: 'p>(ctx: &'p ExecCtx<'a>, node: &'p Node, width: usize) -> Rows<'p> {
    match node {
        Node::Leaf(acc) => open_access(ctx, acc, vec![None; width]),
        Node::Join { outer, inner, .. } => Box::new(JoinIter { ctx, outer: open(ctx, outer, width), inner, cur: None }),
        Node::Filter { input, preds, .. } => {
            Box::new(FilterIter { ctx, input: open(ctx, input, width), preds, pending: None })
        }
    }
}

/// Owned result value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Null,
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    Geom(Geometry),
    Seq(String),
    Oid(Oid),
    List(Vec<Cell>),
}

fn to_cell(ctx: &ExecCtx, v: Val) -> Result<Cell, QueryError> {
    Ok(match v {
        Val::Null => Cell::Null,
        Val::Bool(b) => Cell::Bool(b),
        Val::Int(i) => Cell::Int(i),
        Val::Real(r) => Cell::Real(r),
        Val::Str(s) => Cell::Str(s.into_owned()),
        Val::Geom(g) => Cell::Geom(g.into_owned()),
        Val::Seq(id) => Cell::Seq(ctx.sequence(id)?.decode()),
        Val::Obj(o) => Cell::Oid(o),
        Val::Coll(vs) => Cell::List(vs.iter().map(|v| to_cell(ctx, Val::stored(v))).collect::<Result<_, _>>()?),
        Val::Oids(os) => Cell::List(os.iter().map(|o| Cell::Oid(*o)).collect()),
    })
}

/// Streams projected rows of `plan`.
pub fn execute<'p, 'a: 'p>(plan: &'p Plan, ctx: &'p ExecCtx<'a>) -> impl Iterator<Item = Result<Vec<Cell>, QueryError>> + use<'p, 'a> {
    let rows = open(ctx, &plan.root, plan.vars.len());
    let mut seen: Option<HashSet<String>> = plan.distinct.then(HashSet::new);
    let mut failed = false;
    rows.filter_map(move |r| {
        if failed {
            return None;
        }
        let out = r.and_then(|row| {
            plan.columns.iter().map(|(_, e)| ctx.eval(e, &row).and_then(|v| to_cell(ctx, v))).collect::<Result<Vec<_>, _>>()
        });
        match out {
            Ok(cells) => {
                if let Some(seen) = &mut seen {
                    if !seen.insert(super::format::tsv_line(&cells)) {
                        return None;
                    }
                }
                Some(Ok(cells))
            }
            Err(e) => {
                failed = true;
                Some(Err(e))
            }
        }
    })
}

impl AccessOp {
    /// The single variable a non-dictionary access binds.
    pub fn var(&self) -> VarId {
        match self {
            AccessOp::ExtentScan { var, .. }
            | AccessOp::Unnest { var, .. }
            | AccessOp::BtreeScan { var, .. }
            | AccessOp::MtScan { var, .. }
            | AccessOp::RtreeWindow { var, .. }
            | AccessOp::BlastProbe { var, .. } => *var,
            AccessOp::PdScan { binds, .. } => binds.iter().flatten().next().copied().expect("dictionary binds a variable"),
        }
    }
}
