//! Name resolution and typing against the catalog. The result is a small
//! typed IR that the planners and the executor share.

use super::ast::{BinOp, Expr, Lit, QueryAst, Select, Source};
use super::QueryError;
use crate::catalog::{AttrType, Catalog};

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Ty {
    Bool,
    Int,
    Real,
    Str,
    Point,
    Polyline,
    Polygon,
    Rect,
    Dna,
    Protein,
    Obj(usize),
    List(Box<Ty>),
    Null,
}

impl Ty {
    fn of_attr(cat: &Catalog, t: &AttrType) -> Ty {
        match t {
            AttrType::Integer => Ty::Int,
            AttrType::Real => Ty::Real,
            AttrType::String => Ty::Str,
            AttrType::Point => Ty::Point,
            AttrType::Polyline => Ty::Polyline,
            AttrType::Polygon => Ty::Polygon,
            AttrType::Dna => Ty::Dna,
            AttrType::Protein => Ty::Protein,
            AttrType::Ref(c) => Ty::Obj(cat.class_id(c).expect("catalog refs resolve")),
            AttrType::Collection(inner, _) => Ty::List(Box::new(Ty::of_attr(cat, inner))),
        }
    }

    pub fn is_spatial(&self) -> bool {
        matches!(self, Ty::Point | Ty::Polyline | Ty::Polygon | Ty::Rect)
    }

    fn is_numeric(&self) -> bool {
        matches!(self, Ty::Int | Ty::Real)
    }

    fn name(&self, cat: &Catalog) -> String {
        match self {
            Ty::Bool => "bool".into(),
            Ty::Int => "integer".into(),
            Ty::Real => "real".into(),
            Ty::Str => "string".into(),
            Ty::Point => "point".into(),
            Ty::Polyline => "polyline".into(),
            Ty::Polygon => "polygon".into(),
            Ty::Rect => "rect".into(),
            Ty::Dna => "dna".into(),
            Ty::Protein => "protein".into(),
            Ty::Obj(c) => cat.class(*c).name.clone(),
            Ty::List(t) => format!("collection({})", t.name(cat)),
            Ty::Null => "null".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Const {
    Int(i64),
    Real(f64),
    Str(String),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator with its operands swapped.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            o => o,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExpr {
    Const(Const),
    Var(VarId),
    /// Attribute of an object-valued expression.
    Field { obj: Box<TExpr>, pos: usize, name: String, ty: Ty },
    Area { arg: Box<TExpr>, fan: bool },
    /// Objects of `class_id`'s subtree whose `attr_pos` sequence scores at
    /// least `threshold` against the receiver.
    Blast { query: Box<TExpr>, threshold: i32, class_id: usize, attr_pos: usize },
    Rect(Vec<TExpr>),
    Point(Vec<TExpr>),
    BoxAround(Box<TExpr>, Box<TExpr>),
    /// `index` is filled in by the optimizer when a spatial index applies.
    Closest { class_id: usize, attr_pos: usize, label: String, probe: Box<TExpr>, index: Option<String> },
    Cmp(CmpOp, Box<TExpr>, Box<TExpr>),
    And(Vec<TExpr>),
    Or(Vec<TExpr>),
    Not(Box<TExpr>),
    Overlaps(Box<TExpr>, Box<TExpr>),
    Inside(Box<TExpr>, Box<TExpr>),
    In(Box<TExpr>, Box<TExpr>),
}

impl TExpr {
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TExpr)) {
        f(self);
        match self {
            TExpr::Const(_) | TExpr::Var(_) => {}
            TExpr::Field { obj, .. } => obj.walk(f),
            TExpr::Area { arg, .. } => arg.walk(f),
            TExpr::Blast { query, .. } => query.walk(f),
            TExpr::Rect(xs) | TExpr::Point(xs) | TExpr::And(xs) | TExpr::Or(xs) => xs.iter().for_each(|x| x.walk(f)),
            TExpr::BoxAround(a, b)
            | TExpr::Cmp(_, a, b)
            | TExpr::Overlaps(a, b)
            | TExpr::Inside(a, b)
            | TExpr::In(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            TExpr::Closest { probe, .. } => probe.walk(f),
            TExpr::Not(a) => a.walk(f),
        }
    }

    /// Variables referenced, sorted and deduplicated.
    pub fn vars(&self) -> Vec<VarId> {
        let mut v = Vec::new();
        self.walk(&mut |e| {
            if let TExpr::Var(x) = e {
                v.push(*x);
            }
        });
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn map_children(self, f: &mut impl FnMut(TExpr) -> TExpr) -> TExpr {
        let b = |e: Box<TExpr>, f: &mut dyn FnMut(TExpr) -> TExpr| Box::new(f(*e));
        match self {
            e @ (TExpr::Const(_) | TExpr::Var(_)) => e,
            TExpr::Field { obj, pos, name, ty } => TExpr::Field { obj: b(obj, f), pos, name, ty },
            TExpr::Area { arg, fan } => TExpr::Area { arg: b(arg, f), fan },
            TExpr::Blast { query, threshold, class_id, attr_pos } => {
                TExpr::Blast { query: b(query, f), threshold, class_id, attr_pos }
            }
            TExpr::Rect(xs) => TExpr::Rect(xs.into_iter().map(&mut *f).collect()),
            TExpr::Point(xs) => TExpr::Point(xs.into_iter().map(&mut *f).collect()),
            TExpr::And(xs) => TExpr::And(xs.into_iter().map(&mut *f).collect()),
            TExpr::Or(xs) => TExpr::Or(xs.into_iter().map(&mut *f).collect()),
            TExpr::BoxAround(a, c) => TExpr::BoxAround(b(a, f), b(c, f)),
            TExpr::Closest { class_id, attr_pos, label, probe, index } => {
                TExpr::Closest { class_id, attr_pos, label, probe: b(probe, f), index }
            }
            TExpr::Cmp(op, a, c) => TExpr::Cmp(op, b(a, f), b(c, f)),
            TExpr::Not(a) => TExpr::Not(b(a, f)),
            TExpr::Overlaps(a, c) => TExpr::Overlaps(b(a, f), b(c, f)),
            TExpr::Inside(a, c) => TExpr::Inside(b(a, f), b(c, f)),
            TExpr::In(a, c) => TExpr::In(b(a, f), b(c, f)),
        }
    }

    pub fn show(&self, names: &[String]) -> String {
        let list = |xs: &[TExpr]| xs.iter().map(|x| x.show(names)).collect::<Vec<_>>().join(", ");
        let wrap = |e: &TExpr| match e {
            TExpr::And(_) | TExpr::Or(_) | TExpr::Not(_) | TExpr::Cmp(..) | TExpr::In(..) => format!("({})", e.show(names)),
            TExpr::Overlaps(..) | TExpr::Inside(..) => format!("({})", e.show(names)),
            _ => e.show(names),
        };
        match self {
            TExpr::Const(c) => match c {
                Const::Int(i) => i.to_string(),
                Const::Real(r) => format!("{r:?}"),
                Const::Str(s) => format!("\"{s}\""),
                Const::Bool(b) => b.to_string(),
                Const::Null => "null".into(),
            },
            TExpr::Var(v) => names[*v].clone(),
            TExpr::Field { obj, name, .. } => format!("{}.{name}", obj.show(names)),
            TExpr::Area { arg, fan } => format!("{}.{}()", arg.show(names), if *fan { "area_fan" } else { "area" }),
            TExpr::Blast { query, threshold, .. } => format!("{}.blast({threshold})", query.show(names)),
            TExpr::Rect(xs) => format!("rect({})", list(xs)),
            TExpr::Point(xs) => format!("point({})", list(xs)),
            TExpr::BoxAround(a, b) => format!("box({}, {})", a.show(names), b.show(names)),
            TExpr::Closest { label, probe, .. } => format!("closest({label}, {})", probe.show(names)),
            TExpr::Cmp(op, a, b) => format!("{} {} {}", wrap(a), op.symbol(), wrap(b)),
            TExpr::And(xs) => xs.iter().map(wrap).collect::<Vec<_>>().join(" and "),
            TExpr::Or(xs) => xs.iter().map(wrap).collect::<Vec<_>>().join(" or "),
            TExpr::Not(a) => format!("not {}", wrap(a)),
            TExpr::Overlaps(a, b) => format!("{} overlaps {}", wrap(a), wrap(b)),
            TExpr::Inside(a, b) => format!("{} inside {}", wrap(a), wrap(b)),
            TExpr::In(a, b) => format!("{} in {}", wrap(a), wrap(b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarSource {
    Extent,
    /// `v in parent.attr` where `parent` is object valued.
    Path { parent: TExpr, attr_pos: usize, attr: String, collection: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub class_id: usize,
    pub subclasses: bool,
    pub source: VarSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedQuery {
    pub vars: Vec<VarInfo>,
    pub distinct: bool,
    pub columns: Vec<(String, TExpr)>,
    /// Top-level conjuncts of the where clause, in source order.
    pub conjuncts: Vec<TExpr>,
}

impl TypedQuery {
    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }
}

struct Checker<'a> {
    cat: &'a Catalog,
    vars: Vec<VarInfo>,
}

fn mismatch(e: &Expr, msg: impl std::fmt::Display) -> QueryError {
    QueryError::Type(format!("{msg} in `{e}`"))
}

impl Checker<'_> {
    fn var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Walks `root.steps`; returns the typed expression and its type.
    fn path(&self, e: &Expr, root: &str, steps: &[String]) -> Result<(TExpr, Ty), QueryError> {
        let v = self.var(root).ok_or_else(|| QueryError::Unknown(format!("unknown variable {root}")))?;
        let mut cur = TExpr::Var(v);
        let mut ty = Ty::Obj(self.vars[v].class_id);
        for s in steps {
            let Ty::Obj(c) = ty else {
                return Err(mismatch(e, format!("cannot take attribute {s} of {}", ty.name(self.cat))));
            };
            let (pos, at) = self
                .cat
                .attr(c, s)
                .ok_or_else(|| QueryError::Unknown(format!("class {} has no attribute {s}", self.cat.class(c).name)))?;
            let t = Ty::of_attr(self.cat, at);
            cur = TExpr::Field { obj: Box::new(cur), pos, name: s.clone(), ty: t.clone() };
            ty = t;
        }
        Ok((cur, ty))
    }

    fn expr(&self, e: &Expr, select: bool) -> Result<(TExpr, Ty), QueryError> {
        match e {
            Expr::Lit(l) => Ok(match l {
                Lit::Int(i) => (TExpr::Const(Const::Int(*i)), Ty::Int),
                Lit::Real(r) => (TExpr::Const(Const::Real(*r)), Ty::Real),
                Lit::Str(s) => (TExpr::Const(Const::Str(s.clone())), Ty::Str),
                Lit::Bool(b) => (TExpr::Const(Const::Bool(*b)), Ty::Bool),
                Lit::Null => (TExpr::Const(Const::Null), Ty::Null),
            }),
            Expr::Path { root, steps } => self.path(e, root, steps),
            Expr::Method { recv, name, args } => self.method(e, recv, name, args, select),
            Expr::Call { name, args } => self.call(e, name, args, select),
            Expr::Not(a) => {
                let (x, t) = self.expr(a, select)?;
                if t != Ty::Bool {
                    return Err(mismatch(e, format!("not needs a boolean, got {}", t.name(self.cat))));
                }
                Ok((TExpr::Not(Box::new(x)), Ty::Bool))
            }
            Expr::Binary(op, a, b) => self.binary(e, *op, a, b, select),
        }
    }

    fn method(&self, e: &Expr, recv: &Expr, name: &str, args: &[Expr], select: bool) -> Result<(TExpr, Ty), QueryError> {
        let (r, rt) = self.expr(recv, select)?;
        match name {
            "area" | "area_fan" => {
                if !args.is_empty() {
                    return Err(mismatch(e, format!("{name} takes no arguments")));
                }
                if !(rt == Ty::Polygon || (name == "area" && rt == Ty::Rect)) {
                    return Err(mismatch(e, format!("{name} needs a polygon receiver, got {}", rt.name(self.cat))));
                }
                Ok((TExpr::Area { arg: Box::new(r), fan: name == "area_fan" }, Ty::Real))
            }
            "blast" => {
                if !matches!(rt, Ty::Dna | Ty::Protein) {
                    return Err(mismatch(e, format!("blast needs a dna or protein receiver, got {}", rt.name(self.cat))));
                }
                let threshold = match args {
                    [Expr::Lit(Lit::Int(t))] => {
                        i32::try_from(*t).map_err(|_| mismatch(e, "blast threshold out of range"))?
                    }
                    _ => return Err(mismatch(e, "blast needs one integer threshold")),
                };
                let TExpr::Field { obj, pos, .. } = &r else {
                    return Err(mismatch(e, "blast needs a stored sequence attribute as receiver"));
                };
                let Ty::Obj(class_id) = self.expr_ty(obj) else { unreachable!("fields hang off objects") };
                Ok((
                    TExpr::Blast { query: Box::new(r.clone()), threshold, class_id, attr_pos: *pos },
                    Ty::List(Box::new(Ty::Obj(class_id))),
                ))
            }
            _ => Err(QueryError::Unknown(format!("unknown method {name}"))),
        }
    }

    fn expr_ty(&self, e: &TExpr) -> Ty {
        match e {
            TExpr::Var(v) => Ty::Obj(self.vars[*v].class_id),
            TExpr::Field { ty, .. } => ty.clone(),
            _ => Ty::Null,
        }
    }

    fn numeric_args(&self, e: &Expr, args: &[Expr], n: usize, select: bool) -> Result<Vec<TExpr>, QueryError> {
        if args.len() != n {
            return Err(mismatch(e, format!("expected {n} arguments")));
        }
        args.iter()
            .map(|a| {
                let (x, t) = self.expr(a, select)?;
                if t.is_numeric() {
                    Ok(x)
                } else {
                    Err(mismatch(e, format!("argument `{a}` must be numeric")))
                }
            })
            .collect()
    }

    fn call(&self, e: &Expr, name: &str, args: &[Expr], select: bool) -> Result<(TExpr, Ty), QueryError> {
        match name {
            "rect" => Ok((TExpr::Rect(self.numeric_args(e, args, 4, select)?), Ty::Rect)),
            "point" => Ok((TExpr::Point(self.numeric_args(e, args, 2, select)?), Ty::Point)),
            "box" => {
                let [p, w] = args else { return Err(mismatch(e, "box takes a point and a half-width")) };
                let (px, pt) = self.expr(p, select)?;
                let (wx, wt) = self.expr(w, select)?;
                if pt != Ty::Point || !wt.is_numeric() {
                    return Err(mismatch(e, "box takes a point and a half-width"));
                }
                Ok((TExpr::BoxAround(Box::new(px), Box::new(wx)), Ty::Rect))
            }
            "closest" => {
                if !select {
                    return Err(mismatch(e, "closest is allowed only in the select list"));
                }
                let [Expr::Path { root, steps }, p] = args else {
                    return Err(mismatch(e, "closest takes Class.attribute and a point"));
                };
                let [attr] = steps.as_slice() else {
                    return Err(mismatch(e, "closest takes Class.attribute and a point"));
                };
                let class_id =
                    self.cat.class_id(root).ok_or_else(|| QueryError::Unknown(format!("unknown class {root}")))?;
                let (attr_pos, at) =
                    self.cat.attr(class_id, attr).ok_or_else(|| QueryError::Unknown(format!("class {root} has no attribute {attr}")))?;
                if !at.is_spatial() {
                    return Err(mismatch(e, format!("{root}.{attr} is not spatial")));
                }
                let (px, pt) = self.expr(p, select)?;
                if pt != Ty::Point {
                    return Err(mismatch(e, "closest needs a point probe"));
                }
                Ok((
                    TExpr::Closest { class_id, attr_pos, label: format!("{root}.{attr}"), probe: Box::new(px), index: None },
                    Ty::Obj(class_id),
                ))
            }
            _ => Err(QueryError::Unknown(format!("unknown function {name}"))),
        }
    }

    fn binary(&self, e: &Expr, op: BinOp, a: &Expr, b: &Expr, select: bool) -> Result<(TExpr, Ty), QueryError> {
        let (x, xt) = self.expr(a, select)?;
        let (y, yt) = self.expr(b, select)?;
        let names = |t: &Ty| t.name(self.cat);
        let bx = Box::new;
        let out = match op {
            BinOp::And | BinOp::Or => {
                if xt != Ty::Bool || yt != Ty::Bool {
                    return Err(mismatch(e, format!("{} needs booleans, got {} and {}", op.symbol(), names(&xt), names(&yt))));
                }
                let flat = |t: TExpr, v: &mut Vec<TExpr>| match (op, t) {
                    (BinOp::And, TExpr::And(xs)) | (BinOp::Or, TExpr::Or(xs)) => v.extend(xs),
                    (_, t) => v.push(t),
                };
                let mut v = Vec::new();
                flat(x, &mut v);
                flat(y, &mut v);
                if op == BinOp::And {
                    TExpr::And(v)
                } else {
                    TExpr::Or(v)
                }
            }
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let cmp = match op {
                    BinOp::Eq => CmpOp::Eq,
                    BinOp::Ne => CmpOp::Ne,
                    BinOp::Lt => CmpOp::Lt,
                    BinOp::Le => CmpOp::Le,
                    BinOp::Gt => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                let ordered = matches!(cmp, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge);
                let ok = match (&xt, &yt) {
                    (Ty::Null, _) | (_, Ty::Null) => true,
                    (l, r) if l.is_numeric() && r.is_numeric() => true,
                    (Ty::Str, Ty::Str) => true,
                    (Ty::Bool, Ty::Bool) | (Ty::Obj(_), Ty::Obj(_)) => !ordered,
                    _ => false,
                };
                if !ok {
                    return Err(mismatch(e, format!("cannot compare {} with {}", names(&xt), names(&yt))));
                }
                TExpr::Cmp(cmp, bx(x), bx(y))
            }
            BinOp::Overlaps => {
                if !xt.is_spatial() || !yt.is_spatial() {
                    return Err(mismatch(e, format!("overlaps needs two spatial operands, got {} and {}", names(&xt), names(&yt))));
                }
                TExpr::Overlaps(bx(x), bx(y))
            }
            BinOp::Inside => {
                let ok = match yt {
                    Ty::Rect => xt.is_spatial(),
                    Ty::Polygon => xt == Ty::Point,
                    _ => false,
                };
                if !ok {
                    return Err(mismatch(
                        e,
                        format!("inside needs a spatial value in a rect or a point in a polygon, got {} and {}", names(&xt), names(&yt)),
                    ));
                }
                TExpr::Inside(bx(x), bx(y))
            }
            BinOp::In => {
                let Ty::List(elem) = &yt else {
                    return Err(mismatch(e, format!("in needs a collection on the right, got {}", names(&yt))));
                };
                let ok = match (&xt, elem.as_ref()) {
                    (Ty::Null, _) => true,
                    (Ty::Obj(_), Ty::Obj(_)) => true,
                    (l, r) => (l.is_numeric() && r.is_numeric()) || l == r,
                };
                if !ok || matches!(xt, Ty::List(_)) {
                    return Err(mismatch(e, format!("cannot look for {} in {}", names(&xt), names(&yt))));
                }
                TExpr::In(bx(x), bx(y))
            }
        };
        Ok((out, Ty::Bool))
    }
}

pub fn typecheck(ast: &QueryAst, cat: &Catalog) -> Result<TypedQuery, QueryError> {
    let mut ck = Checker { cat, vars: Vec::new() };
    for b in &ast.from {
        if ck.var(&b.var).is_some() {
            return Err(QueryError::Type(format!("variable {} bound twice", b.var)));
        }
        let info = match &b.source {
            Source::Extent { class, only } => {
                if let Some(v) = ck.var(class) {
                    return Err(QueryError::Type(format!("`{} in {}` needs a path; {} is a variable", b.var, ck.vars[v].name, class)));
                }
                let class_id = cat.class_id(class).ok_or_else(|| QueryError::Unknown(format!("unknown class {class}")))?;
                VarInfo { name: b.var.clone(), class_id, subclasses: !only, source: VarSource::Extent }
            }
            Source::Path { root, steps } => {
                let whole = Expr::Path { root: root.clone(), steps: steps.clone() };
                let (parent, pt) = ck.path(&whole, root, &steps[..steps.len() - 1])?;
                let Ty::Obj(pc) = pt else {
                    return Err(mismatch(&whole, "binding path must run through references"));
                };
                let last = steps.last().expect("path sources have steps");
                let (attr_pos, at) = cat
                    .attr(pc, last)
                    .ok_or_else(|| QueryError::Unknown(format!("class {} has no attribute {last}", cat.class(pc).name)))?;
                let (class_id, collection) = match Ty::of_attr(cat, at) {
                    Ty::Obj(c) => (c, false),
                    Ty::List(inner) => match *inner {
                        Ty::Obj(c) => (c, true),
                        _ => return Err(mismatch(&whole, "binding path must end in object references")),
                    },
                    _ => return Err(mismatch(&whole, "binding path must end in object references")),
                };
                VarInfo {
                    name: b.var.clone(),
                    class_id,
                    subclasses: true,
                    source: VarSource::Path { parent, attr_pos, attr: last.clone(), collection },
                }
            }
        };
        ck.vars.push(info);
    }
    let columns = match &ast.select {
        Select::Star => ck.vars.iter().enumerate().map(|(i, v)| (v.name.clone(), TExpr::Var(i))).collect(),
        Select::Items(items) => items
            .iter()
            .map(|it| {
                let (x, _) = ck.expr(&it.expr, true)?;
                Ok((it.alias.clone().unwrap_or_else(|| it.expr.to_string()), x))
            })
            .collect::<Result<Vec<_>, QueryError>>()?,
    };
    let mut conjuncts = Vec::new();
    if let Some(w) = &ast.filter {
        let (x, t) = ck.expr(w, false)?;
        if t != Ty::Bool {
            return Err(mismatch(w, format!("where clause must be boolean, got {}", t.name(cat))));
        }
        match x {
            TExpr::And(xs) => conjuncts = xs,
            x => conjuncts.push(x),
        }
    }
    Ok(TypedQuery { vars: ck.vars, distinct: ast.distinct, columns, conjuncts })
}
