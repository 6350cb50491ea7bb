//! Schema catalog: classes, single inheritance, declared indexes and method
//! costs, parsed from a small ODL-style language.
//!
//! ```text
//! class Species extends Taxon { name: string; dna: collection(ref(Entry), 1:N); }
//! index btree(Species.name)
//! index pathdict(Species.flower.kind)
//! index mt(Taxon, name)
//! cost polygon.area = 5 equiv area
//! ```
//!
//! Every class receives a preorder typecode over the inheritance forest
//! (roots and children in declaration order); a class's subtree is exactly
//! the interval `[lo, hi]` of its typecode and its last descendant.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Cost returned for methods without a registered cost.
pub const DEFAULT_METHOD_COST: i64 = 10;

/// Built-in types that may carry method costs.
pub const BUILTIN_TYPES: &[&str] = &["point", "polyline", "polygon", "dna", "protein"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown type {0}")]
    UnknownType(String),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("unknown attribute {0}.{1}")]
    UnknownAttribute(String, String),
    #[error("inheritance cycle through {0}")]
    Cycle(String),
    #[error("duplicate {0} {1}")]
    Duplicate(&'static str, String),
    #[error("invalid index {0}: {1}")]
    InvalidIndex(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cardinality {
    OneToMany,
    ManyToMany,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttrType {
    Integer,
    Real,
    String,
    Point,
    Polyline,
    Polygon,
    Dna,
    Protein,
    Ref(String),
    Collection(Box<AttrType>, Cardinality),
}

impl AttrType {
    pub fn is_scalar(&self) -> bool {
        matches!(self, AttrType::Integer | AttrType::Real | AttrType::String)
    }

    pub fn is_spatial(&self) -> bool {
        matches!(self, AttrType::Point | AttrType::Polyline | AttrType::Polygon)
    }

    pub fn is_sequence(&self) -> bool {
        matches!(self, AttrType::Dna | AttrType::Protein)
    }

    /// Target class of a reference or a collection of references.
    pub fn ref_target(&self) -> Option<&str> {
        match self {
            AttrType::Ref(c) => Some(c),
            AttrType::Collection(e, _) => e.ref_target(),
            _ => None,
        }
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, AttrType::Collection(..))
    }

    /// Lowercase name used for cost lookups on built-in receivers.
    pub fn builtin_name(&self) -> Option<&'static str> {
        match self {
            AttrType::Point => Some("point"),
            AttrType::Polyline => Some("polyline"),
            AttrType::Polygon => Some("polygon"),
            AttrType::Dna => Some("dna"),
            AttrType::Protein => Some("protein"),
            _ => None,
        }
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Integer => f.write_str("integer"),
            AttrType::Real => f.write_str("real"),
            AttrType::String => f.write_str("string"),
            AttrType::Point => f.write_str("point"),
            AttrType::Polyline => f.write_str("polyline"),
            AttrType::Polygon => f.write_str("polygon"),
            AttrType::Dna => f.write_str("dna"),
            AttrType::Protein => f.write_str("protein"),
            AttrType::Ref(c) => write!(f, "ref({c})"),
            AttrType::Collection(e, Cardinality::OneToMany) => write!(f, "collection({e}, 1:N)"),
            AttrType::Collection(e, Cardinality::ManyToMany) => write!(f, "collection({e}, N:M)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub ty: AttrType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDef {
    pub name: String,
    pub parent: Option<String>,
    /// Attributes declared on this class (inherited ones excluded).
    pub attrs: Vec<Attribute>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    Btree,
    Rtree,
    Hilbert,
    PathDict,
    Mt,
}

impl IndexKind {
    pub fn keyword(self) -> &'static str {
        match self {
            IndexKind::Btree => "btree",
            IndexKind::Rtree => "rtree",
            IndexKind::Hilbert => "hilbert",
            IndexKind::PathDict => "pathdict",
            IndexKind::Mt => "mt",
        }
    }
}

/// `btree/rtree/hilbert(C.a)`: `path = [a]`. `pathdict(C.a.b)`: `path` lists
/// the steps. `mt(C, a)`: `path = [a]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexDecl {
    pub kind: IndexKind,
    pub class: String,
    pub path: Vec<String>,
}

impl IndexDecl {
    pub fn new(kind: IndexKind, class: &str, path: &[&str]) -> Self {
        IndexDecl { kind, class: class.to_string(), path: path.iter().map(|s| s.to_string()).collect() }
    }

    /// Canonical name, e.g. `btree(Point.name)` or `mt(Taxon, name)`.
    pub fn name(&self) -> String {
        match self.kind {
            IndexKind::Mt => format!("mt({}, {})", self.class, self.path.join(".")),
            k => format!("{}({}.{})", k.keyword(), self.class, self.path.join(".")),
        }
    }
}

impl fmt::Display for IndexDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostDecl {
    /// Class name or lowercase built-in type name.
    pub receiver: String,
    pub method: String,
    pub cost: i64,
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeInterval {
    pub class: String,
    pub lo: u32,
    pub hi: u32,
}

impl TypeInterval {
    pub fn contains(&self, code: u32) -> bool {
        self.lo <= code && code <= self.hi
    }

    pub fn covers(&self, other: &TypeInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Validated schema. Class ids are declaration positions and double as
/// extent ids; typecodes are preorder positions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    classes: Vec<ClassDef>,
    indexes: Vec<IndexDecl>,
    costs: Vec<CostDecl>,
    by_name: HashMap<String, usize>,
    /// typecode interval per class id
    intervals: Vec<(u32, u32)>,
    /// class id per typecode
    preorder: Vec<usize>,
    /// all attributes per class id, inherited first
    layouts: Vec<Vec<Attribute>>,
}

impl Catalog {
    pub fn new(classes: Vec<ClassDef>, indexes: Vec<IndexDecl>, costs: Vec<CostDecl>) -> Result<Self, CatalogError> {
        let mut by_name = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            if by_name.insert(c.name.clone(), i).is_some() {
                return Err(CatalogError::Duplicate("class", c.name.clone()));
            }
        }
        for c in &classes {
            if let Some(p) = &c.parent {
                if !by_name.contains_key(p) {
                    return Err(CatalogError::UnknownClass(p.clone()));
                }
            }
        }
        // Cycle check: walking up from any class must terminate.
        for c in &classes {
            let mut cur = c.parent.as_deref();
            let mut steps = 0;
            while let Some(p) = cur {
                steps += 1;
                if p == c.name || steps > classes.len() {
                    return Err(CatalogError::Cycle(c.name.clone()));
                }
                cur = classes[by_name[p]].parent.as_deref();
            }
        }
        let mut cat = Catalog {
            classes,
            indexes: Vec::new(),
            costs: Vec::new(),
            by_name,
            intervals: Vec::new(),
            preorder: Vec::new(),
            layouts: Vec::new(),
        };
        cat.assign_typecodes();
        cat.layouts = (0..cat.classes.len()).map(|id| cat.collect_attrs(id)).collect();
        for id in 0..cat.classes.len() {
            let mut seen = HashMap::new();
            for a in cat.all_attrs(id) {
                if seen.insert(a.name.clone(), ()).is_some() {
                    return Err(CatalogError::Duplicate("attribute", format!("{}.{}", cat.classes[id].name, a.name)));
                }
                cat.check_type(&a.ty)?;
            }
        }
        for ix in indexes {
            cat.add_index(ix)?;
        }
        for c in costs {
            cat.register_cost(&c.receiver, &c.method, c.cost, c.group.as_deref())?;
        }
        Ok(cat)
    }

    fn check_type(&self, t: &AttrType) -> Result<(), CatalogError> {
        match t {
            AttrType::Ref(c) if !self.by_name.contains_key(c) => Err(CatalogError::UnknownClass(c.clone())),
            AttrType::Collection(e, _) => match e.as_ref() {
                AttrType::Collection(..) => Err(CatalogError::UnknownType("nested collection".into())),
                inner => self.check_type(inner),
            },
            _ => Ok(()),
        }
    }

    fn assign_typecodes(&mut self) {
        let n = self.classes.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (i, c) in self.classes.iter().enumerate() {
            match &c.parent {
                Some(p) => children[self.by_name[p]].push(i),
                None => roots.push(i),
            }
        }
        self.intervals = vec![(0, 0); n];
        self.preorder = Vec::with_capacity(n);
        // Iterative preorder; `Exit` closes a node's interval.
        enum Step {
            Enter(usize),
            Exit(usize),
        }
        let mut stack: Vec<Step> = roots.iter().rev().map(|&r| Step::Enter(r)).collect();
        while let Some(step) = stack.pop() {
            match step {
                Step::Enter(c) => {
                    self.intervals[c].0 = self.preorder.len() as u32;
                    self.preorder.push(c);
                    stack.push(Step::Exit(c));
                    stack.extend(children[c].iter().rev().map(|&k| Step::Enter(k)));
                }
                Step::Exit(c) => self.intervals[c].1 = self.preorder.len() as u32 - 1,
            }
        }
    }

    /// Adds an index declaration after validating it against the schema.
    pub fn add_index(&mut self, ix: IndexDecl) -> Result<(), CatalogError> {
        if self.indexes.contains(&ix) {
            return Err(CatalogError::Duplicate("index", ix.name()));
        }
        let bad = |msg: &str| CatalogError::InvalidIndex(ix.name(), msg.to_string());
        let cid = self.class_id(&ix.class).ok_or_else(|| CatalogError::UnknownClass(ix.class.clone()))?;
        match ix.kind {
            IndexKind::Btree | IndexKind::Mt => {
                let [a] = ix.path.as_slice() else { return Err(bad("expected one attribute")) };
                let (_, t) = self.attr(cid, a).ok_or_else(|| CatalogError::UnknownAttribute(ix.class.clone(), a.clone()))?;
                if !t.is_scalar() {
                    return Err(bad("attribute must be integer, real or string"));
                }
            }
            IndexKind::Rtree | IndexKind::Hilbert => {
                let [a] = ix.path.as_slice() else { return Err(bad("expected one attribute")) };
                let (_, t) = self.attr(cid, a).ok_or_else(|| CatalogError::UnknownAttribute(ix.class.clone(), a.clone()))?;
                if !t.is_spatial() {
                    return Err(bad("attribute must be spatial"));
                }
            }
            IndexKind::PathDict => {
                self.resolve_path(&ix.class, &ix.path).map_err(|e| match e {
                    CatalogError::InvalidIndex(_, m) => bad(&m),
                    other => other,
                })?;
            }
        }
        self.indexes.push(ix);
        Ok(())
    }

    pub fn remove_index(&mut self, name: &str) -> bool {
        let before = self.indexes.len();
        self.indexes.retain(|d| d.name() != name);
        self.indexes.len() != before
    }

    /// Splits a path-dictionary path into its reference steps (with the class
    /// reached after each) and an optional terminal scalar attribute.
    pub fn resolve_path(&self, root: &str, path: &[String]) -> Result<PathShape, CatalogError> {
        let bad = |msg: String| CatalogError::InvalidIndex(format!("pathdict({root}.{})", path.join(".")), msg);
        let mut classes = vec![root.to_string()];
        let mut steps = Vec::new();
        let mut terminal = None;
        for (i, step) in path.iter().enumerate() {
            let here = classes.last().unwrap().clone();
            let cid = self.class_id(&here).ok_or_else(|| CatalogError::UnknownClass(here.clone()))?;
            let (_, t) = self.attr(cid, step).ok_or_else(|| CatalogError::UnknownAttribute(here.clone(), step.clone()))?;
            if let Some(target) = t.ref_target() {
                steps.push(PathStep { attr: step.clone(), collection: t.is_collection() });
                classes.push(target.to_string());
            } else if t.is_scalar() && i + 1 == path.len() && !steps.is_empty() {
                terminal = Some(step.clone());
            } else {
                return Err(bad(format!("step {step} is not a reference")));
            }
        }
        if steps.is_empty() {
            return Err(bad("path needs at least one reference step".into()));
        }
        Ok(PathShape { classes, steps, terminal_attr: terminal })
    }

    pub fn register_cost(&mut self, receiver: &str, method: &str, cost: i64, group: Option<&str>) -> Result<(), CatalogError> {
        let receiver = self.cost_receiver(receiver).ok_or_else(|| CatalogError::UnknownClass(receiver.to_string()))?;
        self.costs.retain(|c| !(c.receiver == receiver && c.method == method));
        self.costs.push(CostDecl { receiver, method: method.to_string(), cost, group: group.map(str::to_string) });
        Ok(())
    }

    fn cost_receiver(&self, name: &str) -> Option<String> {
        if self.by_name.contains_key(name) {
            return Some(name.to_string());
        }
        let lower = name.to_ascii_lowercase();
        BUILTIN_TYPES.contains(&lower.as_str()).then_some(lower)
    }

    /// Registered per-call cost, or [`DEFAULT_METHOD_COST`].
    pub fn method_cost(&self, receiver: &str, method: &str) -> i64 {
        let receiver = self.cost_receiver(receiver).unwrap_or_default();
        self.costs
            .iter()
            .find(|c| c.receiver == receiver && c.method == method)
            .map_or(DEFAULT_METHOD_COST, |c| c.cost)
    }

    /// Cheapest member of `method`'s equivalence group on `receiver`
    /// (ties keep the requested method, then declaration order).
    pub fn cheapest_equivalent(&self, receiver: &str, method: &str) -> (String, i64) {
        let own = self.method_cost(receiver, method);
        let receiver = self.cost_receiver(receiver).unwrap_or_default();
        let group = self.costs.iter().find(|c| c.receiver == receiver && c.method == method).and_then(|c| c.group.clone());
        let mut best = (method.to_string(), own);
        if let Some(g) = group {
            for c in self.costs.iter().filter(|c| c.receiver == receiver && c.group.as_deref() == Some(&g)) {
                if c.cost < best.1 {
                    best = (c.method.clone(), c.cost);
                }
            }
        }
        best
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn indexes(&self) -> &[IndexDecl] {
        &self.indexes
    }

    pub fn costs(&self) -> &[CostDecl] {
        &self.costs
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn class(&self, id: usize) -> &ClassDef {
        &self.classes[id]
    }

    pub fn class_by_name(&self, name: &str) -> Option<&ClassDef> {
        self.class_id(name).map(|i| &self.classes[i])
    }

    /// Attributes in storage order: inherited ones first, root-most first.
    pub fn all_attrs(&self, id: usize) -> &[Attribute] {
        &self.layouts[id]
    }

    fn collect_attrs(&self, id: usize) -> Vec<Attribute> {
        let mut chain = vec![id];
        while let Some(p) = &self.classes[*chain.last().unwrap()].parent {
            chain.push(self.by_name[p]);
        }
        chain.iter().rev().flat_map(|&c| self.classes[c].attrs.iter().cloned()).collect()
    }

    /// Field position and type of `name` on class `id`, inherited included.
    pub fn attr(&self, id: usize, name: &str) -> Option<(usize, &AttrType)> {
        self.layouts[id].iter().enumerate().find(|(_, a)| a.name == name).map(|(i, a)| (i, &a.ty))
    }

    pub fn typecode(&self, id: usize) -> u32 {
        self.intervals[id].0
    }

    pub fn class_of_typecode(&self, code: u32) -> Option<usize> {
        self.preorder.get(code as usize).copied()
    }

    pub fn subtree_interval(&self, name: &str) -> Result<TypeInterval, CatalogError> {
        let id = self.class_id(name).ok_or_else(|| CatalogError::UnknownClass(name.to_string()))?;
        let (lo, hi) = self.intervals[id];
        Ok(TypeInterval { class: name.to_string(), lo, hi })
    }

    /// Interval of every class, in declaration order.
    pub fn typecodes(&self) -> Vec<TypeInterval> {
        self.classes
            .iter()
            .zip(&self.intervals)
            .map(|(c, &(lo, hi))| TypeInterval { class: c.name.clone(), lo, hi })
            .collect()
    }

    /// Class ids of `id`'s subtree (itself first), in typecode order.
    pub fn subtree(&self, id: usize) -> Vec<usize> {
        let (lo, hi) = self.intervals[id];
        (lo..=hi).map(|c| self.preorder[c as usize]).collect()
    }

    pub fn is_subclass(&self, sub: usize, sup: usize) -> bool {
        let (lo, hi) = self.intervals[sup];
        (lo..=hi).contains(&self.intervals[sub].0)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    pub attr: String,
    pub collection: bool,
}

/// `classes[i]` is the class before step `i`; `classes.last()` is reached
/// after the final reference step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathShape {
    pub classes: Vec<String>,
    pub steps: Vec<PathStep>,
    pub terminal_attr: Option<String>,
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.classes {
            match &c.parent {
                Some(p) => writeln!(f, "class {} extends {} {{", c.name, p)?,
                None => writeln!(f, "class {} {{", c.name)?,
            }
            for a in &c.attrs {
                writeln!(f, "    {}: {};", a.name, a.ty)?;
            }
            writeln!(f, "}}")?;
        }
        for ix in &self.indexes {
            writeln!(f, "index {};", ix.name())?;
        }
        for c in &self.costs {
            match &c.group {
                Some(g) => writeln!(f, "cost {}.{} = {} equiv {};", c.receiver, c.method, c.cost, g)?,
                None => writeln!(f, "cost {}.{} = {};", c.receiver, c.method, c.cost)?,
            }
        }
        Ok(())
    }
}

// ---- parser ----

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize, usize)>, CatalogError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 };
        let mut out = Vec::new();
        loop {
            lx.skip_trivia();
            let (line, col) = (lx.line, lx.col);
            let Some(&c) = lx.src.get(lx.pos) else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                let start = lx.pos;
                while lx.src.get(lx.pos).is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_') {
                    lx.bump();
                }
                Tok::Ident(String::from_utf8_lossy(&lx.src[start..lx.pos]).into_owned())
            } else if c.is_ascii_digit() || (c == b'-' && lx.src.get(lx.pos + 1).is_some_and(u8::is_ascii_digit)) {
                let start = lx.pos;
                lx.bump();
                while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                    lx.bump();
                }
                let text = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                Tok::Int(text.parse().map_err(|_| CatalogError::Syntax { line, col, msg: format!("bad integer {text}") })?)
            } else if b"{}();:,.=".contains(&c) {
                lx.bump();
                Tok::Sym(c as char)
            } else {
                return Err(CatalogError::Syntax { line, col, msg: format!("unexpected character {:?}", c as char) });
            };
            out.push((tok, line, col));
        }
    }

    fn bump(&mut self) {
        if self.src[self.pos] == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.src.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.bump(),
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while self.src.get(self.pos).is_some_and(|b| *b != b'\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn err(&self, msg: impl Into<String>) -> CatalogError {
        let (_, line, col) = &self.toks[self.at];
        CatalogError::Syntax { line: *line, col: *col, msg: msg.into() }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn ident(&mut self) -> Result<String, CatalogError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {}", describe(&other)))),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), CatalogError> {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}', found {}", describe(self.peek()))))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ty(&mut self) -> Result<AttrType, CatalogError> {
        let name = self.ident()?;
        Ok(match name.as_str() {
            "integer" | "int" => AttrType::Integer,
            "real" | "float" => AttrType::Real,
            "string" => AttrType::String,
            "point" => AttrType::Point,
            "polyline" => AttrType::Polyline,
            "polygon" => AttrType::Polygon,
            "dna" => AttrType::Dna,
            "protein" => AttrType::Protein,
            "ref" | "reference" => {
                self.sym('(')?;
                let c = self.ident()?;
                self.sym(')')?;
                AttrType::Ref(c)
            }
            "collection" => {
                self.sym('(')?;
                let elem = self.ty()?;
                let mut card = Cardinality::OneToMany;
                if self.eat(',') {
                    card = match (self.next(), self.next(), self.next()) {
                        (Tok::Int(1), Tok::Sym(':'), Tok::Ident(n)) if n == "N" => Cardinality::OneToMany,
                        (Tok::Ident(n), Tok::Sym(':'), Tok::Ident(m)) if n == "N" && m == "M" => Cardinality::ManyToMany,
                        _ => return Err(self.err("expected cardinality 1:N or N:M")),
                    };
                }
                self.sym(')')?;
                AttrType::Collection(Box::new(elem), card)
            }
            other => return Err(CatalogError::UnknownType(other.to_string())),
        })
    }

    fn dotted(&mut self) -> Result<Vec<String>, CatalogError> {
        let mut parts = vec![self.ident()?];
        while self.eat('.') {
            parts.push(self.ident()?);
        }
        Ok(parts)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(i) => format!("'{i}'"),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_schema(text: &str) -> Result<Catalog, CatalogError> {
    let mut p = Parser { toks: Lexer::tokens(text)?, at: 0 };
    let mut classes = Vec::new();
    let mut indexes = Vec::new();
    let mut costs = Vec::new();
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(k) if k == "class" => {
                p.next();
                let name = p.ident()?;
                let parent = if matches!(p.peek(), Tok::Ident(s) if s == "extends") {
                    p.next();
                    Some(p.ident()?)
                } else {
                    None
                };
                p.sym('{')?;
                let mut attrs = Vec::new();
                while !p.eat('}') {
                    let name = p.ident()?;
                    p.sym(':')?;
                    let ty = p.ty()?;
                    p.eat(';');
                    attrs.push(Attribute { name, ty });
                }
                p.eat(';');
                classes.push(ClassDef { name, parent, attrs });
            }
            Tok::Ident(k) if k == "index" => {
                p.next();
                let kw = p.ident()?;
                let kind = match kw.as_str() {
                    "btree" => IndexKind::Btree,
                    "rtree" => IndexKind::Rtree,
                    "hilbert" => IndexKind::Hilbert,
                    "pathdict" => IndexKind::PathDict,
                    "mt" => IndexKind::Mt,
                    other => return Err(p.err(format!("unknown index kind {other}"))),
                };
                p.sym('(')?;
                let decl = if kind == IndexKind::Mt {
                    let class = p.ident()?;
                    p.sym(',')?;
                    let attr = p.ident()?;
                    IndexDecl { kind, class, path: vec![attr] }
                } else {
                    let mut parts = p.dotted()?;
                    if parts.len() < 2 {
                        return Err(p.err("expected Class.attribute"));
                    }
                    let class = parts.remove(0);
                    IndexDecl { kind, class, path: parts }
                };
                p.sym(')')?;
                p.eat(';');
                indexes.push(decl);
            }
            Tok::Ident(k) if k == "cost" => {
                p.next();
                let receiver = p.ident()?;
                p.sym('.')?;
                let method = p.ident()?;
                p.sym('=')?;
                let cost = match p.next() {
                    Tok::Int(v) => v,
                    _ => return Err(p.err("expected integer cost")),
                };
                let group = if matches!(p.peek(), Tok::Ident(s) if s == "equiv") {
                    p.next();
                    Some(p.ident()?)
                } else {
                    None
                };
                p.eat(';');
                costs.push(CostDecl { receiver, method, cost, group });
            }
            other => return Err(p.err(format!("expected class, index or cost, found {}", describe(&other)))),
        }
    }
    Catalog::new(classes, indexes, costs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_class() {
        let c = parse_schema("class A {}").unwrap();
        assert_eq!(c.classes().len(), 1);
        assert!(c.classes()[0].attrs.is_empty());
    }

    #[test]
    fn self_inheritance_is_a_cycle() {
        assert_eq!(parse_schema("class B extends B {}"), Err(CatalogError::Cycle("B".into())));
        assert!(matches!(parse_schema("class A extends B {} class B extends A {}"), Err(CatalogError::Cycle(_))));
    }

    #[test]
    fn chain_intervals() {
        let c = parse_schema("class A {} class B extends A {} class C extends B {}").unwrap();
        let iv = |n| {
            let t = c.subtree_interval(n).unwrap();
            (t.lo, t.hi)
        };
        assert_eq!((iv("A"), iv("B"), iv("C")), ((0, 2), (1, 2), (2, 2)));
    }

    #[test]
    fn unrelated_roots_are_disjoint() {
        let c = parse_schema("class A {} class B {} class A1 extends A {}").unwrap();
        let a = c.subtree_interval("A").unwrap();
        let b = c.subtree_interval("B").unwrap();
        assert_eq!((a.lo, a.hi, b.lo, b.hi), (0, 1, 2, 2));
        assert!(c.subtree_interval("Z").is_err());
    }

    #[test]
    fn syntax_error_position() {
        let e = parse_schema("class A {\n  x integer;\n}").unwrap_err();
        assert_eq!(e, CatalogError::Syntax { line: 2, col: 5, msg: "expected ':', found 'integer'".into() });
        assert_eq!(parse_schema("class A { x: blob; }"), Err(CatalogError::UnknownType("blob".into())));
    }

    #[test]
    fn inherited_attributes_come_first() {
        let c = parse_schema("class A { a: integer; } class B extends A { b: string; }").unwrap();
        let names: Vec<_> = c.all_attrs(1).iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
        assert!(parse_schema("class A { a: integer; } class B extends A { a: string; }").is_err());
    }

    #[test]
    fn costs_and_equivalence() {
        let mut c = parse_schema("class A {} cost Polygon.area = 5 equiv g\ncost polygon.area_fan = 2 equiv g").unwrap();
        assert_eq!(c.method_cost("Polygon", "area"), 5);
        assert_eq!(c.cheapest_equivalent("polygon", "area"), ("area_fan".to_string(), 2));
        assert_eq!(c.method_cost("A", "m"), DEFAULT_METHOD_COST);
        assert!(c.register_cost("Nope", "m", 1, None).is_err());
        c.register_cost("A", "m", 3, None).unwrap();
        assert_eq!(c.method_cost("A", "m"), 3);
    }

    #[test]
    fn index_validation() {
        let s = "class P { name: string; shape: polygon; f: ref(F); } class F { kind: string; }";
        assert!(parse_schema(&format!("{s} index btree(P.name) index rtree(P.shape) index pathdict(P.f.kind)")).is_ok());
        assert!(parse_schema(&format!("{s} index btree(P.shape)")).is_err());
        assert!(parse_schema(&format!("{s} index pathdict(P.name)")).is_err());
        assert!(parse_schema(&format!("{s} index btree(P.name) index btree(P.name)")).is_err());
    }

    #[test]
    fn printer_round_trip() {
        let s = "// demo\nclass P { name: string; fs: collection(ref(F), N:M); } class F extends G { } class G { k: real; }\n\
                 index pathdict(P.fs.k); cost P.m = 4 equiv x;";
        let c = parse_schema(s).unwrap();
        assert_eq!(parse_schema(&c.to_text()).unwrap(), c);
    }
}
