//! Persistent object store: class extents, object records, the sequence
//! area and every declared index, kept in one paged file.
//!
//! The working set lives in memory; `flush` rewrites the file image and
//! `open` reads it back. There is no log and no recovery: data reaches disk
//! only on `flush`/`close`.

mod db;
pub mod index;
pub mod key;
pub mod pager;

pub use db::{Database, ExtentStats, IndexStats, Stats, StoreConfig};
pub use index::{BtreeIndex, IndexData, SpatialIndex};
pub use key::{encode_key, KeyError, KeyValue, TypedKey};

use crate::catalog::{AttrType, Catalog, CatalogError};
use crate::geom::{Geometry, GeomError};
use crate::oid::Oid;
use crate::seq::Sequence;
use crate::sidx::SidxError;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt database: {0}")]
    Corrupt(String),
    #[error("unsupported database format version {0}")]
    Version(u32),
    #[error("refusing to create over non-empty file {0}")]
    Exists(String),
    #[error("no object {0}")]
    NotFound(Oid),
    #[error("object {0} has been deleted")]
    Deleted(Oid),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("{class}.{attr}: {msg}")]
    Validation { class: String, attr: String, msg: String },
    #[error("unknown index {0}")]
    UnknownIndex(String),
    #[error("index {0}: {1}")]
    Index(String, String),
    #[error("schema cannot change once objects exist")]
    SchemaLocked,
    #[error("no sequence #{0}")]
    NoSequence(u32),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Sidx(#[from] SidxError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Hidx(#[from] crate::hidx::HidxError),
}

/// Index into the database's sequence area.
pub type SeqId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Str(String),
    Geom(Geometry),
    Seq(SeqId),
    Ref(Oid),
    List(Vec<Value>),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Order-preserving key of a scalar; `None` for null.
    pub fn to_key(&self) -> Result<Option<TypedKey>, KeyError> {
        let kv = match self {
            Value::Null => return Ok(None),
            Value::Int(i) => KeyValue::Int(*i),
            Value::Real(r) => KeyValue::Real(*r),
            Value::Str(s) => KeyValue::Str(s.clone()),
            Value::Geom(_) => return Err(KeyError::Unsupported("geometry")),
            Value::Seq(_) => return Err(KeyError::Unsupported("sequence")),
            Value::Ref(_) => return Err(KeyError::Unsupported("reference")),
            Value::List(_) => return Err(KeyError::Unsupported("collection")),
        };
        encode_key(&kv).map(Some)
    }

    /// Referenced oids: the ref itself or every ref in a list.
    pub fn refs(&self) -> Vec<Oid> {
        match self {
            Value::Ref(o) => vec![*o],
            Value::List(vs) => vs.iter().filter_map(|v| if let Value::Ref(o) = v { Some(*o) } else { None }).collect(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Str(s) => f.write_str(s),
            Value::Geom(g) => write!(f, "{}", serde_json::to_string(g).unwrap_or_default()),
            Value::Seq(id) => write!(f, "seq#{id}"),
            Value::Ref(o) => write!(f, "{o}"),
            Value::List(vs) => {
                f.write_str("[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub typecode: u32,
    /// One value per catalog attribute, in layout order.
    pub fields: Vec<Value>,
}

/// Extents and the sequence area, without indexes. Index code reads
/// objects through this while the index set is borrowed mutably.
#[derive(Debug, Clone)]
pub struct Objects {
    catalog: Catalog,
    /// Per class id; `None` marks a deleted slot.
    extents: Vec<Vec<Option<Record>>>,
    sequences: Vec<Sequence>,
}

impl Objects {
    pub fn new(catalog: Catalog) -> Self {
        let n = catalog.classes().len();
        Objects { catalog, extents: vec![Vec::new(); n], sequences: Vec::new() }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn get(&self, oid: Oid) -> Result<&Record, StoreError> {
        match self.extents.get(oid.extent as usize).and_then(|e| e.get(oid.slot as usize)) {
            Some(Some(r)) => Ok(r),
            Some(None) => Err(StoreError::Deleted(oid)),
            None => Err(StoreError::NotFound(oid)),
        }
    }

    pub fn is_live(&self, oid: Oid) -> bool {
        self.get(oid).is_ok()
    }

    pub fn class_of(&self, oid: Oid) -> usize {
        oid.extent as usize
    }

    /// Field by attribute name; unknown attributes error.
    pub fn field(&self, oid: Oid, attr: &str) -> Result<&Value, StoreError> {
        let rec = self.get(oid)?;
        let cid = oid.extent as usize;
        let (pos, _) = self.catalog.attr(cid, attr).ok_or_else(|| StoreError::Validation {
            class: self.catalog.class(cid).name.clone(),
            attr: attr.to_string(),
            msg: "no such attribute".into(),
        })?;
        Ok(&rec.fields[pos])
    }

    pub fn sequence(&self, id: SeqId) -> Result<&Sequence, StoreError> {
        self.sequences.get(id as usize).ok_or(StoreError::NoSequence(id))
    }

    pub fn sequence_count(&self) -> usize {
        self.sequences.len()
    }

    /// Live objects of one extent, in slot order.
    pub fn scan_one(&self, class_id: usize) -> impl Iterator<Item = (Oid, &Record)> + '_ {
        self.extents[class_id]
            .iter()
            .enumerate()
            .filter_map(move |(slot, r)| r.as_ref().map(|r| (Oid::new(class_id as u32, slot as u32), r)))
    }

    /// Live objects of `class_id` and, optionally, its subclasses, in
    /// (extent id, slot) order.
    pub fn scan(&self, class_id: usize, subclasses: bool) -> impl Iterator<Item = (Oid, &Record)> + '_ {
        let mut ids = if subclasses { self.catalog.subtree(class_id) } else { vec![class_id] };
        ids.sort_unstable();
        ids.into_iter().flat_map(move |c| self.scan_one(c))
    }

    pub fn live_count(&self, class_id: usize) -> usize {
        self.extents[class_id].iter().filter(|r| r.is_some()).count()
    }

    pub fn slot_count(&self, class_id: usize) -> usize {
        self.extents[class_id].len()
    }

    /// Checks `v` against `ty`, coercing integers to reals.
    fn check_value(&self, class: usize, attr: &str, ty: &AttrType, v: Value) -> Result<Value, StoreError> {
        let bad = |msg: String| StoreError::Validation {
            class: self.catalog.class(class).name.clone(),
            attr: attr.to_string(),
            msg,
        };
        let got = |v: &Value| -> &'static str {
            match v {
                Value::Null => "null",
                Value::Int(_) => "integer",
                Value::Real(_) => "real",
                Value::Str(_) => "string",
                Value::Geom(g) => g.kind(),
                Value::Seq(_) => "sequence",
                Value::Ref(_) => "reference",
                Value::List(_) => "collection",
            }
        };
        match (ty, v) {
            (_, Value::Null) => Ok(Value::Null),
            (AttrType::Integer, v @ Value::Int(_)) => Ok(v),
            (AttrType::Real, Value::Int(i)) => Ok(Value::Real(i as f64)),
            (AttrType::Real, Value::Real(r)) if r.is_nan() => Err(bad("NaN is not allowed".into())),
            (AttrType::Real, v @ Value::Real(_)) => Ok(v),
            (AttrType::String, v @ Value::Str(_)) => Ok(v),
            (AttrType::Point, v @ Value::Geom(Geometry::Point(_)))
            | (AttrType::Polyline, v @ Value::Geom(Geometry::Polyline(_)))
            | (AttrType::Polygon, v @ Value::Geom(Geometry::Polygon(_))) => Ok(v),
            (AttrType::Dna | AttrType::Protein, Value::Seq(id)) => {
                let s = self.sequence(id)?;
                let want = if *ty == AttrType::Dna { "dna" } else { "protein" };
                if s.alphabet() != want {
                    return Err(bad(format!("expected a {want} sequence, got {}", s.alphabet())));
                }
                Ok(Value::Seq(id))
            }
            (AttrType::Ref(target), Value::Ref(o)) => {
                self.get(o).map_err(|e| bad(format!("reference {o}: {e}")))?;
                let tid = self.catalog.class_id(target).ok_or_else(|| StoreError::UnknownClass(target.clone()))?;
                if !self.catalog.is_subclass(o.extent as usize, tid) {
                    return Err(bad(format!("{o} is a {}, not a {target}", self.catalog.class(o.extent as usize).name)));
                }
                Ok(Value::Ref(o))
            }
            (AttrType::Collection(elem, _), Value::List(vs)) => {
                let mut out = Vec::with_capacity(vs.len());
                for v in vs {
                    if v.is_null() {
                        return Err(bad("collections cannot hold null".into()));
                    }
                    out.push(self.check_value(class, attr, elem, v)?);
                }
                Ok(Value::List(out))
            }
            (ty, v) => Err(bad(format!("expected {ty}, got {}", got(&v)))),
        }
    }

    fn validate(&self, class: usize, fields: Vec<Value>) -> Result<Vec<Value>, StoreError> {
        let attrs = self.catalog.all_attrs(class);
        if fields.len() != attrs.len() {
            return Err(StoreError::Validation {
                class: self.catalog.class(class).name.clone(),
                attr: "*".into(),
                msg: format!("expected {} fields, got {}", attrs.len(), fields.len()),
            });
        }
        attrs.iter().zip(fields).map(|(a, v)| self.check_value(class, &a.name, &a.ty, v)).collect()
    }
}
