//! Hierarchy access methods: the multi-key type index over inheritance and
//! the path dictionary over aggregation paths.

pub mod mt;
pub mod pd;

pub use mt::MtIndex;
pub use pd::{PathDictionary, PathRecord, RecordId};

use crate::catalog::CatalogError;
use crate::sidx::SidxError;
use crate::store::KeyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HidxError {
    #[error("class {class} lies outside the subtree of {root} covered by this index")]
    OutsideSubtree { class: String, root: String },
    #[error("path dictionary {0} has no terminal attribute index")]
    NoAttrIndex(String),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("corrupt path dictionary image: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Sidx(#[from] SidxError),
}
