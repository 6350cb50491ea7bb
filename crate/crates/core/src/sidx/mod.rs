//! Spatial access methods over object MBRs.

pub mod hilbert;
pub mod ops;
pub mod rtree;

pub use hilbert::{hilbert_value, HilbertValue, MAX_ORDER};
pub use ops::{closest, spatial_join, SpatialPredicate};
pub use rtree::{RTree, TreeParams, Variant, WindowIter, NODE_PAGE_BYTES};

use crate::geom::Rect;
use crate::oid::Oid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SidxError {
    #[error("rectangle lies outside the index world")]
    OutOfDomain,
    #[error("hilbert order {0} outside 1..=31")]
    BadOrder(u32),
    #[error("bulk load needs at least one entry")]
    EmptyInput,
    #[error("tree is empty")]
    EmptyTree,
    #[error("cannot resolve geometry of {0}")]
    Unresolvable(Oid),
    #[error("corrupt index page: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialEntry {
    pub key: Rect,
    pub oid: Oid,
}
