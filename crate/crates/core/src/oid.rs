use serde::{Deserialize, Serialize};
use std::fmt;

/// Object identifier: extent (class id) plus slot within the extent.
/// Slots are never reused after deletion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Oid {
    pub extent: u32,
    pub slot: u32,
}

impl Oid {
    pub const fn new(extent: u32, slot: u32) -> Self {
        Oid { extent, slot }
    }

    pub const fn to_u64(self) -> u64 {
        ((self.extent as u64) << 32) | self.slot as u64
    }

    pub const fn from_u64(v: u64) -> Self {
        Oid { extent: (v >> 32) as u32, slot: v as u32 }
    }
}

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}:{}", self.extent, self.slot)
    }
}
