//! Index configurations the suites are timed under.

use crate::BenchError;
use biodb::catalog::{IndexDecl, IndexKind};
use biodb::store::Database;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IndexConfig {
    None,
    PathDict,
    PathDictRtree,
    Hilbert,
}

pub const ALL_CONFIGS: [IndexConfig; 4] = [IndexConfig::None, IndexConfig::PathDict, IndexConfig::PathDictRtree, IndexConfig::Hilbert];

impl IndexConfig {
    pub fn name(self) -> &'static str {
        match self {
            IndexConfig::None => "none",
            IndexConfig::PathDict => "pathdict",
            IndexConfig::PathDictRtree => "pathdict+rtree",
            IndexConfig::Hilbert => "hilbert",
        }
    }

    /// Indexes for the biodiversity schema.
    pub fn bio_indexes(self) -> Vec<IndexDecl> {
        let mut v = Vec::new();
        if self == IndexConfig::None {
            return v;
        }
        v.push(IndexDecl::new(IndexKind::Btree, "PlantSpecies", &["name"]));
        v.push(IndexDecl::new(IndexKind::PathDict, "PlantSpecies", &["flowerchar", "inflochar"]));
        v.push(IndexDecl::new(IndexKind::PathDict, "PlantSpecies", &["stDNAEntries"]));
        match self {
            IndexConfig::PathDictRtree => v.push(IndexDecl::new(IndexKind::Rtree, "PlantSpecies", &["georegion"])),
            IndexConfig::Hilbert => v.push(IndexDecl::new(IndexKind::Hilbert, "PlantSpecies", &["georegion"])),
            _ => {}
        }
        v
    }

    /// Indexes for the vector schema: scalar btrees from `pathdict` on, and
    /// spatial indexes of the configured kind.
    pub fn vector_indexes(self) -> Vec<IndexDecl> {
        let mut v = Vec::new();
        if self == IndexConfig::None {
            return v;
        }
        v.push(IndexDecl::new(IndexKind::Btree, "SitePoint", &["id"]));
        v.push(IndexDecl::new(IndexKind::Btree, "SitePoint", &["name"]));
        v.push(IndexDecl::new(IndexKind::Btree, "LandPolygon", &["area"]));
        let kind = match self {
            IndexConfig::PathDictRtree => IndexKind::Rtree,
            IndexConfig::Hilbert => IndexKind::Hilbert,
            _ => return v,
        };
        for (c, a) in [("LandPolygon", "shape"), ("SitePoint", "location"), ("Graph", "path")] {
            v.push(IndexDecl::new(kind, c, &[a]));
        }
        v
    }
}

impl fmt::Display for IndexConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexConfig {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        ALL_CONFIGS
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| BenchError::Config(format!("unknown index configuration {s:?} (expected none, pathdict, pathdict+rtree or hilbert)")))
    }
}

pub fn parse_configs(list: &str) -> Result<Vec<IndexConfig>, BenchError> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Makes the declared indexes exactly `want`, dropping and building as
/// needed.
pub fn apply(db: &mut Database, want: &[IndexDecl]) -> Result<(), BenchError> {
    let names: Vec<String> = want.iter().map(IndexDecl::name).collect();
    let have: Vec<String> = db.catalog().indexes().iter().map(IndexDecl::name).collect();
    for h in have.iter().filter(|h| !names.contains(h)) {
        db.drop_index(h)?;
    }
    for d in want {
        if !have.contains(&d.name()) {
            db.create_index(d.clone())?;
        }
    }
    Ok(())
}
