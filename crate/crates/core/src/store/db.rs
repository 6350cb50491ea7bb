use super::index::{IndexData, IndexImage};
use super::pager::{Pager, PAGE_PAYLOAD};
use super::{Objects, Record, SeqId, StoreError, Value};
use crate::catalog::{parse_schema, Catalog, IndexDecl};
use crate::oid::Oid;
use crate::seq::Sequence;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreConfig {
    /// Read-cache capacity in pages; 40 pages is 320 KiB.
    pub cache_pages: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig { cache_pages: 40 }
    }
}

/// Root of the file image, stored as the directory blob.
#[derive(Serialize, Deserialize)]
struct Directory {
    schema: String,
    extents: Vec<u64>,
    sequences: u64,
    /// index name -> (meta blob, page blobs)
    indexes: Vec<(String, u64, Vec<u64>)>,
}

pub struct Database {
    pager: Option<Pager>,
    objects: Objects,
    indexes: BTreeMap<String, IndexData>,
}

impl Database {
    pub fn in_memory() -> Self {
        Database { pager: None, objects: Objects::new(Catalog::default()), indexes: BTreeMap::new() }
    }

    pub fn create(path: &Path, cfg: StoreConfig) -> Result<Self, StoreError> {
        let pager = Pager::create(path, cfg.cache_pages)?;
        let mut db = Database { pager: Some(pager), ..Database::in_memory() };
        db.flush()?;
        Ok(db)
    }

    pub fn open(path: &Path, cfg: StoreConfig) -> Result<Self, StoreError> {
        let mut pager = Pager::open(path, cfg.cache_pages)?;
        let dir_page = pager.dir_first();
        if dir_page == 0 {
            return Err(StoreError::Corrupt("missing directory".into()));
        }
        let corrupt = |what: &str, e: bincode::Error| StoreError::Corrupt(format!("{what}: {e}"));
        let dir: Directory = bincode::deserialize(&pager.read_blob(dir_page)?).map_err(|e| corrupt("directory", e))?;
        let catalog = parse_schema(&dir.schema)?;
        if dir.extents.len() != catalog.classes().len() {
            return Err(StoreError::Corrupt("extent count does not match catalog".into()));
        }
        let mut objects = Objects::new(catalog);
        for (i, &p) in dir.extents.iter().enumerate() {
            objects.extents[i] = bincode::deserialize(&pager.read_blob(p)?).map_err(|e| corrupt("extent", e))?;
        }
        objects.sequences = bincode::deserialize(&pager.read_blob(dir.sequences)?).map_err(|e| corrupt("sequences", e))?;
        let mut indexes = BTreeMap::new();
        for (name, meta, pages) in &dir.indexes {
            let decl = objects
                .catalog
                .indexes()
                .iter()
                .find(|d| &d.name() == name)
                .cloned()
                .ok_or_else(|| StoreError::Corrupt(format!("index {name} not in catalog")))?;
            let img = IndexImage {
                meta: pager.read_blob(*meta)?,
                pages: pages.iter().map(|&p| pager.read_blob(p)).collect::<Result<_, _>>()?,
            };
            indexes.insert(name.clone(), IndexData::from_image(&decl, &objects, &img)?);
        }
        if indexes.len() != objects.catalog.indexes().len() {
            return Err(StoreError::Corrupt("catalog declares indexes with no stored data".into()));
        }
        Ok(Database { pager: Some(pager), objects, indexes })
    }

    pub fn objects(&self) -> &Objects {
        &self.objects
    }

    pub fn catalog(&self) -> &Catalog {
        &self.objects.catalog
    }

    /// Replaces the catalog; allowed only while no objects exist. Indexes
    /// declared in the schema are created empty.
    pub fn load_schema(&mut self, catalog: Catalog) -> Result<(), StoreError> {
        if self.objects.extents.iter().any(|e| !e.is_empty()) || !self.objects.sequences.is_empty() {
            return Err(StoreError::SchemaLocked);
        }
        let decls = catalog.indexes().to_vec();
        self.objects = Objects::new(catalog);
        self.indexes.clear();
        for d in decls {
            let data = IndexData::build(&d, &self.objects)?;
            self.indexes.insert(d.name(), data);
        }
        Ok(())
    }

    pub fn put_sequence(&mut self, s: Sequence) -> SeqId {
        self.objects.sequences.push(s);
        (self.objects.sequences.len() - 1) as SeqId
    }

    pub fn sequence(&self, id: SeqId) -> Result<&Sequence, StoreError> {
        self.objects.sequence(id)
    }

    fn class_id(&self, class: &str) -> Result<usize, StoreError> {
        self.catalog().class_id(class).ok_or_else(|| StoreError::UnknownClass(class.to_string()))
    }

    /// Inserts with fields in catalog layout order.
    pub fn insert_record(&mut self, class: &str, fields: Vec<Value>) -> Result<Oid, StoreError> {
        let cid = self.class_id(class)?;
        let fields = self.objects.validate(cid, fields)?;
        let typecode = self.catalog().typecode(cid);
        let ext = &mut self.objects.extents[cid];
        let slot = u32::try_from(ext.len()).map_err(|_| StoreError::Corrupt("extent full".into()))?;
        ext.push(Some(Record { typecode, fields }));
        let oid = Oid::new(cid as u32, slot);
        for ix in self.indexes.values_mut() {
            ix.after_change(&self.objects, oid)?;
        }
        Ok(oid)
    }

    /// Inserts with named fields; omitted attributes are null.
    pub fn insert_object(&mut self, class: &str, fields: &[(&str, Value)]) -> Result<Oid, StoreError> {
        let cid = self.class_id(class)?;
        let attrs = self.catalog().all_attrs(cid);
        let mut values = vec![Value::Null; attrs.len()];
        for (name, v) in fields {
            let pos = attrs.iter().position(|a| a.name == *name).ok_or_else(|| StoreError::Validation {
                class: class.to_string(),
                attr: name.to_string(),
                msg: "no such attribute".into(),
            })?;
            values[pos] = v.clone();
        }
        self.insert_record(class, values)
    }

    pub fn get_object(&self, oid: Oid) -> Result<&Record, StoreError> {
        self.objects.get(oid)
    }

    /// Tombstones the object; its oid is never handed out again.
    pub fn delete_object(&mut self, oid: Oid) -> Result<(), StoreError> {
        self.objects.get(oid)?;
        for ix in self.indexes.values_mut() {
            ix.before_change(&self.objects, oid)?;
        }
        self.objects.extents[oid.extent as usize][oid.slot as usize] = None;
        for ix in self.indexes.values_mut() {
            ix.after_change(&self.objects, oid)?;
        }
        Ok(())
    }

    pub fn set_field(&mut self, oid: Oid, attr: &str, v: Value) -> Result<(), StoreError> {
        self.objects.get(oid)?;
        let cid = oid.extent as usize;
        let (pos, ty) = self.catalog().attr(cid, attr).ok_or_else(|| StoreError::Validation {
            class: self.catalog().class(cid).name.clone(),
            attr: attr.to_string(),
            msg: "no such attribute".into(),
        })?;
        let ty = ty.clone();
        let v = self.objects.check_value(cid, attr, &ty, v)?;
        for ix in self.indexes.values_mut() {
            ix.before_change(&self.objects, oid)?;
        }
        self.objects.extents[cid][oid.slot as usize].as_mut().unwrap().fields[pos] = v;
        for ix in self.indexes.values_mut() {
            ix.after_change(&self.objects, oid)?;
        }
        Ok(())
    }

    pub fn scan_extent(&self, class: &str, subclasses: bool) -> Result<impl Iterator<Item = (Oid, &Record)> + '_, StoreError> {
        let cid = self.class_id(class)?;
        Ok(self.objects.scan(cid, subclasses))
    }

    /// Declares and builds an index; declaring one twice is an error.
    pub fn create_index(&mut self, decl: IndexDecl) -> Result<(), StoreError> {
        self.objects.catalog.add_index(decl.clone())?;
        match IndexData::build(&decl, &self.objects) {
            Ok(data) => {
                self.indexes.insert(decl.name(), data);
                Ok(())
            }
            Err(e) => {
                self.objects.catalog.remove_index(&decl.name());
                Err(e)
            }
        }
    }

    pub fn drop_index(&mut self, name: &str) -> Result<(), StoreError> {
        if self.indexes.remove(name).is_none() {
            return Err(StoreError::UnknownIndex(name.to_string()));
        }
        self.objects.catalog.remove_index(name);
        Ok(())
    }

    pub fn index(&self, name: &str) -> Option<&IndexData> {
        self.indexes.get(name)
    }

    pub fn indexes(&self) -> &BTreeMap<String, IndexData> {
        &self.indexes
    }

    /// Rewrites the file image. In-memory databases ignore this.
    pub fn flush(&mut self) -> Result<(), StoreError> {
        let Some(pager) = self.pager.as_mut() else { return Ok(()) };
        let old = pager.dir_first();
        if old != 0 {
            let dir: Directory =
                bincode::deserialize(&pager.read_blob(old)?).map_err(|e| StoreError::Corrupt(format!("directory: {e}")))?;
            for p in dir.extents.iter().chain([&dir.sequences]) {
                pager.free_blob(*p)?;
            }
            for (_, meta, pages) in &dir.indexes {
                pager.free_blob(*meta)?;
                for p in pages {
                    pager.free_blob(*p)?;
                }
            }
            pager.free_blob(old)?;
        }
        let schema = self.objects.catalog.to_text();
        let mut extents = Vec::with_capacity(self.objects.extents.len());
        for e in &self.objects.extents {
            extents.push(pager.write_blob(&bytes(e))?);
        }
        let sequences = pager.write_blob(&bytes(&self.objects.sequences))?;
        let mut indexes = Vec::new();
        for (name, ix) in &self.indexes {
            let img = ix.image();
            let meta = pager.write_blob(&img.meta)?;
            let pages = img.pages.iter().map(|p| pager.write_blob(p)).collect::<Result<Vec<_>, _>>()?;
            indexes.push((name.clone(), meta, pages));
        }
        let dir = Directory { schema, extents, sequences, indexes };
        let first = pager.write_blob(&bincode::serialize(&dir).expect("directory serializes"))?;
        pager.set_dir_first(first)?;
        pager.sync()
    }

    pub fn close(mut self) -> Result<(), StoreError> {
        self.flush()
    }

    pub fn stats(&self) -> Stats {
        let cat = self.catalog();
        let extents = (0..cat.classes().len())
            .map(|cid| {
                let bytes = bytes(&self.objects.extents[cid]).len();
                ExtentStats {
                    class: cat.class(cid).name.clone(),
                    typecode: cat.typecode(cid),
                    live: self.objects.live_count(cid),
                    deleted: self.objects.slot_count(cid) - self.objects.live_count(cid),
                    pages: bytes.div_ceil(PAGE_PAYLOAD).max(1),
                }
            })
            .collect();
        let indexes = self
            .indexes
            .iter()
            .map(|(name, ix)| IndexStats {
                name: name.clone(),
                kind: ix.kind().keyword().to_string(),
                entries: ix.entry_count(),
                pages: ix.image().page_count(),
            })
            .collect();
        let seq_bytes = bytes(&self.objects.sequences).len();
        Stats {
            extents,
            indexes,
            sequences: self.objects.sequences.len(),
            sequence_pages: seq_bytes.div_ceil(PAGE_PAYLOAD).max(1),
            file_pages: self.pager.as_ref().map(|p| p.page_count()),
        }
    }
}

fn bytes<T: Serialize>(v: &T) -> Vec<u8> {
    bincode::serialize(v).expect("in-memory state serializes")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtentStats {
    pub class: String,
    pub typecode: u32,
    pub live: usize,
    pub deleted: usize,
    pub pages: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub name: String,
    pub kind: String,
    pub entries: usize,
    pub pages: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub extents: Vec<ExtentStats>,
    pub indexes: Vec<IndexStats>,
    pub sequences: usize,
    pub sequence_pages: usize,
    pub file_pages: Option<u64>,
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>8} {:>10} {:>8} {:>7}", "extent", "typecode", "objects", "deleted", "pages")?;
        for e in &self.extents {
            writeln!(f, "{:<24} {:>8} {:>10} {:>8} {:>7}", e.class, e.typecode, e.live, e.deleted, e.pages)?;
        }
        writeln!(f, "{:<40} {:>9} {:>10} {:>7}", "index", "kind", "entries", "pages")?;
        for i in &self.indexes {
            writeln!(f, "{:<40} {:>9} {:>10} {:>7}", i.name, i.kind, i.entries, i.pages)?;
        }
        writeln!(f, "sequences {} ({} pages)", self.sequences, self.sequence_pages)?;
        if let Some(p) = self.file_pages {
            writeln!(f, "file pages {p}")?;
        }
        Ok(())
    }
}
