//! Single-file page manager: fixed 8 KiB pages, a header page, chained blob
//! pages and a free list threaded through released pages.
//!
//! Header (page 0): magic, format version, page count, free-list head and the
//! first page of the directory blob. Blob page: next page id (0 ends the
//! chain), payload length, payload.

use super::StoreError;
use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

pub const PAGE_SIZE: usize = 8192;
pub const MAGIC: &[u8; 8] = b"BIODB\0\x01\x00";
pub const FORMAT_VERSION: u32 = 1;
const BLOB_HEADER: usize = 12;
pub const PAGE_PAYLOAD: usize = PAGE_SIZE - BLOB_HEADER;

pub struct Pager {
    file: File,
    page_count: u64,
    free_head: u64,
    dir_first: u64,
    cache: HashMap<u64, Vec<u8>>,
    order: VecDeque<u64>,
    cache_pages: usize,
}

impl Pager {
    /// Creates a fresh file; fails if `path` exists and is non-empty.
    pub fn create(path: &Path, cache_pages: usize) -> Result<Pager, StoreError> {
        if path.exists() && std::fs::metadata(path)?.len() > 0 {
            return Err(StoreError::Exists(path.display().to_string()));
        }
        let file = OpenOptions::new().read(true).write(true).create(true).truncate(true).open(path)?;
        let mut p = Pager {
            file,
            page_count: 1,
            free_head: 0,
            dir_first: 0,
            cache: HashMap::new(),
            order: VecDeque::new(),
            cache_pages,
        };
        p.write_header()?;
        Ok(p)
    }

    pub fn open(path: &Path, cache_pages: usize) -> Result<Pager, StoreError> {
        let mut file = OpenOptions::new().read(true).write(true).open(path)?;
        let mut head = vec![0u8; PAGE_SIZE];
        file.read_exact(&mut head).map_err(|_| StoreError::Corrupt("file shorter than header page".into()))?;
        if &head[..8] != MAGIC {
            return Err(StoreError::Corrupt("bad magic".into()));
        }
        let version = u32::from_le_bytes(head[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(StoreError::Version(version));
        }
        let word = |at: usize| u64::from_le_bytes(head[at..at + 8].try_into().unwrap());
        let (page_count, free_head, dir_first) = (word(12), word(20), word(28));
        let len = file.metadata()?.len();
        if len != page_count * PAGE_SIZE as u64 {
            return Err(StoreError::Corrupt(format!("file length {len} does not match {page_count} pages")));
        }
        Ok(Pager { file, page_count, free_head, dir_first, cache: HashMap::new(), order: VecDeque::new(), cache_pages })
    }

    pub fn page_count(&self) -> u64 {
        self.page_count
    }

    pub fn dir_first(&self) -> u64 {
        self.dir_first
    }

    pub fn set_dir_first(&mut self, p: u64) -> Result<(), StoreError> {
        self.dir_first = p;
        self.write_header()
    }

    fn write_header(&mut self) -> Result<(), StoreError> {
        let mut head = vec![0u8; PAGE_SIZE];
        head[..8].copy_from_slice(MAGIC);
        head[8..12].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        head[12..20].copy_from_slice(&self.page_count.to_le_bytes());
        head[20..28].copy_from_slice(&self.free_head.to_le_bytes());
        head[28..36].copy_from_slice(&self.dir_first.to_le_bytes());
        self.write_page(0, &head)
    }

    fn read_page(&mut self, id: u64) -> Result<Vec<u8>, StoreError> {
        if id == 0 || id >= self.page_count {
            return Err(StoreError::Corrupt(format!("page {id} out of range")));
        }
        if let Some(p) = self.cache.get(&id) {
            return Ok(p.clone());
        }
        let mut buf = vec![0u8; PAGE_SIZE];
        self.file.seek(SeekFrom::Start(id * PAGE_SIZE as u64))?;
        self.file.read_exact(&mut buf)?;
        if self.cache_pages > 0 {
            if self.cache.len() >= self.cache_pages {
                if let Some(old) = self.order.pop_front() {
                    self.cache.remove(&old);
                }
            }
            self.cache.insert(id, buf.clone());
            self.order.push_back(id);
        }
        Ok(buf)
    }

    fn write_page(&mut self, id: u64, data: &[u8]) -> Result<(), StoreError> {
        debug_assert_eq!(data.len(), PAGE_SIZE);
        self.file.seek(SeekFrom::Start(id * PAGE_SIZE as u64))?;
        self.file.write_all(data)?;
        if let Some(c) = self.cache.get_mut(&id) {
            c.copy_from_slice(data);
        }
        Ok(())
    }

    fn alloc(&mut self) -> Result<u64, StoreError> {
        if self.free_head != 0 {
            let id = self.free_head;
            let page = self.read_page(id)?;
            self.free_head = u64::from_le_bytes(page[..8].try_into().unwrap());
            return Ok(id);
        }
        let id = self.page_count;
        self.page_count += 1;
        Ok(id)
    }

    fn release(&mut self, id: u64) -> Result<(), StoreError> {
        let mut page = vec![0u8; PAGE_SIZE];
        page[..8].copy_from_slice(&self.free_head.to_le_bytes());
        self.write_page(id, &page)?;
        self.free_head = id;
        Ok(())
    }

    /// Writes `data` into a fresh page chain; returns the first page.
    pub fn write_blob(&mut self, data: &[u8]) -> Result<u64, StoreError> {
        let chunks: Vec<&[u8]> = if data.is_empty() { vec![&[][..]] } else { data.chunks(PAGE_PAYLOAD).collect() };
        let ids: Vec<u64> = (0..chunks.len()).map(|_| self.alloc()).collect::<Result<_, _>>()?;
        for (k, chunk) in chunks.iter().enumerate() {
            let next = ids.get(k + 1).copied().unwrap_or(0);
            let mut page = vec![0u8; PAGE_SIZE];
            page[..8].copy_from_slice(&next.to_le_bytes());
            page[8..12].copy_from_slice(&(chunk.len() as u32).to_le_bytes());
            page[BLOB_HEADER..BLOB_HEADER + chunk.len()].copy_from_slice(chunk);
            self.write_page(ids[k], &page)?;
        }
        Ok(ids[0])
    }

    pub fn read_blob(&mut self, first: u64) -> Result<Vec<u8>, StoreError> {
        let mut out = Vec::new();
        let mut cur = first;
        let mut hops = 0u64;
        while cur != 0 {
            hops += 1;
            if hops > self.page_count {
                return Err(StoreError::Corrupt("blob chain loops".into()));
            }
            let page = self.read_page(cur)?;
            let len = u32::from_le_bytes(page[8..12].try_into().unwrap()) as usize;
            if len > PAGE_PAYLOAD {
                return Err(StoreError::Corrupt(format!("page {cur} claims {len} bytes")));
            }
            out.extend_from_slice(&page[BLOB_HEADER..BLOB_HEADER + len]);
            cur = u64::from_le_bytes(page[..8].try_into().unwrap());
        }
        Ok(out)
    }

    pub fn free_blob(&mut self, first: u64) -> Result<(), StoreError> {
        let mut cur = first;
        while cur != 0 {
            let page = self.read_page(cur)?;
            let next = u64::from_le_bytes(page[..8].try_into().unwrap());
            self.release(cur)?;
            cur = next;
        }
        Ok(())
    }

    pub fn sync(&mut self) -> Result<(), StoreError> {
        self.write_header()?;
        self.file.flush()?;
        self.file.sync_data()?;
        Ok(())
    }
}
