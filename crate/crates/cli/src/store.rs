//! Disk-page record store. Full-dimensional records are packed as f32 into
//! fixed-size pages; candidate refinement fetches pages, and the I/O counter
//! charges one unit per *distinct* page touched by a fetch.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_PAGE_SIZE: usize = 32 * 1024;

/// Pure address arithmetic for a page layout: `records_per_page` whole
/// records per page, no record straddles a page boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageGeometry {
    pub page_size: usize,
    pub d: usize,
    pub records_per_page: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PointAddress {
    pub page: u64,
    pub slot: u64,
}

impl PageGeometry {
    pub fn new(page_size: usize, d: usize) -> Result<Self> {
        if !page_size.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "page size must be a power of two, got {page_size}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("record dimension must be positive".into()));
        }
        let records_per_page = page_size / (4 * d);
        if records_per_page == 0 {
            return Err(Error::InvalidArgument(format!(
                "page size {page_size} cannot hold one {d}-dimensional f32 record"
            )));
        }
        Ok(PageGeometry { page_size, d, records_per_page })
    }

    /// Address of the record stored at `position` in the on-disk order.
    pub fn address_for(&self, position: usize) -> PointAddress {
        PointAddress {
            page: (position / self.records_per_page) as u64,
            slot: (position % self.records_per_page) as u64,
        }
    }

    pub fn pages_for(&self, n: usize) -> usize {
        n.div_ceil(self.records_per_page)
    }

    fn byte_offset(&self, addr: PointAddress) -> u64 {
        addr.page * self.page_size as u64 + addr.slot * 4 * self.d as u64
    }
}

/// Counts distinct pages read; shared across a search so every fetch in one
/// query accumulates into the same tally.
#[derive(Debug, Default)]
pub struct IoCounter {
    pages: AtomicU64,
}

impl IoCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_pages(&self, n: u64) {
        self.pages.fetch_add(n, Ordering::Relaxed);
    }

    pub fn pages_read(&self) -> u64 {
        self.pages.load(Ordering::Relaxed)
    }
}

#[derive(Debug)]
enum Backend {
    Mem(Vec<u8>),
    File { path: PathBuf, file: std::sync::Mutex<File>, base_offset: u64 },
}

/// Paged store of n full-dimensional f32 records.
#[derive(Debug)]
pub struct PageStore {
    geom: PageGeometry,
    page_count: usize,
    backend: Backend,
}

impl PageStore {
    /// Packs `points[order[0]], points[order[1]], ...` into pages and returns
    /// the store plus the address of every record id.
    pub fn write_in_order(
        points: &bregpart_core::data::Matrix,
        order: &[usize],
        page_size: usize,
    ) -> Result<(PageStore, Vec<PointAddress>)> {
        assert_eq!(order.len(), points.rows());
        let geom = PageGeometry::new(page_size, points.cols())?;
        let page_count = geom.pages_for(points.rows());
        let mut bytes = vec![0u8; page_count * page_size];
        let mut addresses = vec![PointAddress { page: 0, slot: 0 }; points.rows()];
        for (pos, &id) in order.iter().enumerate() {
            let addr = geom.address_for(pos);
            addresses[id] = addr;
            let mut off = geom.byte_offset(addr) as usize;
            for &v in points.row(id) {
                bytes[off..off + 4].copy_from_slice(&(v as f32).to_le_bytes());
                off += 4;
            }
        }
        Ok((PageStore { geom, page_count, backend: Backend::Mem(bytes) }, addresses))
    }

    /// Reopens a store whose pages live inside a larger file starting at
    /// `base_offset`.
    pub fn open_in_file(
        path: PathBuf,
        file: File,
        base_offset: u64,
        page_size: usize,
        d: usize,
        page_count: usize,
    ) -> Result<PageStore> {
        let geom = PageGeometry::new(page_size, d)?;
        Ok(PageStore {
            geom,
            page_count,
            backend: Backend::File { path, file: std::sync::Mutex::new(file), base_offset },
        })
    }

    pub fn geometry(&self) -> PageGeometry {
        self.geom
    }

    pub fn page_count(&self) -> usize {
        self.page_count
    }

    /// Raw page bytes for serialization.
    pub fn raw_pages(&self) -> Result<Vec<u8>> {
        match &self.backend {
            Backend::Mem(bytes) => Ok(bytes.clone()),
            Backend::File { path, file, base_offset } => {
                let mut f = file.lock().unwrap();
                f.seek(SeekFrom::Start(*base_offset)).map_err(|e| Error::io(path, e))?;
                let mut buf = vec![0u8; self.page_count * self.geom.page_size];
                f.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
                Ok(buf)
            }
        }
    }

    fn read_page(&self, page: u64) -> Result<Vec<u8>> {
        if page as usize >= self.page_count {
            return Err(Error::BadAddress { page, slot: 0 });
        }
        match &self.backend {
            Backend::Mem(bytes) => {
                let start = page as usize * self.geom.page_size;
                Ok(bytes[start..start + self.geom.page_size].to_vec())
            }
            Backend::File { path, file, base_offset } => {
                let mut f = file.lock().unwrap();
                f.seek(SeekFrom::Start(base_offset + page * self.geom.page_size as u64))
                    .map_err(|e| Error::io(path, e))?;
                let mut buf = vec![0u8; self.geom.page_size];
                f.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
                Ok(buf)
            }
        }
    }

    /// Fetches the records at `addresses`, in the given order. Each distinct
    /// page is read once and charged once to `counter`.
    pub fn fetch(
        &self,
        addresses: &[PointAddress],
        counter: &IoCounter,
    ) -> Result<Vec<Vec<f64>>> {
        let mut cache: HashMap<u64, Vec<u8>> = HashMap::new();
        let mut out = Vec::with_capacity(addresses.len());
        for addr in addresses {
            if addr.slot as usize >= self.geom.records_per_page {
                return Err(Error::BadAddress { page: addr.page, slot: addr.slot });
            }
            if !cache.contains_key(&addr.page) {
                cache.insert(addr.page, self.read_page(addr.page)?);
                counter.add_pages(1);
            }
            let page = &cache[&addr.page];
            let mut off = (addr.slot as usize) * 4 * self.geom.d;
            let mut rec = Vec::with_capacity(self.geom.d);
            for _ in 0..self.geom.d {
                rec.push(f32::from_le_bytes(page[off..off + 4].try_into().unwrap()) as f64);
                off += 4;
            }
            out.push(rec);
        }
        Ok(out)
    }
}
