//! Single-file index serialization.
//!
//! Layout (all integers u64 LE, reals f64 LE unless noted):
//! magic "BBF1" | version | pages_offset | page_count | page_size |
//! divergence id | n | d | M | leaf_capacity | seed | anchor tree |
//! isd floor | optional weights | layout (perm + bounds) |
//! optional cost-model params | per-dimension mean/variance |
//! record addresses | transform tuples | M tree sections
//! (nodes in preorder, then the subspace point matrix as f32) |
//! raw pages (f32 records).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use bregpart_core::balltree::{BallNode, BallTree, BregmanBall, Children};
use bregpart_core::data::Matrix;
use bregpart_core::planner::CostParams;
use bregpart_core::transform::PTuple;
use bregpart_core::{DivergenceKind, DivergenceSpec, PartitionLayout};

use crate::engine::Index;
use crate::error::{Error, Result};
use crate::store::{PageStore, PointAddress};

pub const MAGIC: [u8; 4] = *b"BBF1";
pub const VERSION: u64 = 1;

fn kind_id(kind: DivergenceKind) -> u64 {
    match kind {
        DivergenceKind::SquaredEuclidean => 0,
        DivergenceKind::DiagonalMahalanobis => 1,
        DivergenceKind::ItakuraSaito => 2,
        DivergenceKind::Exponential => 3,
    }
}

fn kind_from_id(id: u64) -> Result<DivergenceKind> {
    Ok(match id {
        0 => DivergenceKind::SquaredEuclidean,
        1 => DivergenceKind::DiagonalMahalanobis,
        2 => DivergenceKind::ItakuraSaito,
        3 => DivergenceKind::Exponential,
        other => return Err(Error::Corrupt(format!("unknown divergence id {other}"))),
    })
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Truncated { offset: self.pos as u64, needed: n as u64 });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u64()? as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn write_tree(w: &mut Writer, tree: &BallTree) {
    w.u64(tree.width() as u64);
    w.u64(tree.nodes().len() as u64);
    for node in tree.nodes() {
        for &c in &node.ball.center {
            w.f64(c);
        }
        w.f64(node.ball.radius);
        for &c in &node.bbox_min {
            w.f64(c);
        }
        for &c in &node.bbox_max {
            w.f64(c);
        }
        match &node.children {
            Children::Internal { left, right } => {
                w.u64(0);
                w.u64(*left as u64);
                w.u64(*right as u64);
            }
            Children::Leaf { records } => {
                w.u64(1);
                w.u64(records.len() as u64);
                for &r in records {
                    w.u64(r as u64);
                }
            }
        }
    }
    let points = tree.points();
    for &v in points.as_slice() {
        w.f32(v as f32);
    }
}

fn read_tree(c: &mut Cursor, n: usize) -> Result<BallTree> {
    let width = c.usize()?;
    let node_count = c.usize()?;
    if width == 0 || node_count == 0 {
        return Err(Error::Corrupt("empty tree section".into()));
    }
    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let mut center = Vec::with_capacity(width);
        for _ in 0..width {
            center.push(c.f64()?);
        }
        let radius = c.f64()?;
        let mut bbox_min = Vec::with_capacity(width);
        for _ in 0..width {
            bbox_min.push(c.f64()?);
        }
        let mut bbox_max = Vec::with_capacity(width);
        for _ in 0..width {
            bbox_max.push(c.f64()?);
        }
        let children = match c.u64()? {
            0 => {
                let left = c.u64()?;
                let right = c.u64()?;
                if left as usize >= node_count || right as usize >= node_count {
                    return Err(Error::Corrupt("child index out of range".into()));
                }
                Children::Internal { left: left as u32, right: right as u32 }
            }
            1 => {
                let count = c.usize()?;
                let mut records = Vec::with_capacity(count);
                for _ in 0..count {
                    let r = c.u64()?;
                    if r as usize >= n {
                        return Err(Error::Corrupt("leaf record id out of range".into()));
                    }
                    records.push(r as u32);
                }
                Children::Leaf { records }
            }
            other => return Err(Error::Corrupt(format!("unknown node tag {other}"))),
        };
        nodes.push(BallNode { ball: BregmanBall { center, radius }, bbox_min, bbox_max, children });
    }
    let mut data = Vec::with_capacity(n * width);
    for _ in 0..n * width {
        data.push(c.f32()? as f64);
    }
    let points = Matrix::new(data, n, width)?;
    Ok(BallTree::from_parts(nodes, points))
}

pub fn write_index(path: &Path, index: &Index) -> Result<()> {
    let n = index.n();
    let d = index.d();
    let m = index.m();
    let geom = index.store.geometry();

    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(&MAGIC);
    w.u64(VERSION);
    let pages_offset_slot = w.buf.len();
    w.u64(0); // pages_offset, patched below
    w.u64(index.store.page_count() as u64);
    w.u64(geom.page_size as u64);
    w.u64(kind_id(index.spec.kind()));
    w.u64(n as u64);
    w.u64(d as u64);
    w.u64(m as u64);
    w.u64(index.leaf_capacity as u64);
    w.u64(index.seed);
    w.u64(index.anchor_tree as u64);
    w.f64(index.spec.isd_floor());
    match index.spec.weights() {
        None => w.u64(0),
        Some(ws) => {
            w.u64(1);
            for &v in ws {
                w.f64(v);
            }
        }
    }
    for &p in index.layout.perm() {
        w.u64(p as u64);
    }
    for b in index.layout.bounds() {
        w.u64(b.start as u64);
        w.u64(b.end as u64);
    }
    match &index.params {
        None => w.u64(0),
        Some(p) => {
            w.u64(1);
            w.f64(p.a);
            w.f64(p.alpha);
            w.f64(p.beta);
            w.u64(p.k as u64);
            w.u64(p.degenerate_fit as u64);
        }
    }
    for j in 0..d {
        w.f64(index.dim_means[j]);
        w.f64(index.dim_vars[j]);
    }
    for addr in &index.addresses {
        w.u64(addr.page);
        w.u64(addr.slot);
    }
    for tuples in &index.transforms {
        for t in tuples {
            w.f64(t.alpha);
            w.f64(t.gamma);
        }
    }
    for tree in &index.trees {
        write_tree(&mut w, tree);
    }
    let pages_offset = w.buf.len() as u64;
    w.buf[pages_offset_slot..pages_offset_slot + 8].copy_from_slice(&pages_offset.to_le_bytes());
    let pages = index.store.raw_pages()?;
    w.buf.extend_from_slice(&pages);

    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&w.buf).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

pub fn read_index(path: &Path) -> Result<Index> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { buf: &bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = c.u64()?;
    if version != VERSION {
        return Err(Error::VersionMismatch { found: version, expected: VERSION });
    }
    let pages_offset = c.u64()?;
    let page_count = c.usize()?;
    let page_size = c.usize()?;
    let kind = kind_from_id(c.u64()?)?;
    let n = c.usize()?;
    let d = c.usize()?;
    let m = c.usize()?;
    let leaf_capacity = c.usize()?;
    let seed = c.u64()?;
    let anchor_tree = c.usize()?;
    if n == 0 || d == 0 || m == 0 || m > d {
        return Err(Error::Corrupt(format!("implausible header: n={n} d={d} M={m}")));
    }
    let isd_floor = c.f64()?;
    let spec = match c.u64()? {
        0 => DivergenceSpec::new(kind)?,
        1 => {
            let mut ws = Vec::with_capacity(d);
            for _ in 0..d {
                ws.push(c.f64()?);
            }
            if kind != DivergenceKind::DiagonalMahalanobis {
                return Err(Error::Corrupt("weights present for unweighted divergence".into()));
            }
            DivergenceSpec::mahalanobis(ws)?
        }
        other => return Err(Error::Corrupt(format!("bad weights flag {other}"))),
    }
    .with_isd_floor(isd_floor);

    let mut perm = Vec::with_capacity(d);
    for _ in 0..d {
        perm.push(c.usize()?);
    }
    let mut bounds = Vec::with_capacity(m);
    for _ in 0..m {
        let start = c.usize()?;
        let end = c.usize()?;
        bounds.push(start..end);
    }
    let layout = PartitionLayout::new(perm, bounds)?;

    let params = match c.u64()? {
        0 => None,
        1 => {
            let a = c.f64()?;
            let alpha = c.f64()?;
            let beta = c.f64()?;
            let k = c.usize()?;
            let degenerate_fit = c.u64()? != 0;
            Some(CostParams { a, alpha, beta, n, d, k, degenerate_fit })
        }
        other => return Err(Error::Corrupt(format!("bad cost-params flag {other}"))),
    };

    let mut dim_means = Vec::with_capacity(d);
    let mut dim_vars = Vec::with_capacity(d);
    for _ in 0..d {
        dim_means.push(c.f64()?);
        dim_vars.push(c.f64()?);
    }

    let mut addresses = Vec::with_capacity(n);
    for _ in 0..n {
        let page = c.u64()?;
        let slot = c.u64()?;
        addresses.push(PointAddress { page, slot });
    }

    let mut transforms = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tuples = Vec::with_capacity(m);
        for _ in 0..m {
            let alpha = c.f64()?;
            let gamma = c.f64()?;
            tuples.push(PTuple { alpha, gamma });
        }
        transforms.push(tuples);
    }

    let mut trees = Vec::with_capacity(m);
    for i in 0..m {
        let tree = read_tree(&mut c, n)?;
        if tree.width() != layout.width(i) {
            return Err(Error::Corrupt(format!(
                "tree {i} width {} does not match layout width {}",
                tree.width(),
                layout.width(i)
            )));
        }
        trees.push(tree);
    }

    if c.pos as u64 != pages_offset {
        return Err(Error::Corrupt(format!(
            "pages offset {pages_offset} does not match metadata end {}",
            c.pos
        )));
    }
    let pages_end = pages_offset + (page_count * page_size) as u64;
    if (bytes.len() as u64) < pages_end {
        return Err(Error::Truncated {
            offset: bytes.len() as u64,
            needed: pages_end - bytes.len() as u64,
        });
    }
    if anchor_tree >= m {
        return Err(Error::Corrupt(format!("anchor tree {anchor_tree} out of range")));
    }

    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let store = PageStore::open_in_file(path.into(), file, pages_offset, page_size, d, page_count)?;

    Ok(Index {
        spec,
        layout,
        params,
        leaf_capacity,
        seed,
        anchor_tree,
        dim_means,
        dim_vars,
        addresses,
        transforms,
        trees,
        store,
    })
}
