//! End-to-end pipelines: index construction, exact k-nearest-neighbor
//! search, and the probability-guaranteed approximate variant.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use bregpart_core::balltree::{BallTree, Children, RelationConfig, SubspaceDivergence};
use bregpart_core::data::Matrix;
use bregpart_core::planner::{fit_cost_params, optimal_partitions, correlation_partition, CostParams};
use bregpart_core::transform::{p_transform, q_transform, qb_determine, PTuple};
use bregpart_core::{CoreError, DivergenceSpec, PartitionLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::format;
use crate::store::{IoCounter, PageStore, PointAddress};

pub const DEFAULT_LEAF_CAPACITY: usize = 64;
pub const DEFAULT_FIT_SAMPLES: usize = 50;
/// Relative slack applied to range radii so floating-point rounding at the
/// boundary can only add candidates, never drop a true neighbor.
const RADIUS_SLACK: f64 = 1e-9;
/// Lower clamp for the approximate coefficient; keeps tiny `p` from
/// emptying the search.
const MIN_APPROX_COEFFICIENT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partitions {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub spec: DivergenceSpec,
    pub partitions: Partitions,
    pub correlated: bool,
    pub leaf_capacity: usize,
    pub page_size: usize,
    pub seed: u64,
    pub fit_samples: usize,
}

impl SearchConfig {
    pub fn new(spec: DivergenceSpec) -> Self {
        SearchConfig {
            spec,
            partitions: Partitions::Auto,
            correlated: true,
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            page_size: crate::store::DEFAULT_PAGE_SIZE,
            seed: 0,
            fit_samples: DEFAULT_FIT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultItem {
    pub id: u64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ApproxContext {
    pub kappa: f64,
    pub mu: f64,
    pub c: f64,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    /// Cardinality of the union of per-tree range-query results.
    pub candidates: usize,
    /// Distinct pages fetched while refining.
    pub pages_read: u64,
    pub elapsed_us: u64,
    /// Approximate mode only: fewer than k candidates survived the scaled
    /// bounds and the query was re-run unscaled.
    pub shortfall: bool,
    pub approx: Option<ApproxContext>,
}

/// Per-dimension distribution summary of the indexed dataset.
#[derive(Debug, Clone)]
pub struct DimStats {
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
    /// 64-bin diagnostic histograms over `[min, max]` per dimension; not
    /// persisted.
    pub histograms: Option<Vec<Vec<u32>>>,
}

pub const HISTOGRAM_BINS: usize = 64;

/// Rounds every coordinate through f32, the storage precision. Build does
/// this to its input, so an external oracle must compare against the
/// quantized dataset.
pub fn quantize(data: &Matrix) -> Matrix {
    let q: Vec<f64> = data.as_slice().iter().map(|&v| v as f32 as f64).collect();
    Matrix::new(q, data.rows(), data.cols()).expect("shape preserved")
}

pub fn fit_dimension_stats(data: &Matrix) -> DimStats {
    let n = data.rows() as f64;
    let d = data.cols();
    let mut means = vec![0.0; d];
    let mut vars = vec![0.0; d];
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in data.iter_rows() {
        for j in 0..d {
            means[j] += row[j];
            mins[j] = mins[j].min(row[j]);
            maxs[j] = maxs[j].max(row[j]);
        }
    }
    for m in &mut means {
        *m /= n;
    }
    for row in data.iter_rows() {
        for j in 0..d {
            let dv = row[j] - means[j];
            vars[j] += dv * dv;
        }
    }
    for v in &mut vars {
        *v /= n;
    }
    let mut histograms = vec![vec![0u32; HISTOGRAM_BINS]; d];
    for row in data.iter_rows() {
        for j in 0..d {
            let span = maxs[j] - mins[j];
            let bin = if span > 0.0 {
                (((row[j] - mins[j]) / span * HISTOGRAM_BINS as f64) as usize)
                    .min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            histograms[j][bin] += 1;
        }
    }
    DimStats { means, vars, histograms: Some(histograms) }
}

/// Coefficient `c` shrinking the searching bound so the result stays exact
/// with probability at least `p`, under a Normal model of the relaxed
/// cross term with independent dimensions.
pub fn approx_coefficient(stats: &DimStats, grad_y: &[f64], kappa: f64, mu: f64, p: f64) -> f64 {
    if p >= 1.0 || mu <= 0.0 {
        return 1.0;
    }
    let mut mean_b = 0.0;
    let mut var_b = 0.0;
    for (g, (m, v)) in grad_y.iter().zip(stats.means.iter().zip(stats.vars.iter())) {
        mean_b -= m * g;
        var_b += v * g * g;
    }
    if !(var_b > 0.0) || !var_b.is_finite() || !mean_b.is_finite() {
        return 1.0;
    }
    let normal = Normal::new(mean_b, var_b.sqrt()).expect("positive std dev");
    let blend = (p * normal.cdf(mu) + (1.0 - p) * normal.cdf(-kappa)).clamp(1e-12, 1.0 - 1e-12);
    (normal.inverse_cdf(blend) / mu).clamp(MIN_APPROX_COEFFICIENT, 1.0)
}

/// Exact k smallest distances by full scan; ties broken by record id.
pub fn linear_scan_oracle(
    data: &Matrix,
    spec: &DivergenceSpec,
    y: &[f64],
    k: usize,
) -> Result<Vec<ResultItem>> {
    if k == 0 || k > data.rows() {
        return Err(CoreError::InvalidK { k, n: data.rows() }.into());
    }
    spec.check_vector(y, None)?;
    let mut items: Vec<ResultItem> = data
        .iter_rows()
        .enumerate()
        .map(|(i, row)| ResultItem {
            id: i as u64,
            distance: spec.distance_unchecked(row, y, None),
        })
        .collect();
    sort_items(&mut items);
    items.truncate(k);
    Ok(items)
}

fn sort_items(items: &mut [ResultItem]) {
    items.sort_by(|a, b| {
        a.distance.partial_cmp(&b.distance).expect("finite distances").then(a.id.cmp(&b.id))
    });
}

/// A built index: M ball trees over the partitioned subspaces, the
/// transform table backing the search bound, and the paged point store.
#[derive(Debug)]
pub struct Index {
    pub(crate) spec: DivergenceSpec,
    pub(crate) layout: PartitionLayout,
    pub(crate) params: Option<CostParams>,
    pub(crate) leaf_capacity: usize,
    pub(crate) seed: u64,
    pub(crate) anchor_tree: usize,
    pub(crate) dim_means: Vec<f64>,
    pub(crate) dim_vars: Vec<f64>,
    pub(crate) addresses: Vec<PointAddress>,
    pub(crate) transforms: Vec<Vec<PTuple>>,
    pub(crate) trees: Vec<BallTree>,
    pub(crate) store: PageStore,
}

fn leaf_order(tree: &BallTree) -> Vec<usize> {
    // Nodes are stored in preorder, so scanning them in index order visits
    // leaves left to right.
    let mut order = Vec::with_capacity(tree.points().rows());
    for node in tree.nodes() {
        if let Children::Leaf { records } = &node.children {
            order.extend(records.iter().map(|&r| r as usize));
        }
    }
    order
}

fn subspace_matrix(data: &Matrix, layout: &PartitionLayout, i: usize) -> Matrix {
    let dims = layout.subspace_dims(i);
    let mut out = Vec::with_capacity(data.rows() * dims.len());
    for row in data.iter_rows() {
        for &j in dims {
            out.push(row[j]);
        }
    }
    Matrix::new(out, data.rows(), dims.len()).expect("consistent shape")
}

impl Index {
    pub fn build(data: &Matrix, cfg: &SearchConfig) -> Result<Index> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(CoreError::EmptyInput("cannot index an empty dataset").into());
        }
        let data = quantize(data);
        let d = data.cols();
        for (i, row) in data.iter_rows().enumerate() {
            cfg.spec.check_vector(row, Some(i as u64))?;
        }

        let (m, params) = match cfg.partitions {
            Partitions::Fixed(m) => {
                if m == 0 || m > d {
                    return Err(CoreError::InvalidPartitionCount { m, d }.into());
                }
                (m, None)
            }
            Partitions::Auto => {
                let params = fit_cost_params(&data, &cfg.spec, cfg.fit_samples, cfg.seed)?;
                let m = optimal_partitions(&params)?;
                (m, Some(params))
            }
        };

        let layout = if cfg.correlated && m > 1 {
            correlation_partition(&data, m, cfg.seed)?
        } else {
            PartitionLayout::contiguous(d, m)?
        };

        let transforms: Result<Vec<Vec<PTuple>>> = data
            .iter_rows()
            .map(|row| p_transform(row, &layout, &cfg.spec).map_err(Error::from))
            .collect();
        let transforms = transforms?;

        let stats = fit_dimension_stats(&data);

        let anchor_tree = ChaCha8Rng::seed_from_u64(cfg.seed).gen_range(0..m);
        let build_one = |i: usize| -> Result<BallTree> {
            let dims = layout.subspace_dims(i);
            let div = SubspaceDivergence::subspace(&cfg.spec, dims);
            let points = subspace_matrix(&data, &layout, i);
            BallTree::build(points, &div, cfg.leaf_capacity, cfg.seed.wrapping_add(1 + i as u64))
                .map_err(Error::from)
        };

        let anchor = build_one(anchor_tree)?;
        let order = leaf_order(&anchor);
        let (store, addresses) = PageStore::write_in_order(&data, &order, cfg.page_size)?;

        let other_ids: Vec<usize> = (0..m).filter(|&i| i != anchor_tree).collect();
        let others: Result<Vec<(usize, BallTree)>> =
            other_ids.into_par_iter().map(|i| build_one(i).map(|t| (i, t))).collect();
        let mut trees: Vec<Option<BallTree>> = (0..m).map(|_| None).collect();
        trees[anchor_tree] = Some(anchor);
        for (i, t) in others? {
            trees[i] = Some(t);
        }
        let trees: Vec<BallTree> = trees.into_iter().map(|t| t.expect("all built")).collect();

        Ok(Index {
            spec: cfg.spec.clone(),
            layout,
            params,
            leaf_capacity: cfg.leaf_capacity,
            seed: cfg.seed,
            anchor_tree,
            dim_means: stats.means,
            dim_vars: stats.vars,
            addresses,
            transforms,
            trees,
            store,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        format::write_index(path, self)
    }

    pub fn open(path: &Path) -> Result<Index> {
        format::read_index(path)
    }

    pub fn n(&self) -> usize {
        self.transforms.len()
    }

    pub fn d(&self) -> usize {
        self.layout.dims()
    }

    pub fn m(&self) -> usize {
        self.layout.partitions()
    }

    pub fn spec(&self) -> &DivergenceSpec {
        &self.spec
    }

    pub fn layout(&self) -> &PartitionLayout {
        &self.layout
    }

    pub fn params(&self) -> Option<&CostParams> {
        self.params.as_ref()
    }

    pub fn anchor(&self) -> usize {
        self.anchor_tree
    }

    pub fn page_size(&self) -> usize {
        self.store.geometry().page_size
    }

    pub fn page_count(&self) -> usize {
        self.store.page_count()
    }

    pub fn stats(&self) -> DimStats {
        DimStats { means: self.dim_means.clone(), vars: self.dim_vars.clone(), histograms: None }
    }

    pub fn knn_search(&self, y: &[f64], k: usize) -> Result<(Vec<ResultItem>, SearchReport)> {
        self.search(y, k, None)
    }

    pub fn approx_knn_search(
        &self,
        y: &[f64],
        k: usize,
        p: f64,
    ) -> Result<(Vec<ResultItem>, SearchReport)> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "approximation probability must be in (0, 1], got {p}"
            )));
        }
        self.search(y, k, Some(p))
    }

    fn search(&self, y: &[f64], k: usize, p: Option<f64>) -> Result<(Vec<ResultItem>, SearchReport)> {
        let start = Instant::now();
        let n = self.n();
        if k == 0 || k > n {
            return Err(CoreError::InvalidK { k, n }.into());
        }
        self.spec.check_vector(y, None)?;
        if y.len() != self.d() {
            return Err(CoreError::LengthMismatch { expected: self.d(), actual: y.len() }.into());
        }

        let qt = q_transform(y, &self.layout, &self.spec)?;
        let qb = qb_determine(&self.transforms, &qt, k)?;

        let approx = match p {
            None => None,
            Some(p) => {
                let def = &self.transforms[qb.defining_record as usize];
                let gamma: f64 = def.iter().map(|t| t.gamma).sum();
                let alpha_x: f64 = def.iter().map(|t| t.alpha).sum();
                let alpha_y: f64 = qt.iter().map(|t| t.alpha).sum();
                let beta_yy: f64 = qt.iter().map(|t| t.beta_yy).sum();
                let delta: f64 = qt.iter().map(|t| t.delta).sum();
                let kappa = alpha_x + alpha_y + beta_yy;
                let mu = (gamma * delta).sqrt();
                let mut grads = Vec::with_capacity(y.len());
                for (j, &v) in y.iter().enumerate() {
                    grads.push(self.spec.generator_grad(j, v)?);
                }
                let c = approx_coefficient(&self.stats(), &grads, kappa, mu, p);
                Some(ApproxContext { kappa, mu, c })
            }
        };
        // The bound splits into kappa_j (exact terms) + mu_j (the relaxed
        // cross term); only mu is shrunk by the coefficient, per subspace.
        let radii: Vec<f64> = match &approx {
            Some(a) if a.c < 1.0 => {
                let def = &self.transforms[qb.defining_record as usize];
                def.iter()
                    .zip(qt.iter())
                    .map(|(p, q)| {
                        let kappa_j = p.alpha + q.alpha + q.beta_yy;
                        let mu_j = (p.gamma * q.delta).sqrt();
                        kappa_j + a.c * mu_j
                    })
                    .collect()
            }
            _ => qb.per_subspace.clone(),
        };
        let scaled = radii.iter().zip(qb.per_subspace.iter()).any(|(r, b)| r < b);

        let (items, candidates, pages_read) = self.bounded_pass(y, k, &radii)?;
        let mut shortfall = false;
        let (items, candidates, pages_read) = if items.len() < k && scaled {
            // Scaled bounds dropped below k survivors; fall back to the
            // exact bounds so k results are always returned.
            shortfall = true;
            self.bounded_pass(y, k, &qb.per_subspace)?
        } else {
            (items, candidates, pages_read)
        };

        let report = SearchReport {
            candidates,
            pages_read,
            elapsed_us: start.elapsed().as_micros() as u64,
            shortfall,
            approx,
        };
        Ok((items, report))
    }

    fn bounded_pass(
        &self,
        y: &[f64],
        k: usize,
        bounds: &[f64],
    ) -> Result<(Vec<ResultItem>, usize, u64)> {
        let cfg = RelationConfig::default();
        let mut union: BTreeSet<u32> = BTreeSet::new();
        for (j, tree) in self.trees.iter().enumerate() {
            let dims = self.layout.subspace_dims(j);
            let div = SubspaceDivergence::subspace(&self.spec, dims);
            let qj = self.layout.subvector(y, j);
            let r = (bounds[j] * (1.0 + RADIUS_SLACK)).max(0.0);
            union.extend(tree.range_query(&qj, r, &div, &cfg));
        }
        let ids: Vec<u32> = union.into_iter().collect();
        let addrs: Vec<PointAddress> = ids.iter().map(|&i| self.addresses[i as usize]).collect();
        let counter = IoCounter::new();
        let vectors = self.store.fetch(&addrs, &counter)?;
        let mut items: Vec<ResultItem> = ids
            .iter()
            .zip(vectors.iter())
            .map(|(&id, x)| ResultItem {
                id: id as u64,
                distance: self.spec.distance_unchecked(x, y, None),
            })
            .collect();
        sort_items(&mut items);
        let count = items.len();
        items.truncate(k);
        Ok((items, count, counter.pages_read()))
    }
}
