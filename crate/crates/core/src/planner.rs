//! Partition planning: how many subspaces, and which dimensions go
//! together.
//!
//! The partition count comes from a cost model `T(M)` whose pruning term
//! decays exponentially with the number of partitions (`UB = A·alpha^M`,
//! pruned fraction `lambda = beta·UB`). The dimension grouping comes
//! from the correlation-based strategy: highly correlated dimensions are
//! grouped together, then each group is spread across all partitions so
//! the subspaces end up statistically similar.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Matrix;
use crate::divergence::DivergenceSpec;
use crate::error::CoreError;
use crate::layout::PartitionLayout;
use crate::transform::{p_transform, q_transform, ub_compute};

/// Fitted constants of the cost model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Scale of the `UB = A·alpha^M` fit.
    pub a: f64,
    /// Decay of the upper bound with the partition count, in `(0,1)`.
    pub alpha: f64,
    /// Pruning fraction per unit of bound (`lambda = beta·UB`).
    pub beta: f64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// Set when the exponential fit was degenerate and the alpha floor
    /// was applied.
    pub degenerate_fit: bool,
}

impl CostParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.a > 0.0) || !(self.beta > 0.0) || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CoreError::InvalidSpec(alloc::format!(
                "cost params out of range: A={}, alpha={}, beta={}",
                self.a, self.alpha, self.beta
            )));
        }
        if self.n == 0 || self.d == 0 || self.k == 0 {
            return Err(CoreError::EmptyInput("cost params require n, d, k >= 1"));
        }
        Ok(())
    }

    /// Modeled online cost at `m` partitions.
    ///
    /// `T(M) = d + 2Mn + n·log k + min(beta·A·alpha^M, 1)·n·(d + log k)`,
    /// with the pruned fraction clamped at 1 and `log 1 = 0`.
    pub fn modeled_cost(&self, m: usize) -> f64 {
        let n = self.n as f64;
        let d = self.d as f64;
        let log_k = libm::log(self.k as f64);
        let lambda = (self.beta * self.a * libm::pow(self.alpha, m as f64)).min(1.0);
        d + 2.0 * m as f64 * n + n * log_k + lambda * n * (d + log_k)
    }
}

/// Pearson correlation coefficient between two equal-length samples.
///
/// Returns 0 when either sample has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CoreError> {
    if x.len() != y.len() {
        return Err(CoreError::LengthMismatch { expected: x.len(), actual: y.len() });
    }
    if x.len() < 2 {
        return Err(CoreError::EmptyInput("pearson needs at least two samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / libm::sqrt(vx * vy))
}

/// Symmetric `d x d` matrix of pairwise Pearson coefficients.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    r: Vec<f64>,
    d: usize,
}

impl CorrelationMatrix {
    pub fn compute(data: &Matrix) -> Result<Self, CoreError> {
        let d = data.cols();
        let cols: Vec<Vec<f64>> = (0..d).map(|j| data.column(j)).collect();
        let mut r = vec![0.0; d * d];
        for i in 0..d {
            r[i * d + i] = if is_constant(&cols[i]) { 0.0 } else { 1.0 };
            for j in i + 1..d {
                let v = pearson(&cols[i], &cols[j])?;
                r[i * d + j] = v;
                r[j * d + i] = v;
            }
        }
        Ok(CorrelationMatrix { r, d })
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.d + j]
    }
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

/// Correlation-based dimension partitioning.
///
/// Assignment: build `ceil(d/M)` groups of up to `M` dimensions each,
/// seeding every group with a pseudo-random unassigned dimension and
/// greedily adding the unassigned dimension with the largest `|r|` to
/// any dimension already in the group. Partitioning: partition `p`
/// takes member `p` of every group, so correlated dimensions spread
/// across all partitions.
pub fn correlation_partition(data: &Matrix, m: usize, seed: u64) -> Result<PartitionLayout, CoreError> {
    let corr = CorrelationMatrix::compute(data)?;
    correlation_partition_from(&corr, m, seed)
}

/// Same as [`correlation_partition`] but starting from a precomputed correlation matrix.
pub fn correlation_partition_from(
    corr: &CorrelationMatrix,
    m: usize,
    seed: u64,
) -> Result<PartitionLayout, CoreError> {
    let d = corr.dims();
    if m == 0 || m > d {
        return Err(CoreError::InvalidPartitionCount { m, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unassigned: Vec<usize> = (0..d).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();

    while !unassigned.is_empty() {
        // Seed with a random unassigned dimension, non-constant ones first
        // so constant (zero-correlation) dimensions land last.
        let non_constant: Vec<usize> = unassigned
            .iter()
            .copied()
            .filter(|&dim| corr.get(dim, dim) != 0.0)
            .collect();
        let pool = if non_constant.is_empty() { &unassigned } else { &non_constant };
        let seed_dim = *pool.choose(&mut rng).expect("pool non-empty");
        unassigned.retain(|&dim| dim != seed_dim);
        let mut group = vec![seed_dim];

        while group.len() < m && !unassigned.is_empty() {
            // Largest |r| to any inserted dimension; ties toward the
            // smaller dimension index.
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for &cand in &unassigned {
                let score = group
                    .iter()
                    .map(|&g| libm::fabs(corr.get(cand, g)))
                    .fold(f64::NEG_INFINITY, f64::max);
                if score > best.0 || (score == best.0 && cand < best.1) {
                    best = (score, cand);
                }
            }
            unassigned.retain(|&dim| dim != best.1);
            group.push(best.1);
        }
        groups.push(group);
    }

    // Partition p takes member p of every group.
    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); m];
    for group in &groups {
        for (p, &dim) in group.iter().enumerate() {
            partitions[p].push(dim);
        }
    }
    let mut perm = Vec::with_capacity(d);
    let mut bounds = Vec::with_capacity(m);
    let mut start = 0;
    for part in &partitions {
        perm.extend_from_slice(part);
        bounds.push(start..start + part.len());
        start += part.len();
    }
    PartitionLayout::new(perm, bounds)
}

/// Least-squares fit of `ub = A·alpha^M` from `(M, ub)` observations.
///
/// Linear regression of `log ub` on `M`; returns `(A, alpha, degenerate)`
/// where `degenerate` marks a flat fit that had the alpha ceiling applied.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<(f64, f64, bool), CoreError> {
    if points.len() < 2 {
        return Err(CoreError::EmptyInput("exponential fit needs at least two observations"));
    }
    let usable: Vec<(f64, f64)> =
        points.iter().filter(|(_, ub)| *ub > 0.0).map(|&(m, ub)| (m, libm::log(ub))).collect();
    if usable.len() < 2 {
        return Err(CoreError::EmptyInput("exponential fit needs positive bounds"));
    }
    let n = usable.len() as f64;
    let sm = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let sl = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(m, l) in &usable {
        num += (m - sm) * (l - sl);
        den += (m - sm) * (m - sm);
    }
    if den == 0.0 {
        return Err(CoreError::EmptyInput("exponential fit needs at least two distinct M values"));
    }
    let slope = num / den;
    let intercept = sl - slope * sm;
    let mut alpha = libm::exp(slope);
    let mut degenerate = false;
    // A flat or increasing trend leaves alpha outside (0,1); floor it
    // just below one so the cost model stays well-defined.
    if !(alpha < 1.0) {
        alpha = 1.0 - 1e-6;
        degenerate = true;
    }
    if !(alpha > 0.0) {
        alpha = 1e-6;
        degenerate = true;
    }
    Ok((libm::exp(intercept), alpha, degenerate))
}

/// The grid of partition counts sampled when fitting `UB = A·alpha^M`.
fn fit_grid(d: usize) -> Vec<usize> {
    let mut ms = Vec::new();
    let mut m = 1;
    while m <= d {
        ms.push(m);
        m *= 2;
    }
    if ms.len() < 2 {
        ms.push(d.max(1));
        ms.dedup();
    }
    ms
}

/// Fits the cost-model constants from sampled (query, point) pairs.
///
/// For each sampled pair the total upper bound is computed under
/// contiguous layouts at several `M`; `A` and `alpha` come from a
/// least-squares fit of `log UB` versus `M` on the per-`M` means. `beta`
/// is the mean over samples of (fraction of the dataset within the
/// sample's full-space bound) / bound.
pub fn fit_cost_params(
    data: &Matrix,
    spec: &DivergenceSpec,
    sample_count: usize,
    seed: u64,
) -> Result<CostParams, CoreError> {
    let n = data.rows();
    let d = data.cols();
    if sample_count < 2 {
        return Err(CoreError::EmptyInput("need at least two fit samples"));
    }
    if n < 2 {
        return Err(CoreError::EmptyInput("need at least two records to fit cost params"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..sample_count)
        .map(|_| {
            let x = rng.gen_range(0..n);
            let mut y = rng.gen_range(0..n - 1);
            if y >= x {
                y += 1;
            }
            (x, y)
        })
        .collect();

    let ms = fit_grid(d);
    let mut observations = Vec::with_capacity(ms.len());
    for &m in &ms {
        let layout = PartitionLayout::contiguous(d, m)?;
        let mut mean_ub = 0.0;
        for &(xi, yi) in &pairs {
            let p = p_transform(data.row(xi), &layout, spec)?;
            let q = q_transform(data.row(yi), &layout, spec)?;
            let total: f64 = p.iter().zip(q.iter()).map(|(pt, qt)| ub_compute(*pt, *qt)).sum();
            mean_ub += total;
        }
        mean_ub /= pairs.len() as f64;
        observations.push((m as f64, mean_ub));
    }
    let (a, alpha, degenerate_fit) = fit_exponential(&observations)?;

    // beta: fraction of the dataset inside each sample's full-space
    // bound, per unit of bound.
    let full = PartitionLayout::contiguous(d, 1)?;
    let mut beta_acc = 0.0;
    let mut beta_terms = 0usize;
    for &(xi, yi) in &pairs {
        let p = p_transform(data.row(xi), &full, spec)?;
        let q = q_transform(data.row(yi), &full, spec)?;
        let ub = ub_compute(p[0], q[0]);
        if !(ub > 0.0) {
            continue;
        }
        let query = data.row(yi);
        let within =
            data.iter_rows().filter(|row| spec.distance_unchecked(row, query, None) <= ub).count();
        beta_acc += within as f64 / n as f64 / ub;
        beta_terms += 1;
    }
    let beta = if beta_terms == 0 { 1e-12 } else { (beta_acc / beta_terms as f64).max(1e-300) };

    let params = CostParams { a, alpha, beta, n, d, k: 1, degenerate_fit };
    params.validate()?;
    Ok(params)
}

/// Closed-form partition count minimizing the modeled cost, `k` fixed
/// to 1 for planning. Falls back to an integer scan of `T(M)` when the
/// closed form is undefined or non-positive.
pub fn optimal_partitions(params: &CostParams) -> Result<usize, CoreError> {
    params.validate()?;
    let planning = CostParams { k: 1, ..*params };
    let n = planning.n as f64;
    let d = planning.d as f64;
    let ln_alpha = libm::log(planning.alpha);
    let mu = planning.beta * planning.a * n;
    let arg = 2.0 * n / (-mu * ln_alpha * d);
    if !(arg > 0.0 && arg < 1.0) {
        return Ok(argmin_cost_scan(&planning));
    }
    let m_real = libm::log(arg) / ln_alpha;
    if !(m_real > 0.0) || !m_real.is_finite() {
        return Ok(argmin_cost_scan(&planning));
    }
    let clamp = |m: f64| -> usize { (m.max(1.0) as usize).clamp(1, planning.d) };
    // The clamped pruning fraction can make M=1 beat the interior
    // optimum, so it stays in the candidate set.
    let mut candidates = [1usize, clamp(libm::floor(m_real)), clamp(libm::ceil(m_real))];
    candidates.sort_unstable();
    let mut best = candidates[0];
    let mut best_cost = planning.modeled_cost(best);
    for &m in &candidates[1..] {
        let c = planning.modeled_cost(m);
        if c < best_cost {
            best = m;
            best_cost = c;
        }
    }
    Ok(best)
}

/// Brute-force integer argmin of the modeled cost over `1..=d`, ties
/// toward the smaller `M`.
pub fn argmin_cost_scan(params: &CostParams) -> usize {
    let mut best = 1;
    let mut best_cost = params.modeled_cost(1);
    for m in 2..=params.d {
        let c = params.modeled_cost(m);
        if c < best_cost {
            best = m;
            best_cost = c;
        }
    }
    best
}
