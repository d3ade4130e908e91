//! Point/query transforms and per-subspace upper bounds.
//!
//! Each subvector of a data point reduces to a tuple `(alpha_x, gamma_x)`
//! and each query subvector to a triple `(alpha_y, beta_yy, delta_y)`.
//! The Cauchy-inequality upper bound
//! `alpha_x + alpha_y + beta_yy + sqrt(gamma_x * delta_y)` then dominates
//! the Bregman distance over that subspace, and the per-subspace
//! components of the k-th smallest total bound serve as range-query
//! radii.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::divergence::DivergenceSpec;
use crate::error::CoreError;
use crate::layout::PartitionLayout;

/// Precomputed subspace summary of a data point: `(Σ f(x_j), Σ x_j²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTuple {
    pub alpha: f64,
    pub gamma: f64,
}

/// Subspace summary of a query: `(-Σ f(y_j), Σ y_j·f'(y_j), Σ f'(y_j)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTriple {
    pub alpha: f64,
    pub beta_yy: f64,
    pub delta: f64,
}

/// Per-subspace searching bounds taken from the record attaining the
/// k-th smallest total upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundVector {
    pub per_subspace: Vec<f64>,
    pub total: f64,
    pub defining_record: u64,
}

/// Upper bound on the subspace Bregman distance from the transformed pair.
#[inline]
pub fn ub_compute(p: PTuple, q: QTriple) -> f64 {
    p.alpha + q.alpha + q.beta_yy + libm::sqrt(p.gamma * q.delta)
}

/// Transforms one data point into its `M` subspace tuples.
pub fn p_transform(
    x: &[f64],
    layout: &PartitionLayout,
    spec: &DivergenceSpec,
) -> Result<Vec<PTuple>, CoreError> {
    if x.len() != layout.dims() {
        return Err(CoreError::LengthMismatch { expected: layout.dims(), actual: x.len() });
    }
    let mut out = Vec::with_capacity(layout.partitions());
    for i in 0..layout.partitions() {
        let mut alpha = 0.0;
        let mut gamma = 0.0;
        for &dim in layout.subspace_dims(i) {
            let t = x[dim];
            spec.check_domain(dim, t)?;
            alpha += spec.value_unchecked(dim, t);
            gamma += t * t;
        }
        out.push(PTuple { alpha, gamma });
    }
    Ok(out)
}

/// Transforms a query point into its `M` subspace triples.
pub fn q_transform(
    y: &[f64],
    layout: &PartitionLayout,
    spec: &DivergenceSpec,
) -> Result<Vec<QTriple>, CoreError> {
    if y.len() != layout.dims() {
        return Err(CoreError::LengthMismatch { expected: layout.dims(), actual: y.len() });
    }
    let mut out = Vec::with_capacity(layout.partitions());
    for i in 0..layout.partitions() {
        let mut alpha = 0.0;
        let mut beta_yy = 0.0;
        let mut delta = 0.0;
        for &dim in layout.subspace_dims(i) {
            let t = y[dim];
            spec.check_domain(dim, t)?;
            let g = spec.grad_unchecked(dim, t);
            alpha -= spec.value_unchecked(dim, t);
            beta_yy += t * g;
            delta += g * g;
        }
        out.push(QTriple { alpha, beta_yy, delta });
    }
    Ok(out)
}

/// `(total, id)` ordered so the heap keeps the k smallest totals, ties
/// broken toward the smaller record identifier.
#[derive(PartialEq)]
struct HeapEntry {
    total: f64,
    id: u64,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total
            .partial_cmp(&other.total)
            .unwrap_or(Ordering::Equal)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Finds the record with the k-th smallest total upper bound and returns
/// its per-subspace components.
///
/// `table[t]` holds record `t`'s `M` tuples. Selection keeps a max-heap
/// of the current k best totals, `O(n log k)`.
pub fn qb_determine(
    table: &[Vec<PTuple>],
    q: &[QTriple],
    k: usize,
) -> Result<BoundVector, CoreError> {
    let n = table.len();
    if k == 0 || k > n {
        return Err(CoreError::InvalidK { k, n });
    }
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
    for (t, tuples) in table.iter().enumerate() {
        let mut total = 0.0;
        for (p, qt) in tuples.iter().zip(q.iter()) {
            total += ub_compute(*p, *qt);
        }
        let entry = HeapEntry { total, id: t as u64 };
        if heap.len() < k {
            heap.push(entry);
        } else if entry < *heap.peek().expect("non-empty heap") {
            heap.pop();
            heap.push(entry);
        }
    }
    let kth = heap.peek().expect("k >= 1");
    let id = kth.id as usize;
    let per_subspace: Vec<f64> =
        table[id].iter().zip(q.iter()).map(|(p, qt)| ub_compute(*p, *qt)).collect();
    Ok(BoundVector { per_subspace: per_subspace.clone(), total: kth.total, defining_record: kth.id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::DivergenceKind;
    use alloc::vec;

    fn se() -> DivergenceSpec {
        DivergenceSpec::new(DivergenceKind::SquaredEuclidean).unwrap()
    }
    fn isd() -> DivergenceSpec {
        DivergenceSpec::new(DivergenceKind::ItakuraSaito).unwrap()
    }

    #[test]
    fn ub_euclidean_example() {
        // x=(1,0), y=(0,1), one partition
        let p = PTuple { alpha: 1.0, gamma: 1.0 };
        let q = QTriple { alpha: -1.0, beta_yy: 2.0, delta: 4.0 };
        assert_eq!(ub_compute(p, q), 4.0);
        let d = se().bregman_distance(&[1.0, 0.0], &[0.0, 1.0], None).unwrap();
        assert!(ub_compute(p, q) >= d);
        assert_eq!(d, 2.0);
    }

    #[test]
    fn ub_tight_at_zero_gradient_query() {
        let layout = PartitionLayout::contiguous(2, 1).unwrap();
        let x = [3.0, -1.5];
        let y = [0.0, 0.0];
        let p = p_transform(&x, &layout, &se()).unwrap();
        let q = q_transform(&y, &layout, &se()).unwrap();
        let ub = ub_compute(p[0], q[0]);
        let d = se().bregman_distance(&x, &y, None).unwrap();
        assert!((ub - d).abs() < 1e-12);
        assert!((ub - p[0].alpha).abs() < 1e-12);
    }

    #[test]
    fn ub_itakura_saito_tight_in_1d() {
        let layout = PartitionLayout::contiguous(1, 1).unwrap();
        let p = p_transform(&[1.0], &layout, &isd()).unwrap();
        let q = q_transform(&[2.0], &layout, &isd()).unwrap();
        assert!((p[0].alpha - 0.0).abs() < 1e-12);
        assert!((p[0].gamma - 1.0).abs() < 1e-12);
        assert!((q[0].alpha - 0.6931471806).abs() < 1e-9);
        assert!((q[0].beta_yy + 1.0).abs() < 1e-12);
        assert!((q[0].delta - 0.25).abs() < 1e-12);
        let ub = ub_compute(p[0], q[0]);
        assert!((ub - 0.1931471806).abs() < 1e-9);
        let d = isd().bregman_distance(&[1.0], &[2.0], None).unwrap();
        assert!((ub - d).abs() < 1e-12);
    }

    #[test]
    fn p_transform_examples() {
        let layout = PartitionLayout::contiguous(4, 2).unwrap();
        let p = p_transform(&[1.0, 2.0, 0.0, 3.0], &layout, &se()).unwrap();
        assert_eq!(p, vec![PTuple { alpha: 5.0, gamma: 5.0 }, PTuple { alpha: 9.0, gamma: 9.0 }]);

        let layout = PartitionLayout::contiguous(2, 1).unwrap();
        let p = p_transform(&[1.0, 2.0], &layout, &isd()).unwrap();
        assert!((p[0].alpha + 0.6931471806).abs() < 1e-9);
        assert!((p[0].gamma - 5.0).abs() < 1e-12);
    }

    #[test]
    fn q_transform_examples() {
        let layout = PartitionLayout::contiguous(2, 1).unwrap();
        let q = q_transform(&[1.0, 1.0], &layout, &se()).unwrap();
        assert_eq!(q, vec![QTriple { alpha: -2.0, beta_yy: 4.0, delta: 8.0 }]);
        let q = q_transform(&[0.0, 0.0], &layout, &se()).unwrap();
        assert_eq!(q, vec![QTriple { alpha: 0.0, beta_yy: 0.0, delta: 0.0 }]);
    }

    #[test]
    fn qb_determine_hand_example() {
        // y=(0,0), points a=(1,1), b=(2,0), c=(0,3), M=2, k=2
        let layout = PartitionLayout::contiguous(2, 2).unwrap();
        let spec = se();
        let table: Vec<Vec<PTuple>> = [[1.0, 1.0], [2.0, 0.0], [0.0, 3.0]]
            .iter()
            .map(|x| p_transform(x, &layout, &spec).unwrap())
            .collect();
        let q = q_transform(&[0.0, 0.0], &layout, &spec).unwrap();
        let qb = qb_determine(&table, &q, 2).unwrap();
        assert_eq!(qb.defining_record, 1);
        assert_eq!(qb.total, 4.0);
        assert_eq!(qb.per_subspace, vec![4.0, 0.0]);

        // k = n picks the maximum total
        let qb = qb_determine(&table, &q, 3).unwrap();
        assert_eq!(qb.defining_record, 2);
        assert_eq!(qb.total, 9.0);

        assert!(qb_determine(&table, &q, 4).is_err());
        assert!(qb_determine(&table, &q, 0).is_err());
    }

    #[test]
    fn qb_total_nonnegative_with_query_in_table() {
        let layout = PartitionLayout::contiguous(2, 2).unwrap();
        let spec = se();
        let pts = [[0.5, -0.25], [1.0, 2.0], [-3.0, 0.1]];
        let table: Vec<Vec<PTuple>> =
            pts.iter().map(|x| p_transform(x, &layout, &spec).unwrap()).collect();
        let q = q_transform(&pts[0], &layout, &spec).unwrap();
        let qb = qb_determine(&table, &q, 1).unwrap();
        assert!(qb.total >= 0.0);
    }
}
