//! Dimension permutations and subspace boundaries.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::CoreError;

/// How `d` dimensions are split into `M` subspaces.
///
/// `perm` lists the members of every subspace contiguously; `bounds[i]`
/// is the half-open range of `perm` positions belonging to subspace `i`.
/// Widths are balanced: they differ by at most one across subspaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionLayout {
    perm: Vec<usize>,
    bounds: Vec<Range<usize>>,
}

impl PartitionLayout {
    /// Builds a layout from an explicit permutation and boundaries.
    pub fn new(perm: Vec<usize>, bounds: Vec<Range<usize>>) -> Result<Self, CoreError> {
        let layout = PartitionLayout { perm, bounds };
        layout.validate()?;
        Ok(layout)
    }

    /// The identity-order layout splitting `0..d` into `m` balanced
    /// contiguous ranges, wider subspaces first.
    pub fn contiguous(d: usize, m: usize) -> Result<Self, CoreError> {
        if m == 0 || m > d {
            return Err(CoreError::InvalidPartitionCount { m, d });
        }
        let base = d / m;
        let extra = d % m;
        let mut bounds = Vec::with_capacity(m);
        let mut start = 0;
        for i in 0..m {
            let w = base + usize::from(i < extra);
            bounds.push(start..start + w);
            start += w;
        }
        Ok(PartitionLayout { perm: (0..d).collect(), bounds })
    }

    fn validate(&self) -> Result<(), CoreError> {
        let d = self.perm.len();
        if self.bounds.is_empty() || d == 0 {
            return Err(CoreError::InvalidLayout("empty layout".into()));
        }
        let mut seen = alloc::vec![false; d];
        for &p in &self.perm {
            if p >= d || seen[p] {
                return Err(CoreError::InvalidLayout(alloc::format!(
                    "perm is not a bijection on 0..{d}"
                )));
            }
            seen[p] = true;
        }
        let mut cursor = 0;
        let mut min_w = usize::MAX;
        let mut max_w = 0;
        for r in &self.bounds {
            if r.start != cursor || r.is_empty() {
                return Err(CoreError::InvalidLayout(
                    "bounds must be ordered, non-empty and cover perm exactly".into(),
                ));
            }
            cursor = r.end;
            min_w = min_w.min(r.len());
            max_w = max_w.max(r.len());
        }
        if cursor != d {
            return Err(CoreError::InvalidLayout("bounds do not cover perm".into()));
        }
        if max_w - min_w > 1 {
            return Err(CoreError::InvalidLayout(alloc::format!(
                "subspace widths {min_w}..{max_w} differ by more than one"
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.perm.len()
    }

    /// Number of partitions `M`.
    pub fn partitions(&self) -> usize {
        self.bounds.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn bounds(&self) -> &[Range<usize>] {
        &self.bounds
    }

    /// Original dimension indices of subspace `i`.
    pub fn subspace_dims(&self, i: usize) -> &[usize] {
        &self.perm[self.bounds[i].clone()]
    }

    pub fn width(&self, i: usize) -> usize {
        self.bounds[i].len()
    }

    /// Extracts the subvector of `v` for subspace `i`.
    pub fn subvector(&self, v: &[f64], i: usize) -> Vec<f64> {
        self.subspace_dims(i).iter().map(|&d| v[d]).collect()
    }

    /// Rearranges a full vector into layout order (subspaces contiguous).
    pub fn rearrange(&self, v: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&d| v[d]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn contiguous_balanced() {
        let l = PartitionLayout::contiguous(10, 4).unwrap();
        let widths: Vec<usize> = (0..4).map(|i| l.width(i)).collect();
        assert_eq!(widths, vec![3, 3, 2, 2]);
        assert_eq!(l.subspace_dims(0), &[0, 1, 2]);
        assert_eq!(l.subspace_dims(3), &[8, 9]);
    }

    #[test]
    fn degenerate_counts() {
        assert_eq!(PartitionLayout::contiguous(5, 1).unwrap().partitions(), 1);
        assert_eq!(PartitionLayout::contiguous(5, 5).unwrap().partitions(), 5);
        assert!(PartitionLayout::contiguous(5, 6).is_err());
        assert!(PartitionLayout::contiguous(5, 0).is_err());
    }

    #[test]
    fn rejects_unbalanced_and_noncovering() {
        assert!(PartitionLayout::new(vec![0, 1, 2, 3], vec![0..3, 3..4]).is_err());
        assert!(PartitionLayout::new(vec![0, 1, 2], vec![0..2]).is_err());
        assert!(PartitionLayout::new(vec![0, 0, 2], vec![0..2, 2..3]).is_err());
    }

    #[test]
    fn subvector_and_rearrange() {
        let l = PartitionLayout::new(vec![2, 0, 1, 3], vec![0..2, 2..4]).unwrap();
        let v = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(l.subvector(&v, 0), vec![30.0, 10.0]);
        assert_eq!(l.rearrange(&v), vec![30.0, 10.0, 20.0, 40.0]);
    }
}
