//! Bregman ball trees over subspaces.
//!
//! Each node is a Bregman ball `{x : D_f(x, center) <= radius}` holding
//! all its descendant records, built by recursive 2-means splits with
//! arithmetic-mean centroids (the minimizer of `sum D_f(x, c)` over the
//! second argument). Range queries prune with a three-way ball/range
//! relation test; an inconclusive test degrades to `Intersects`, never
//! to a wrong prune.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Matrix;
use crate::divergence::DivergenceSpec;
use crate::error::CoreError;

/// A divergence restricted to a subspace: positions map back to
/// original dimension indices so weighted generators resolve correctly.
#[derive(Debug, Clone, Copy)]
pub struct SubspaceDivergence<'a> {
    spec: &'a DivergenceSpec,
    dims: Option<&'a [usize]>,
}

impl<'a> SubspaceDivergence<'a> {
    pub fn full(spec: &'a DivergenceSpec) -> Self {
        SubspaceDivergence { spec, dims: None }
    }

    pub fn subspace(spec: &'a DivergenceSpec, dims: &'a [usize]) -> Self {
        SubspaceDivergence { spec, dims: Some(dims) }
    }

    pub fn spec(&self) -> &'a DivergenceSpec {
        self.spec
    }

    #[inline]
    fn dim(&self, pos: usize) -> usize {
        self.dims.map_or(pos, |d| d[pos])
    }

    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for pos in 0..x.len() {
            acc += self.spec.coord_distance_unchecked(self.dim(pos), x[pos], y[pos]);
        }
        acc
    }

    #[inline]
    pub fn coord_distance(&self, pos: usize, a: f64, b: f64) -> f64 {
        self.spec.coord_distance_unchecked(self.dim(pos), a, b)
    }

    #[inline]
    fn grad(&self, pos: usize, t: f64) -> f64 {
        self.spec.grad_unchecked(self.dim(pos), t)
    }

    fn grad_inverse(&self, pos: usize, s: f64) -> Result<f64, CoreError> {
        self.spec.generator_grad_inverse(self.dim(pos), s)
    }
}

/// A Bregman ball: all member records `x` satisfy
/// `D_f(x, center) <= radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Children of a tree node: either two sub-balls or the records.
#[derive(Debug, Clone, PartialEq)]
pub enum Children {
    Internal { left: u32, right: u32 },
    Leaf { records: Vec<u32> },
}

/// One node: its ball, the coordinate bounding box of its records, and
/// its children. The box backs the sound "contained" side of the
/// relation test.
#[derive(Debug, Clone, PartialEq)]
pub struct BallNode {
    pub ball: BregmanBall,
    pub bbox_min: Vec<f64>,
    pub bbox_max: Vec<f64>,
    pub children: Children,
}

/// Outcome of comparing a ball against a query range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Disjoint,
    Intersects,
    Contained,
}

/// Root-finding budget for the dual-space relation test.
#[derive(Debug, Clone, Copy)]
pub struct RelationConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for RelationConfig {
    fn default() -> Self {
        RelationConfig { max_iters: 20, tol: 1e-6 }
    }
}

const MAX_KMEANS_ITERS: usize = 50;
const SEED_SAMPLE: usize = 64;

/// A Bregman ball tree over one subspace. Row `i` of `points` is the
/// subvector of record `i`; leaves store record identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct BallTree {
    nodes: Vec<BallNode>,
    points: Matrix,
}

impl BallTree {
    /// Builds a tree by recursive Bregman 2-means over all rows.
    pub fn build(
        points: Matrix,
        div: &SubspaceDivergence,
        leaf_capacity: usize,
        seed: u64,
    ) -> Result<Self, CoreError> {
        if leaf_capacity < 2 {
            return Err(CoreError::InvalidSpec("leaf capacity must be at least 2".into()));
        }
        for (i, row) in points.iter_rows().enumerate() {
            div.spec.check_vector(row, Some(i as u64)).map_err(|e| match e {
                CoreError::DomainViolation { value, record, reason, dim } => {
                    CoreError::DomainViolation { dim: div.dim(dim), value, record, reason }
                }
                other => other,
            })?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tree = BallTree { nodes: Vec::new(), points };
        let all: Vec<u32> = (0..tree.points.rows() as u32).collect();
        tree.build_node(all, div, leaf_capacity, &mut rng);
        Ok(tree)
    }

    /// Rebuilds a tree from already-serialized parts. `points` must hold
    /// every record's subvector at its record index.
    pub fn from_parts(nodes: Vec<BallNode>, points: Matrix) -> Self {
        BallTree { nodes, points }
    }

    pub fn nodes(&self) -> &[BallNode] {
        &self.nodes
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn width(&self) -> usize {
        self.points.cols()
    }

    pub fn root(&self) -> &BallNode {
        &self.nodes[0]
    }

    fn build_node(
        &mut self,
        records: Vec<u32>,
        div: &SubspaceDivergence,
        leaf_capacity: usize,
        rng: &mut ChaCha8Rng,
    ) -> u32 {
        let (ball, bbox_min, bbox_max) = self.summarize(&records, div);
        let id = self.nodes.len() as u32;
        self.nodes.push(BallNode {
            ball,
            bbox_min,
            bbox_max,
            children: Children::Leaf { records: Vec::new() },
        });

        if records.len() <= leaf_capacity {
            self.nodes[id as usize].children = Children::Leaf { records };
            return id;
        }
        match self.split(&records, div, rng) {
            Some((left, right)) => {
                let l = self.build_node(left, div, leaf_capacity, rng);
                let r = self.build_node(right, div, leaf_capacity, rng);
                self.nodes[id as usize].children = Children::Internal { left: l, right: r };
            }
            // Split failed to separate (e.g. all records identical):
            // keep an oversized leaf.
            None => {
                self.nodes[id as usize].children = Children::Leaf { records };
            }
        }
        id
    }

    fn summarize(
        &self,
        records: &[u32],
        div: &SubspaceDivergence,
    ) -> (BregmanBall, Vec<f64>, Vec<f64>) {
        let w = self.points.cols();
        let mut center = vec![0.0; w];
        let mut bbox_min = vec![f64::INFINITY; w];
        let mut bbox_max = vec![f64::NEG_INFINITY; w];
        for &rec in records {
            let row = self.points.row(rec as usize);
            for (j, &v) in row.iter().enumerate() {
                center[j] += v;
                bbox_min[j] = bbox_min[j].min(v);
                bbox_max[j] = bbox_max[j].max(v);
            }
        }
        for c in &mut center {
            *c /= records.len() as f64;
        }
        let radius = records
            .iter()
            .map(|&rec| div.distance(self.points.row(rec as usize), &center))
            .fold(0.0f64, f64::max);
        (BregmanBall { center, radius }, bbox_min, bbox_max)
    }

    /// Bregman 2-means split. Seeds are two records far apart under a
    /// sampled heuristic; empty clusters are repaired by stealing the
    /// farthest point from the other side.
    fn split(
        &self,
        records: &[u32],
        div: &SubspaceDivergence,
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<u32>, Vec<u32>)> {
        let sample: Vec<u32> = if records.len() <= SEED_SAMPLE {
            records.to_vec()
        } else {
            records.choose_multiple(rng, SEED_SAMPLE).copied().collect()
        };
        let r0 = records[rng.gen_range(0..records.len())];
        let far = |from: u32| -> u32 {
            sample
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let da = div.distance(
                        self.points.row(a as usize),
                        self.points.row(from as usize),
                    );
                    let db = div.distance(
                        self.points.row(b as usize),
                        self.points.row(from as usize),
                    );
                    da.partial_cmp(&db).unwrap_or(core::cmp::Ordering::Equal)
                })
                .unwrap_or(from)
        };
        let seed_a = far(r0);
        let seed_b = far(seed_a);

        let w = self.points.cols();
        let mut centers =
            [self.points.row(seed_a as usize).to_vec(), self.points.row(seed_b as usize).to_vec()];
        let mut assign: Vec<u8> = vec![0; records.len()];
        for _ in 0..MAX_KMEANS_ITERS {
            let mut changed = false;
            for (slot, &rec) in records.iter().enumerate() {
                let row = self.points.row(rec as usize);
                let d0 = div.distance(row, &centers[0]);
                let d1 = div.distance(row, &centers[1]);
                let side = u8::from(d1 < d0);
                if assign[slot] != side {
                    assign[slot] = side;
                    changed = true;
                }
            }
            // Repair an empty side by stealing the farthest point.
            for side in 0..2u8 {
                if !assign.contains(&side) {
                    let other = 1 - side;
                    let steal = records
                        .iter()
                        .enumerate()
                        .filter(|(slot, _)| assign[*slot] == other)
                        .max_by(|(_, &a), (_, &b)| {
                            let da = div
                                .distance(self.points.row(a as usize), &centers[other as usize]);
                            let db = div
                                .distance(self.points.row(b as usize), &centers[other as usize]);
                            da.partial_cmp(&db).unwrap_or(core::cmp::Ordering::Equal)
                        })
                        .map(|(slot, _)| slot);
                    match steal {
                        Some(slot) => {
                            assign[slot] = side;
                            changed = true;
                        }
                        None => return None,
                    }
                }
            }
            if !changed {
                break;
            }
            for side in 0..2usize {
                let mut mean = vec![0.0; w];
                let mut count = 0usize;
                for (slot, &rec) in records.iter().enumerate() {
                    if assign[slot] == side as u8 {
                        for (j, &v) in self.points.row(rec as usize).iter().enumerate() {
                            mean[j] += v;
                        }
                        count += 1;
                    }
                }
                if count > 0 {
                    for v in &mut mean {
                        *v /= count as f64;
                    }
                    centers[side] = mean;
                }
            }
        }
        let left: Vec<u32> = records
            .iter()
            .zip(assign.iter())
            .filter(|(_, &s)| s == 0)
            .map(|(&r, _)| r)
            .collect();
        let right: Vec<u32> = records
            .iter()
            .zip(assign.iter())
            .filter(|(_, &s)| s == 1)
            .map(|(&r, _)| r)
            .collect();
        if left.is_empty() || right.is_empty() {
            return None;
        }
        Some((left, right))
    }

    /// All records with subspace distance `D_f(x, q) <= r`, ascending by
    /// record id. Exactly equal to brute-force filtering: pruned nodes
    /// are provably outside, contained nodes provably inside, and
    /// intersecting leaves are resolved by exact per-record checks.
    pub fn range_query(
        &self,
        q: &[f64],
        r: f64,
        div: &SubspaceDivergence,
        cfg: &RelationConfig,
    ) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            match ball_range_relation_node(node, q, r, div, cfg) {
                Relation::Disjoint => {}
                Relation::Contained => self.collect_records(id, &mut out),
                Relation::Intersects => match &node.children {
                    Children::Internal { left, right } => {
                        stack.push(*left);
                        stack.push(*right);
                    }
                    Children::Leaf { records } => {
                        for &rec in records {
                            if div.distance(self.points.row(rec as usize), q) <= r {
                                out.push(rec);
                            }
                        }
                    }
                },
            }
        }
        out.sort_unstable();
        out
    }

    fn collect_records(&self, id: u32, out: &mut Vec<u32>) {
        match &self.nodes[id as usize].children {
            Children::Internal { left, right } => {
                self.collect_records(*left, out);
                self.collect_records(*right, out);
            }
            Children::Leaf { records } => out.extend_from_slice(records),
        }
    }
}

/// Three-way test of a ball against the range `{x : D_f(x, q) <= r}`.
///
/// `Disjoint` is certified by a lower bound on `min_{x in ball} D_f(x,q)`
/// located by secant/bisection along the dual-space segment from the
/// query to the center; `Contained` by a per-coordinate convexity bound
/// over the node's bounding box. Anything inconclusive within the
/// iteration cap reports `Intersects`.
pub fn ball_range_relation_node(
    node: &BallNode,
    q: &[f64],
    r: f64,
    div: &SubspaceDivergence,
    cfg: &RelationConfig,
) -> Relation {
    // Upper bound of D_f(x, q) over the bounding box: per-coordinate
    // divergence is convex in its first argument, so the box maximum
    // sits at an endpoint in every coordinate.
    let mut box_ub = 0.0;
    for pos in 0..q.len() {
        let lo = div.coord_distance(pos, node.bbox_min[pos], q[pos]);
        let hi = div.coord_distance(pos, node.bbox_max[pos], q[pos]);
        box_ub += lo.max(hi);
    }
    if box_ub <= r {
        return Relation::Contained;
    }
    match min_distance_lower_bound(&node.ball, q, div, cfg) {
        Some(lb) if lb > r => Relation::Disjoint,
        _ => Relation::Intersects,
    }
}

/// Certified lower bound on `min_{x : D_f(x,c) <= R} D_f(x, q)`.
///
/// The minimizer lies on the dual-space segment
/// `x(t) = grad_inv(t*grad(c) + (1-t)*grad(q))`; `D_f(x(t), c)` falls
/// monotonically in `t` while `D_f(x(t), q)` rises, so any bracket end
/// still outside the ball evaluates below the true minimum.
fn min_distance_lower_bound(
    ball: &BregmanBall,
    q: &[f64],
    div: &SubspaceDivergence,
    cfg: &RelationConfig,
) -> Option<f64> {
    let d_qc = div.distance(q, &ball.center);
    if d_qc <= ball.radius {
        // Query inside the ball: the minimum is zero.
        return Some(0.0);
    }
    if ball.radius == 0.0 {
        return Some(div.distance(&ball.center, q));
    }
    let w = q.len();
    let mut g_q = vec![0.0; w];
    let mut g_c = vec![0.0; w];
    for pos in 0..w {
        g_q[pos] = div.grad(pos, q[pos]);
        g_c[pos] = div.grad(pos, ball.center[pos]);
    }
    let point_at = |t: f64| -> Option<Vec<f64>> {
        let mut x = vec![0.0; w];
        for pos in 0..w {
            let s = t * g_c[pos] + (1.0 - t) * g_q[pos];
            x[pos] = div.grad_inverse(pos, s).ok()?;
        }
        Some(x)
    };
    // phi(t) = D(x(t), c) - R: positive at t=0, negative at t=1.
    let phi = |x: &[f64]| div.distance(x, &ball.center) - ball.radius;

    let mut t_out = 0.0; // phi >= 0 side (outside the ball)
    let mut t_in = 1.0;
    let mut f_out = d_qc - ball.radius;
    let mut f_in = -ball.radius;
    let tol = cfg.tol * ball.radius.max(1.0);
    // Illinois-style false position: halving the retained endpoint's
    // value when the same side updates twice keeps both bracket ends
    // moving, where the plain secant can stall on one side.
    let mut last_side = 0i8;
    for _ in 0..cfg.max_iters {
        let mut t = (f_out * t_in - f_in * t_out) / (f_out - f_in);
        if !t.is_finite() || t <= t_out || t >= t_in {
            t = 0.5 * (t_out + t_in);
        }
        let x = point_at(t)?;
        let f = phi(&x);
        if f >= 0.0 {
            t_out = t;
            f_out = f;
            if last_side == 1 {
                f_in *= 0.5;
            }
            last_side = 1;
        } else {
            t_in = t;
            f_in = f;
            if last_side == -1 {
                f_out *= 0.5;
            }
            last_side = -1;
        }
        if f.abs() <= tol {
            break;
        }
    }
    let x_out = point_at(t_out)?;
    Some(div.distance(&x_out, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::DivergenceKind;

    fn se() -> DivergenceSpec {
        DivergenceSpec::new(DivergenceKind::SquaredEuclidean).unwrap()
    }

    fn leaf_node(center: Vec<f64>, radius: f64) -> BallNode {
        let bbox_min = center.clone();
        let bbox_max = center.clone();
        BallNode {
            ball: BregmanBall { center, radius },
            bbox_min,
            bbox_max,
            children: Children::Leaf { records: Vec::new() },
        }
    }

    #[test]
    fn relation_examples() {
        let spec = se();
        let div = SubspaceDivergence::full(&spec);
        let cfg = RelationConfig::default();

        // Query at the ball center, small range: intersects.
        let mut node = leaf_node(vec![0.0, 0.0], 1.0);
        node.bbox_min = vec![-0.7, -0.7];
        node.bbox_max = vec![0.7, 0.7];
        assert_eq!(ball_range_relation_node(&node, &[0.0, 0.0], 0.5, &div, &cfg), Relation::Intersects);

        // Far query, tight range: disjoint. Min squared distance is
        // (sqrt(200) - 1)^2 ~ 172.7.
        assert_eq!(ball_range_relation_node(&node, &[10.0, 10.0], 1.0, &div, &cfg), Relation::Disjoint);
        assert_eq!(
            ball_range_relation_node(&node, &[10.0, 10.0], 173.0, &div, &cfg),
            Relation::Intersects
        );

        // Point ball exactly on the range boundary: contained.
        let node = leaf_node(vec![1.0, 2.0], 0.0);
        let spec2 = se();
        let d = spec2.bregman_distance(&[1.0, 2.0], &[0.0, 0.0], None).unwrap();
        assert_eq!(
            ball_range_relation_node(&node, &[0.0, 0.0], d, &div, &cfg),
            Relation::Contained
        );
    }

    #[test]
    fn identical_points_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..4).map(|_| vec![1.5, -2.0]).collect();
        let spec = se();
        let div = SubspaceDivergence::full(&spec);
        let tree = BallTree::build(Matrix::from_rows(&rows).unwrap(), &div, 8, 1).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.root().ball.radius, 0.0);
        assert!(matches!(&tree.root().children, Children::Leaf { records } if records.len() == 4));
    }

    #[test]
    fn separated_clusters_split_cleanly() {
        let mut rows = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            rows.push(vec![rng.gen::<f64>(), rng.gen::<f64>()]);
        }
        for _ in 0..10 {
            rows.push(vec![100.0 + rng.gen::<f64>(), 100.0 + rng.gen::<f64>()]);
        }
        let spec = se();
        let div = SubspaceDivergence::full(&spec);
        let tree = BallTree::build(Matrix::from_rows(&rows).unwrap(), &div, 10, 3).unwrap();
        assert_eq!(tree.nodes().len(), 3);
        let (left, right) = match &tree.root().children {
            Children::Internal { left, right } => (*left, *right),
            Children::Leaf { .. } => panic!("expected a split"),
        };
        for child in [left, right] {
            let recs = match &tree.nodes()[child as usize].children {
                Children::Leaf { records } => records.clone(),
                Children::Internal { .. } => panic!("expected leaves"),
            };
            assert_eq!(recs.len(), 10);
            let all_low = recs.iter().all(|&r| r < 10);
            let all_high = recs.iter().all(|&r| r >= 10);
            assert!(all_low || all_high, "cluster mixed: {recs:?}");
        }
    }

    #[test]
    fn small_input_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let spec = se();
        let div = SubspaceDivergence::full(&spec);
        let tree = BallTree::build(Matrix::from_rows(&rows).unwrap(), &div, 8, 1).unwrap();
        assert_eq!(tree.nodes().len(), 1);
    }

    #[test]
    fn ball_containment_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> =
            (0..300).map(|_| (0..3).map(|_| rng.gen::<f64>() * 10.0).collect()).collect();
        let spec = se();
        let div = SubspaceDivergence::full(&spec);
        let data = Matrix::from_rows(&rows).unwrap();
        let tree = BallTree::build(data.clone(), &div, 16, 5).unwrap();

        let mut seen = vec![0usize; rows.len()];
        for node in tree.nodes() {
            if let Children::Leaf { records } = &node.children {
                for &r in records {
                    seen[r as usize] += 1;
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "each record in exactly one leaf");

        // Every record of every subtree sits inside the node's ball.
        for id in 0..tree.nodes().len() {
            let mut recs = Vec::new();
            tree.collect_records(id as u32, &mut recs);
            let node = &tree.nodes()[id];
            for &r in &recs {
                let d = div.distance(data.row(r as usize), &node.ball.center);
                assert!(d <= node.ball.radius + 1e-9 * node.ball.radius.max(1.0));
            }
        }
    }

    #[test]
    fn range_query_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let spec = se();
        let div = SubspaceDivergence::full(&spec);
        let rows: Vec<Vec<f64>> =
            (0..500).map(|_| (0..4).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect()).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let tree = BallTree::build(data.clone(), &div, 16, 9).unwrap();
        let cfg = RelationConfig::default();
        for _ in 0..50 {
            let q: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let r = rng.gen::<f64>() * 6.0;
            let got = tree.range_query(&q, r, &div, &cfg);
            let want: Vec<u32> = (0..rows.len() as u32)
                .filter(|&i| div.distance(data.row(i as usize), &q) <= r)
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn range_query_zero_and_saturating_radius() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 0.5], vec![1.0, 1.0], vec![-3.0, 4.0]];
        let spec = se();
        let div = SubspaceDivergence::full(&spec);
        let data = Matrix::from_rows(&rows).unwrap();
        let tree = BallTree::build(data, &div, 2, 1).unwrap();
        let cfg = RelationConfig::default();
        assert_eq!(tree.range_query(&[1.0, 1.0], 0.0, &div, &cfg), vec![0, 2]);
        let all = tree.range_query(&[1.0, 1.0], 1e9, &div, &cfg);
        assert_eq!(all, vec![0, 1, 2, 3]);
    }
}
