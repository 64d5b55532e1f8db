//! Fixed-radius neighbor search over a growing point set.
//!
//! [`RadiusIndex`] keeps static kd-trees over consecutive blocks of the
//! inserted points and scans a short tail linearly. Block sizes follow a
//! binary counter: when the tail fills up it becomes a block, and two
//! neighboring blocks of equal size are rebuilt as one of twice the size.
//! Every point is thus rebuilt `O(log n)` times, at most `O(log n)` trees are
//! searched per query, and results stay exact.

const LEAF_SIZE: usize = 16;
// Tail length that triggers a new block.
const MIN_BLOCK: usize = 32;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static kd-tree over points stored flat in row-major order.
#[derive(Debug, Clone, Default)]
pub struct KdTree {
    dim: usize,
    // Point ids, permuted so that every leaf owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// Builds a tree over the first `count` points of `points`.
    pub fn build(points: &[f64], dim: usize, count: usize) -> Self {
        Self::build_range(points, dim, 0, count)
    }

    /// Builds a tree over the points with ids `start..end`.
    pub fn build_range(points: &[f64], dim: usize, start: usize, end: usize) -> Self {
        let mut tree = Self {
            dim,
            order: (start..end).collect(),
            nodes: Vec::new(),
        };
        if end > start {
            tree.build_node(points, 0, end - start);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn build_node(&mut self, points: &[f64], start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.dim;
        // Split on the axis with the largest spread.
        let mut axis = 0;
        let mut best = -1.0;
        for k in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in &self.order[start..end] {
                let x = points[p * dim + k];
                lo = lo.min(x);
                hi = hi.max(x);
            }
            if hi - lo > best {
                best = hi - lo;
                axis = k;
            }
        }
        if best <= 0.0 {
            // All points coincide.
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + axis].total_cmp(&points[b * dim + axis])
        });
        let value = points[self.order[mid] * dim + axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Appends to `out` every id whose squared distance to `query` is at most
    /// `r2`, together with that squared distance.
    pub fn within(&self, points: &[f64], query: &[f64], r2: f64, out: &mut Vec<(usize, f64)>) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &p in &self.order[start..end] {
                        let d2 = sq_dist(&points[p * self.dim..(p + 1) * self.dim], query);
                        if d2 <= r2 {
                            out.push((p, d2));
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = query[axis] - value;
                    // Points equal to `value` may sit on either side.
                    if diff <= 0.0 || diff * diff <= r2 {
                        stack.push(left);
                    }
                    if diff >= 0.0 || diff * diff <= r2 {
                        stack.push(right);
                    }
                }
            }
        }
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Growing point set with exact fixed-radius queries.
#[derive(Debug, Clone)]
pub struct RadiusIndex {
    dim: usize,
    points: Vec<f64>,
    // Blocks of ids `0..covered`, oldest and largest first.
    trees: Vec<KdTree>,
    covered: usize,
}

impl RadiusIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            trees: Vec::new(),
            covered: 0,
        }
    }

    /// Builds an index over a fixed set of points in one go.
    pub fn from_points(points: Vec<f64>, dim: usize) -> Self {
        let n = points.len() / dim;
        let tree = KdTree::build(&points, dim, n);
        Self {
            dim,
            points,
            trees: vec![tree],
            covered: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points covered by kd-trees; the rest are scanned.
    pub fn indexed(&self) -> usize {
        self.covered
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.points[id * self.dim..(id + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn push(&mut self, point: &[f64]) {
        debug_assert_eq!(point.len(), self.dim);
        self.points.extend_from_slice(point);
        let n = self.len();
        if n - self.covered < MIN_BLOCK {
            return;
        }
        let mut start = self.covered;
        while let Some(last) = self.trees.last() {
            if last.len() > n - start {
                break;
            }
            start -= last.len();
            self.trees.pop();
        }
        self.trees.push(KdTree::build_range(&self.points, self.dim, start, n));
        self.covered = n;
    }

    /// All `(id, squared distance)` pairs with squared distance at most `r2`,
    /// sorted by id.
    pub fn within_sq(&self, query: &[f64], r2: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for tree in &self.trees {
            tree.within(&self.points, query, r2, &mut out);
        }
        for p in self.covered..self.len() {
            let d2 = sq_dist(self.point(p), query);
            if d2 <= r2 {
                out.push((p, d2));
            }
        }
        out.sort_unstable_by_key(|&(p, _)| p);
        out
    }
}
