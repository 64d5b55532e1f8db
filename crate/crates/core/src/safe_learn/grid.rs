use crate::error::{check_dim, domain, Result};
use crate::kernel::distance;
use crate::spatial::RadiusIndex;

/// Finite parameter set with a designated safe seed.
///
/// Point order is fixed for the lifetime of a run; every argmax in the
/// algorithm breaks ties towards the smaller index.
#[derive(Debug, Clone)]
pub struct DomainGrid {
    dim: usize,
    points: Vec<f64>,
    safe_seed: Vec<usize>,
    lattice: Option<Lattice>,
    index: RadiusIndex,
    reach: f64,
}

impl PartialEq for DomainGrid {
    fn eq(&self, other: &Self) -> bool {
        // The index is a function of the points.
        self.dim == other.dim
            && self.points == other.points
            && self.safe_seed == other.safe_seed
            && self.lattice == other.lattice
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Lattice {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
    // Lattice cell (row-major) -> point index, `None` for excluded cells.
    slots: Vec<Option<usize>>,
}

impl Lattice {
    fn coord(&self, axis: usize, k: usize) -> f64 {
        let n = self.resolution[axis];
        if n == 1 {
            return self.lower[axis];
        }
        let t = k as f64 / (n - 1) as f64;
        self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
    }

    fn cell(&self, point: &[f64]) -> Option<usize> {
        let mut cell = 0;
        for (axis, &x) in point.iter().enumerate() {
            let n = self.resolution[axis];
            let k = if n == 1 {
                0
            } else {
                let span = self.upper[axis] - self.lower[axis];
                let t = (x - self.lower[axis]) / span * (n - 1) as f64;
                let k = t.round();
                if k < 0.0 || k > (n - 1) as f64 {
                    return None;
                }
                k as usize
            };
            let c = self.coord(axis, k);
            let tol = 1e-9 * (self.upper[axis] - self.lower[axis]).abs().max(1.0);
            if (c - x).abs() > tol {
                return None;
            }
            cell = cell * n + k;
        }
        Some(cell)
    }
}

impl DomainGrid {
    /// Axis-aligned uniform lattice, row-major (last axis varies fastest).
    ///
    /// `keep` filters lattice points out of the domain; seeds are snapped to
    /// the nearest kept lattice point.
    pub fn lattice(
        lower: &[f64],
        upper: &[f64],
        resolution: &[usize],
        seeds: &[Vec<f64>],
        mut keep: impl FnMut(&[f64]) -> bool,
    ) -> Result<Self> {
        let dim = lower.len();
        check_dim(dim, upper.len())?;
        check_dim(dim, resolution.len())?;
        if dim == 0 {
            return Err(domain("grid needs at least one axis"));
        }
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(domain(format!("invalid bounds on axis {k}: [{}, {}]", lower[k], upper[k])));
            }
            if resolution[k] == 0 {
                return Err(domain(format!("resolution on axis {k} must be positive")));
            }
        }
        let cells: usize = resolution.iter().product();
        let mut lattice = Lattice {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            resolution: resolution.to_vec(),
            slots: vec![None; cells],
        };
        let mut points = Vec::with_capacity(cells * dim);
        let mut p = vec![0.0; dim];
        for cell in 0..cells {
            let mut rest = cell;
            for axis in (0..dim).rev() {
                let n = resolution[axis];
                p[axis] = lattice.coord(axis, rest % n);
                rest /= n;
            }
            if keep(&p) {
                lattice.slots[cell] = Some(points.len() / dim);
                points.extend_from_slice(&p);
            }
        }
        let mut grid = Self {
            dim,
            index: RadiusIndex::from_points(points.clone(), dim),
            reach: Self::compute_reach(dim, &points),
            points,
            safe_seed: Vec::new(),
            lattice: Some(lattice),
        };
        let mut seed_ids = Vec::with_capacity(seeds.len());
        for s in seeds {
            check_dim(dim, s.len())?;
            seed_ids.push(grid.nearest(s).ok_or_else(|| domain("grid is empty"))?);
        }
        grid.set_seed(seed_ids)?;
        Ok(grid)
    }

    /// Grid from an explicit point list.
    pub fn from_points(dim: usize, points: Vec<f64>, safe_seed: Vec<usize>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(domain("point buffer length is not a multiple of the dimension"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(domain("grid points must be finite"));
        }
        let mut grid = Self {
            dim,
            index: RadiusIndex::from_points(points.clone(), dim),
            reach: Self::compute_reach(dim, &points),
            points,
            safe_seed: Vec::new(),
            lattice: None,
        };
        for i in 0..grid.len() {
            if let Some(&(j, _)) = grid.index.within_sq(grid.point(i), 0.0).first() {
                if j != i {
                    return Err(domain(format!("grid points {j} and {i} coincide")));
                }
            }
        }
        grid.set_seed(safe_seed)?;
        Ok(grid)
    }

    fn set_seed(&mut self, mut seed: Vec<usize>) -> Result<()> {
        seed.sort_unstable();
        seed.dedup();
        if seed.is_empty() {
            return Err(domain("safe seed must be nonempty"));
        }
        if let Some(&bad) = seed.iter().find(|&&s| s >= self.len()) {
            return Err(domain(format!("seed index {bad} out of range")));
        }
        self.safe_seed = seed;
        Ok(())
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

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Seed indices, ascending.
    pub fn safe_seed(&self) -> &[usize] {
        &self.safe_seed
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.point(i), self.point(j))
    }

    /// Upper bound on every pairwise distance: the bounding-box diagonal
    /// with a small relative margin against rounding.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    fn compute_reach(dim: usize, points: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for axis in 0..dim {
            let coords = points.iter().skip(axis).step_by(dim);
            let lo = coords.clone().copied().fold(f64::INFINITY, f64::min);
            let hi = coords.copied().fold(f64::NEG_INFINITY, f64::max);
            if hi >= lo {
                d2 += (hi - lo) * (hi - lo);
            }
        }
        d2.sqrt() * (1.0 + 1e-9)
    }

    /// Grid points within distance `radius` of point `center`, ascending.
    ///
    /// The search radius is inflated by a relative `1e-9`, so the result may
    /// contain points marginally outside the ball; callers apply their own
    /// exact test.
    pub fn near(&self, center: usize, radius: f64) -> Vec<usize> {
        if radius.is_nan() || radius < 0.0 {
            return Vec::new();
        }
        let r = radius * (1.0 + 1e-9);
        self.index.within_sq(self.point(center), r * r).into_iter().map(|(p, _)| p).collect()
    }

    /// Index of the grid point equal to `point`, if any.
    pub fn index_of(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim {
            return None;
        }
        match &self.lattice {
            Some(l) => l.cell(point).and_then(|c| l.slots[c]),
            None => (0..self.len()).find(|&i| self.point(i) == point),
        }
    }

    fn nearest(&self, point: &[f64]) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            distance(self.point(a), point).total_cmp(&distance(self.point(b), point))
        })
    }
}
