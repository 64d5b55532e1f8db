//! Incremental maintenance of `S_n`, `G_n` and `e_n` inside the loop.
//!
//! Relies on two facts that hold for bounds produced by repeated
//! intersection: `l` never decreases and `u` never increases. Then a point
//! certified for constraint `i` stays certified, `S_n` only grows, and a
//! point can only gain certifications from certifiers whose lower bound
//! moved or that joined the safe set in the previous iteration. Likewise
//! `e_n(a)` only changes when `u(a, ·)` moved or when points it covered
//! became safe. The results equal [`update_safe_set`] and
//! [`compute_expanders`] applied from scratch.
//!
//! [`update_safe_set`]: super::update_safe_set
//! [`compute_expanders`]: super::compute_expanders

use super::bounds::BoundState;
use super::grid::DomainGrid;
use super::sets::PointSet;

#[derive(Debug, Clone)]
pub(crate) struct SetTracker {
    lipschitz: f64,
    // certified[i - 1][b]: some certifier proved constraint i at b.
    certified: Vec<Vec<bool>>,
    safe: PointSet,
    // Members that joined in the last update and have not certified yet.
    fresh: Vec<usize>,
    // max_i u(a, i) over the constraints, as of the last update.
    optimistic: Vec<f64>,
    counts: Vec<usize>,
    primed: bool,
}

impl SetTracker {
    pub(crate) fn new(grid: &DomainGrid, outputs: usize, lipschitz: f64) -> Self {
        let n = grid.len();
        Self {
            lipschitz,
            certified: vec![vec![false; n]; outputs - 1],
            safe: PointSet::from_indices(n, grid.safe_seed().iter().copied()),
            fresh: grid.safe_seed().to_vec(),
            optimistic: vec![f64::INFINITY; n],
            counts: vec![0; n],
            primed: false,
        }
    }

    pub(crate) fn safe(&self) -> &PointSet {
        &self.safe
    }

    pub(crate) fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `changed` lists the points whose bounds moved since the last call.
    pub(crate) fn update(&mut self, bounds: &BoundState, grid: &DomainGrid, changed: &[usize]) {
        let n = grid.len();
        let lip = self.lipschitz;
        let reach = grid.reach();

        // Safe set.
        let mut active: Vec<usize> = changed.iter().copied().filter(|&a| self.safe.contains(a)).collect();
        active.extend_from_slice(&self.fresh);
        active.sort_unstable();
        active.dedup();
        for (k, cert) in self.certified.iter_mut().enumerate() {
            let i = k + 1;
            for &a in &active {
                let l = bounds.lower(a, i);
                if l < 0.0 {
                    continue;
                }
                if l - lip * reach >= 0.0 {
                    cert.iter_mut().for_each(|c| *c = true);
                    break;
                }
                for b in grid.near(a, l / lip) {
                    if !cert[b] && l - lip * grid.distance(a, b) >= 0.0 {
                        cert[b] = true;
                    }
                }
            }
        }
        let joined: Vec<usize> = (0..n)
            .filter(|&b| !self.safe.contains(b) && self.certified.iter().all(|c| c[b]))
            .collect();
        let previous = self.safe.clone();
        for &b in &joined {
            self.safe.insert(b);
        }
        self.fresh = joined.clone();

        // Expander counts.
        if self.certified.is_empty() {
            return;
        }
        let unsafe_count = n - self.safe.len();
        let mut recount = vec![false; n];
        let everything: Vec<usize>;
        let changed = if self.primed {
            changed
        } else {
            self.primed = true;
            everything = (0..n).collect();
            &everything
        };
        for &a in changed {
            let opt = (1..bounds.outputs()).map(|i| bounds.upper(a, i)).fold(f64::NEG_INFINITY, f64::max);
            self.optimistic[a] = opt;
            recount[a] = true;
        }
        for &b in &joined {
            recount[b] = true;
        }
        // Old members keep their counts minus the points that just left
        // the unsafe set, unless their own bound moved.
        let is_global = |opt: f64| opt - lip * reach >= 0.0;
        let mut radius: f64 = 0.0;
        for a in previous.iter() {
            let opt = self.optimistic[a];
            if !recount[a] && opt >= 0.0 && !is_global(opt) {
                radius = radius.max(opt / lip);
            }
        }
        if !joined.is_empty() && radius > 0.0 {
            for &b in &joined {
                for a in grid.near(b, radius) {
                    if !previous.contains(a) || recount[a] {
                        continue;
                    }
                    let opt = self.optimistic[a];
                    if opt >= 0.0 && !is_global(opt) && opt - lip * grid.distance(a, b) >= 0.0 {
                        self.counts[a] -= 1;
                    }
                }
            }
        }
        for a in self.safe.iter() {
            let opt = self.optimistic[a];
            if opt < 0.0 {
                self.counts[a] = 0;
            } else if is_global(opt) {
                self.counts[a] = unsafe_count;
            } else if recount[a] {
                self.counts[a] = grid
                    .near(a, opt / lip)
                    .into_iter()
                    .filter(|&b| !self.safe.contains(b) && opt - lip * grid.distance(a, b) >= 0.0)
                    .count();
            }
        }
    }

    pub(crate) fn expanders(&self) -> PointSet {
        PointSet::from_indices(self.safe.universe(), self.safe.iter().filter(|&a| self.counts[a] > 0))
    }
}
