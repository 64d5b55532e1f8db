//! Safe set, potential maximizers and expanders, and the two argmax rules.
//!
//! Output 0 is the reward; outputs `1..` are constraints.

use super::bounds::BoundState;
use super::grid::DomainGrid;

/// Subset of grid indices stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    members: Vec<bool>,
    count: usize,
}

impl PointSet {
    pub fn empty(universe: usize) -> Self {
        Self {
            members: vec![false; universe],
            count: 0,
        }
    }

    pub fn full(universe: usize) -> Self {
        Self {
            members: vec![true; universe],
            count: universe,
        }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        if !self.members[i] {
            self.members[i] = true;
            self.count += 1;
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn universe(&self) -> usize {
        self.members.len()
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let members: Vec<bool> = self.members.iter().zip(&other.members).map(|(a, b)| *a || *b).collect();
        let count = members.iter().filter(|&&m| m).count();
        PointSet { members, count }
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.members.iter().zip(&other.members).all(|(a, b)| !*a || *b)
    }
}

/// `S_n`: points certified safe for every constraint by some point of the
/// previous safe set through the Lipschitz bound.
///
/// A certifier `a` with `l(a, i) ≥ 0` covers the ball of radius `l(a, i)/L`
/// around it, so only grid points inside that ball are tested.
pub fn update_safe_set(previous: &PointSet, bounds: &BoundState, grid: &DomainGrid, lipschitz: f64) -> PointSet {
    let n = grid.len();
    let mut safe = vec![true; n];
    for i in 1..bounds.outputs() {
        let mut certified = vec![false; n];
        for a in previous.iter() {
            let l = bounds.lower(a, i);
            if l < 0.0 {
                continue;
            }
            if l - lipschitz * grid.reach() >= 0.0 {
                certified.iter_mut().for_each(|c| *c = true);
                break;
            }
            for target in grid.near(a, l / lipschitz) {
                if !certified[target] && l - lipschitz * grid.distance(a, target) >= 0.0 {
                    certified[target] = true;
                }
            }
        }
        for (s, c) in safe.iter_mut().zip(&certified) {
            *s &= *c;
        }
    }
    let count = safe.iter().filter(|&&m| m).count();
    PointSet { members: safe, count }
}

/// `M_n`: safe points whose reward upper bound reaches the best lower bound.
pub fn compute_maximizers(safe: &PointSet, bounds: &BoundState) -> PointSet {
    assert!(!safe.is_empty(), "safe set can never be empty");
    let best_lower = safe.iter().map(|a| bounds.lower(a, 0)).fold(f64::NEG_INFINITY, f64::max);
    PointSet::from_indices(safe.universe(), safe.iter().filter(|&a| bounds.upper(a, 0) >= best_lower))
}

/// `G_n` together with `e_n(a)` for every grid point (zero outside `S_n`).
pub fn compute_expanders(
    safe: &PointSet,
    bounds: &BoundState,
    grid: &DomainGrid,
    lipschitz: f64,
) -> (PointSet, Vec<usize>) {
    let n = grid.len();
    let unsafe_count = n - safe.len();
    let mut counts = vec![0usize; n];
    if bounds.outputs() > 1 && unsafe_count > 0 {
        for a in safe.iter() {
            // ∃ i: u(a,i) − L·d ≥ 0  ⇔  max_i u(a,i) − L·d ≥ 0.
            let optimistic = (1..bounds.outputs())
                .map(|i| bounds.upper(a, i))
                .fold(f64::NEG_INFINITY, f64::max);
            counts[a] = if optimistic < 0.0 {
                0
            } else if optimistic - lipschitz * grid.reach() >= 0.0 {
                // Covers the whole grid, including the infinite case.
                unsafe_count
            } else {
                grid.near(a, optimistic / lipschitz)
                    .into_iter()
                    .filter(|&b| !safe.contains(b) && optimistic - lipschitz * grid.distance(a, b) >= 0.0)
                    .count()
            };
        }
    }
    let expanders = PointSet::from_indices(n, safe.iter().filter(|&a| counts[a] > 0));
    (expanders, counts)
}

/// Largest `max_i w_n(a, i)` over the candidates, smallest index on ties.
/// `None` when there are no candidates.
pub fn select_next(candidates: &PointSet, bounds: &BoundState) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for a in candidates.iter() {
        let w = (0..bounds.outputs()).map(|i| bounds.width(a, i)).fold(f64::NEG_INFINITY, f64::max);
        match best {
            Some((_, bw)) if w <= bw => {}
            _ => best = Some((a, w)),
        }
    }
    best.map(|(a, _)| a)
}

/// Safe point with the largest reward lower bound, smallest index on ties.
pub fn best_guess(safe: &PointSet, bounds: &BoundState) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for a in safe.iter() {
        let l = bounds.lower(a, 0);
        match best {
            Some((_, bl)) if l <= bl => {}
            _ => best = Some((a, l)),
        }
    }
    best.expect("safe set can never be empty").0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, spacing: f64, seed: usize) -> DomainGrid {
        let points = (0..n).map(|i| i as f64 * spacing).collect();
        DomainGrid::from_points(1, points, vec![seed]).unwrap()
    }

    #[test]
    fn uninformed_safe_set_is_the_seed() {
        let g = line(10, 0.1, 3);
        let b = BoundState::new(&g, 2);
        let s0 = PointSet::from_indices(10, [3]);
        assert_eq!(update_safe_set(&s0, &b, &g, 1.75), s0);
    }

    #[test]
    fn lipschitz_ball_around_seed() {
        let g = line(21, 0.05, 0);
        let mut b = BoundState::new(&g, 2);
        b.set_raw(0, 1, 1.0, 2.0);
        let s = update_safe_set(&PointSet::from_indices(21, [0]), &b, &g, 1.75);
        let expected: Vec<usize> = (0..21).filter(|&i| 1.0 - 1.75 * (i as f64 * 0.05) >= 0.0).collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), expected);
        assert_eq!(expected.last(), Some(&11));
    }

    #[test]
    fn full_grid_is_a_fixed_point() {
        let g = line(5, 0.1, 0);
        let mut b = BoundState::new(&g, 2);
        for p in 0..5 {
            b.set_raw(p, 1, 0.0, 1.0);
        }
        let full = PointSet::full(5);
        assert_eq!(update_safe_set(&full, &b, &g, 1.0), full);
        let (g_set, counts) = compute_expanders(&full, &b, &g, 1.0);
        assert!(g_set.is_empty());
        assert!(counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn maximizers() {
        let g = line(3, 1.0, 0);
        let mut b = BoundState::new(&g, 1);
        b.set_raw(0, 0, 0.0, 1.0);
        b.set_raw(1, 0, 0.5, 2.0);
        b.set_raw(2, 0, 1.5, 1.6);
        let m = compute_maximizers(&PointSet::full(3), &b);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![1, 2]);

        let mut b = BoundState::new(&g, 1);
        for p in 0..3 {
            b.set_raw(p, 0, 0.0, 1.0);
        }
        assert_eq!(compute_maximizers(&PointSet::full(3), &b), PointSet::full(3));
    }

    #[test]
    fn expanders() {
        let g = line(4, 0.5, 0);
        let mut b = BoundState::new(&g, 2);
        let s = PointSet::from_indices(4, [0]);
        b.set_raw(0, 1, 0.0, 0.0);
        assert!(compute_expanders(&s, &b, &g, 1.75).0.is_empty());
        b.set_raw(0, 1, 0.0, 2.0);
        let (set, counts) = compute_expanders(&s, &b, &g, 1.75);
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![0]);
        // 2.0 − 1.75·d ≥ 0 for d ∈ {0.5, 1.0}.
        assert_eq!(counts[0], 2);
    }

    #[test]
    fn selection_and_best_guess() {
        let g = line(3, 1.0, 0);
        let mut b = BoundState::new(&g, 1);
        b.set_raw(0, 0, 0.0, 1.0);
        b.set_raw(1, 0, 0.0, 3.0);
        b.set_raw(2, 0, 0.0, 2.0);
        let all = PointSet::full(3);
        assert_eq!(select_next(&all, &b), Some(1));
        assert_eq!(select_next(&PointSet::from_indices(3, [2]), &b), Some(2));
        assert_eq!(select_next(&PointSet::empty(3), &b), None);
        b.set_raw(2, 0, 0.0, 3.0);
        assert_eq!(select_next(&all, &b), Some(1));
        b.set_raw(2, 0, f64::NEG_INFINITY, 0.0);
        assert_eq!(select_next(&all, &b), Some(2));

        let b = BoundState::new(&g, 2);
        assert_eq!(best_guess(&PointSet::from_indices(3, [1, 2]), &b), 1);
        let mut b = BoundState::new(&g, 1);
        b.set_raw(0, 0, 1.0, 9.0);
        b.set_raw(1, 0, 5.0, 9.0);
        b.set_raw(2, 0, 1.0, 9.0);
        assert_eq!(best_guess(&all, &b), 1);
    }
}
