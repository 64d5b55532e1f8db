use crate::kernel::distance;
use crate::safe_learn::DomainGrid;

use super::ProblemSpec;

pub const OPTIMUM: [f64; 2] = [0.8, 0.75];
pub const SAFE_CENTER: [f64; 2] = [0.5, 0.5];
pub const SAFE_RADIUS: f64 = 0.4;
pub const SEED: [f64; 2] = [0.35, 0.35];

/// Two-dimensional cone problem on `[0, 1]²`.
///
/// Reward `f(a) = 1 − ‖a − a*‖`, constraint `g(a) = r − ‖a − c‖`: the safe
/// region is a disk that contains both the seed and the optimum. Both are
/// 1-Lipschitz.
pub fn make_synthetic_2d(resolution: usize, noise_std: f64) -> crate::Result<ProblemSpec> {
    let grid = DomainGrid::lattice(&[0.0, 0.0], &[1.0, 1.0], &[resolution, resolution], &[SEED.to_vec()], |_| true)?;
    ProblemSpec::from_fn("synthetic-2d", grid, 1, noise_std, 1.0, |a| {
        vec![1.0 - distance(a, &OPTIMUM), SAFE_RADIUS - distance(a, &SAFE_CENTER)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_strictly_safe() {
        let p = make_synthetic_2d(31, 0.01).unwrap();
        for &s in p.grid().safe_seed() {
            assert!(p.truth_at(s)[1] >= 1e-3);
        }
    }

    #[test]
    fn declared_lipschitz_dominates_slopes() {
        let p = make_synthetic_2d(21, 0.01).unwrap();
        assert!(p.empirical_lipschitz() <= p.lipschitz() + 1e-12);
    }

    #[test]
    fn safe_optimum_lies_in_the_safe_disk() {
        let p = make_synthetic_2d(31, 0.01).unwrap();
        let opt = p.safe_optimum().unwrap();
        // Brute force over the grid, independent of `safe_optimum`.
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..p.grid().len() {
            let a = p.grid().point(i);
            if SAFE_RADIUS - distance(a, &SAFE_CENTER) >= 0.0 && 1.0 - distance(a, &OPTIMUM) > best.1 {
                best = (i, 1.0 - distance(a, &OPTIMUM));
            }
        }
        assert_eq!(opt, best.0);
        assert!(p.truth_at(opt)[0] > p.truth_at(p.grid().safe_seed()[0])[0]);
    }
}
