//! Desk-scale controller tuning: LQR weights for a double integrator whose
//! real actuator differs from the design model.
//!
//! The learner picks `(q, r)`; the controller is the discrete-time LQR gain
//! of the *design* model for `Q = diag(10^q, 1)`, `R = 10^r`. That gain is
//! then run on the *true* plant, which has a stronger actuator with first
//! order lag. Aggressive weights track faster but make the true trajectory
//! drift away from the one the design model predicts; the constraint keeps
//! that drift inside a tube.

use nalgebra::{Matrix2, RowVector2, Vector2};

use crate::safe_learn::DomainGrid;

use super::ProblemSpec;

/// 1.5 × the largest slope of the noise-free outputs between neighboring
/// points of a 321 × 321 grid (about 2.0), rounded up.
pub const LQR_LIPSCHITZ: f64 = 3.1;

/// Grid resolution per axis used by the shipped configurations.
pub const LQR_RESOLUTION: usize = 41;

pub const Q_RANGE: [f64; 2] = [0.0, 4.0];
pub const R_RANGE: [f64; 2] = [-2.0, 2.0];
pub const SEED: [f64; 2] = [0.5, 1.5];

#[derive(Debug, Clone, PartialEq)]
pub struct LqrPlant {
    pub dt: f64,
    pub horizon: usize,
    /// True actuator gain relative to the design model.
    pub input_gain: f64,
    /// First-order actuator lag coefficient in `[0, 1)`.
    pub actuator_lag: f64,
    /// Allowed deviation between true and predicted state.
    pub margin: f64,
    /// Deviations are clipped at `deviation_cap · margin` so that diverging
    /// rollouts give a bounded, gently sloped constraint value.
    pub deviation_cap: f64,
    pub initial_state: [f64; 2],
}

impl Default for LqrPlant {
    fn default() -> Self {
        Self {
            dt: 0.05,
            horizon: 200,
            input_gain: 1.3,
            actuator_lag: 0.3,
            margin: 1.0,
            deviation_cap: 1.25,
            initial_state: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rollout {
    /// `Σ p_t² dt` on the true plant.
    pub cost: f64,
    /// `max_t ‖x_t − x̂_t‖` between true and design-model trajectories.
    pub max_deviation: f64,
}

impl LqrPlant {
    fn a(&self) -> Matrix2<f64> {
        Matrix2::new(1.0, self.dt, 0.0, 1.0)
    }

    fn b(&self) -> Vector2<f64> {
        Vector2::new(0.5 * self.dt * self.dt, self.dt)
    }

    /// LQR gain of the design model, or `None` if synthesis fails.
    pub fn design_gain(&self, q_exp: f64, r_exp: f64) -> Option<RowVector2<f64>> {
        let a = self.a();
        let b = self.b();
        let q = Matrix2::new(10f64.powf(q_exp), 0.0, 0.0, 1.0);
        let r = 10f64.powf(r_exp);
        let p = solve_dare(&a, &b, &q, r)?;
        let denom = r + (b.transpose() * p * b)[(0, 0)];
        let k = (b.transpose() * p * a) / denom;
        // Design closed loop must be Schur stable.
        let closed = a - b * k;
        let eig = closed.complex_eigenvalues();
        if k.iter().all(|v| v.is_finite()) && eig.iter().all(|e| e.norm() < 1.0) {
            Some(k)
        } else {
            None
        }
    }

    pub fn rollout(&self, gain: &RowVector2<f64>) -> Rollout {
        let a = self.a();
        let b = self.b();
        let mut x = Vector2::from(self.initial_state);
        let mut predicted = x;
        let mut applied = 0.0;
        let mut cost = 0.0;
        let mut max_deviation: f64 = 0.0;
        for _ in 0..self.horizon {
            let u = -(gain * x)[(0, 0)];
            applied = self.actuator_lag * applied + (1.0 - self.actuator_lag) * u;
            x = a * x + b * (self.input_gain * applied);
            predicted = a * predicted - b * (gain * predicted)[(0, 0)];
            cost += x[0] * x[0] * self.dt;
            max_deviation = max_deviation.max((x - predicted).norm());
        }
        Rollout { cost, max_deviation }
    }

    /// Noise-free `[f, g]` at weight exponents `(q, r)`.
    ///
    /// `f` is the tracking cost normalized by the cost of never moving; `g`
    /// is the margin minus the clipped deviation.
    pub fn outputs(&self, q_exp: f64, r_exp: f64) -> Option<[f64; 2]> {
        let k = self.design_gain(q_exp, r_exp)?;
        let roll = self.rollout(&k);
        let idle = self.initial_state[0].powi(2) * self.dt * self.horizon as f64;
        let f = -(roll.cost / idle).min(10.0);
        let g = self.margin - roll.max_deviation.min(self.deviation_cap * self.margin);
        if f.is_finite() && g.is_finite() {
            Some([f, g])
        } else {
            None
        }
    }
}

// Structure-preserving doubling for P = Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA.
fn solve_dare(a: &Matrix2<f64>, b: &Vector2<f64>, q: &Matrix2<f64>, r: f64) -> Option<Matrix2<f64>> {
    let mut ak = *a;
    let mut gk = b * b.transpose() / r;
    let mut hk = *q;
    for _ in 0..64 {
        let w = (Matrix2::identity() + gk * hk).try_inverse()?;
        let a_next = ak * w * ak;
        let g_next = gk + ak * w * gk * ak.transpose();
        let h_next = hk + ak.transpose() * hk * w * ak;
        let change = (h_next - hk).abs().max();
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if !hk.iter().all(|v| v.is_finite()) {
            return None;
        }
        if change <= 1e-13 * hk.abs().max().max(1.0) {
            return Some(hk);
        }
    }
    None
}

/// LQR tuning problem over `(q, r) ∈ [0, 4] × [−2, 2]`.
pub fn make_lqr_problem(resolution: usize, noise_std: f64) -> crate::Result<ProblemSpec> {
    let plant = LqrPlant::default();
    let grid = DomainGrid::lattice(
        &[Q_RANGE[0], R_RANGE[0]],
        &[Q_RANGE[1], R_RANGE[1]],
        &[resolution, resolution],
        &[SEED.to_vec()],
        |a| plant.outputs(a[0], a[1]).is_some(),
    )?;
    ProblemSpec::from_fn("lqr", grid, 1, noise_std, LQR_LIPSCHITZ, |a| {
        plant.outputs(a[0], a[1]).expect("grid keeps only synthesizable weights").to_vec()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dare_residual(q_exp: f64, r_exp: f64) -> f64 {
        let plant = LqrPlant::default();
        let (a, b) = (plant.a(), plant.b());
        let q = Matrix2::new(10f64.powf(q_exp), 0.0, 0.0, 1.0);
        let r = 10f64.powf(r_exp);
        let p = solve_dare(&a, &b, &q, r).unwrap();
        let pb = p * b;
        let rhs = q + a.transpose() * p * a - a.transpose() * pb * pb.transpose() * a / (r + (b.transpose() * pb)[(0, 0)]);
        (rhs - p).abs().max() / p.abs().max()
    }

    #[test]
    fn riccati_solution_is_a_fixed_point() {
        for (q, r) in [(0.0, 2.0), (4.0, -2.0), (2.0, 0.0), (0.5, 1.5)] {
            assert!(dare_residual(q, r) < 1e-9, "({q}, {r})");
        }
    }

    #[test]
    fn riccati_matches_value_iteration() {
        // Independent route: plain Riccati recursion until it settles.
        let plant = LqrPlant::default();
        let (a, b) = (plant.a(), plant.b());
        let q = Matrix2::new(10.0, 0.0, 0.0, 1.0);
        let r = 1.0;
        let mut p = q;
        for _ in 0..200_000 {
            let pb = p * b;
            p = q + a.transpose() * p * a - a.transpose() * pb * pb.transpose() * a / (r + (b.transpose() * pb)[(0, 0)]);
        }
        let doubled = solve_dare(&a, &b, &q, r).unwrap();
        assert!((p - doubled).abs().max() / p.abs().max() < 1e-9);
    }

    #[test]
    fn seed_is_safe_and_improvable() {
        let p = make_lqr_problem(LQR_RESOLUTION, 0.0).unwrap();
        let seed = p.grid().safe_seed()[0];
        assert!(p.truth_at(seed)[1] >= 1e-3);
        let opt = p.safe_optimum().unwrap();
        assert!(p.truth_at(seed)[0] <= p.truth_at(opt)[0]);
        assert!(!p.grid().is_empty());
    }

    #[test]
    fn declared_lipschitz_dominates_slopes() {
        let p = make_lqr_problem(LQR_RESOLUTION, 0.0).unwrap();
        let empirical = p.empirical_lipschitz();
        eprintln!("empirical lqr slope {empirical}");
        assert!(empirical * 1.5 <= p.lipschitz() + 1e-9);
    }
}
