use colsafe_core::benchmarks::{make_lqr_problem, make_synthetic_2d, ProblemSpec, LQR_RESOLUTION};
use colsafe_core::estimator::{EstimatorConfig, NwEstimator};
use colsafe_core::gp::{GpModel, GpParams};
use colsafe_core::kernel::{KernelFamily, KernelSpec};
use colsafe_core::safe_learn::{
    compute_expanders, compute_maximizers, run, update_safe_set, BoundState, DomainGrid, IterationRecord, LoopConfig,
    LoopState, NwModel, PointSet,
};
use proptest::prelude::*;

// Triple loop straight from the definitions.
fn oracle(previous: &PointSet, bounds: &BoundState, grid: &DomainGrid, l: f64) -> (Vec<bool>, Vec<usize>) {
    let n = grid.len();
    let q = bounds.outputs();
    let safe: Vec<bool> = (0..n)
        .map(|t| (1..q).all(|i| (0..n).any(|a| previous.contains(a) && bounds.lower(a, i) - l * grid.distance(a, t) >= 0.0)))
        .collect();
    let counts = (0..n)
        .map(|a| {
            if !safe[a] {
                return 0;
            }
            (0..n)
                .filter(|&b| !safe[b] && (1..q).any(|i| bounds.upper(a, i) - l * grid.distance(a, b) >= 0.0))
                .count()
        })
        .collect();
    (safe, counts)
}

prop_compose! {
    fn scenario()(n in 2usize..120, dim in 1usize..4, q in 1usize..4)(
        coords in proptest::collection::vec(0u16..1000, n * dim),
        cells in proptest::collection::vec((-1.5f64..1.5, 0.0f64..2.0, 0u8..10), n * (q + 1)),
        extra in proptest::collection::vec(0..n, 0..n),
        seed in proptest::collection::vec(0..n, 1..4),
        l in 0.2f64..8.0,
        n in Just(n),
        dim in Just(dim),
        q in Just(q),
    ) -> (DomainGrid, BoundState, PointSet, f64) {
        // Unique coordinates: jitter by the index.
        let mut points: Vec<f64> = coords.iter().map(|&c| c as f64 / 1000.0).collect();
        for p in 0..n {
            points[p * dim] += p as f64 * 1e-6;
        }
        let grid = DomainGrid::from_points(dim, points, seed).unwrap();
        let mut bounds = BoundState::new(&grid, q + 1);
        for p in 0..n {
            for i in 0..=q {
                let (lo, w, tag) = cells[p * (q + 1) + i];
                let lo = if tag == 0 { f64::NEG_INFINITY } else { lo };
                let hi = if tag == 1 { f64::INFINITY } else { lo.max(-1.5) + w };
                bounds.set_raw(p, i, lo, hi);
            }
        }
        let previous = PointSet::from_indices(n, grid.safe_seed().iter().copied().chain(extra));
        (grid, bounds, previous, l)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sets_match_triple_loop((grid, bounds, previous, l) in scenario()) {
        let (safe, counts) = oracle(&previous, &bounds, &grid, l);
        let got = update_safe_set(&previous, &bounds, &grid, l);
        prop_assert_eq!((0..grid.len()).map(|p| got.contains(p)).collect::<Vec<_>>(), safe);
        let (expanders, got_counts) = compute_expanders(&got, &bounds, &grid, l);
        prop_assert_eq!(&got_counts, &counts);
        for p in 0..grid.len() {
            prop_assert_eq!(expanders.contains(p), counts[p] > 0);
        }
        // Raw bounds can leave nothing certified, which the loop never does.
        if !got.is_empty() {
            prop_assert!(compute_maximizers(&got, &bounds).is_subset(&got));
        }
    }
}

fn nw(problem: &ProblemSpec, family: KernelFamily, bandwidth: f64) -> NwModel {
    let cfg = EstimatorConfig {
        kernel: KernelSpec::new(family, bandwidth, 1.0).unwrap(),
        noise_std: problem.noise_std(),
        delta: 0.05,
        lipschitz: problem.lipschitz(),
    };
    NwModel::new(NwEstimator::new(cfg, problem.dim(), problem.outputs()).unwrap())
}

/// The loop keeps its sets incrementally; rebuilding them from scratch each
/// iteration must give the same result.
#[test]
fn loop_sets_match_recomputation() {
    let lqr = make_lqr_problem(LQR_RESOLUTION, 0.01).unwrap();
    let syn = make_synthetic_2d(31, 0.01).unwrap();
    for (p, family, bandwidth) in [
        (&lqr, KernelFamily::TruncatedMatern32, 0.1),
        (&syn, KernelFamily::Epanechnikov, 0.05),
    ] {
        let mut model = nw(p, family, bandwidth);
        let mut prev = PointSet::from_indices(p.grid().len(), p.grid().safe_seed().iter().copied());
        let mut mismatches = 0;
        let mut obs = |_: &IterationRecord, st: &LoopState, b: &BoundState| -> colsafe_core::Result<()> {
            let s = update_safe_set(&prev, b, p.grid(), p.lipschitz());
            let (g, c) = compute_expanders(&s, b, p.grid(), p.lipschitz());
            if s != st.safe || g != st.expanders || c != st.expansion || compute_maximizers(&s, b) != st.maximizers {
                mismatches += 1;
            }
            prev = st.safe.clone();
            Ok(())
        };
        let cfg = LoopConfig { budget: 250, lipschitz: p.lipschitz(), seed: 3, record_timing: false };
        let outcome = run(&mut model, p, &cfg, &mut obs).unwrap();
        assert_eq!(mismatches, 0, "{}", p.name());
        assert!(outcome.state.safe.len() > p.grid().safe_seed().len(), "{} never expanded", p.name());
    }
}

#[test]
fn bounds_stay_ordered_and_seed_stays_certified() {
    let p = make_synthetic_2d(21, 0.01).unwrap();
    let mut model = nw(&p, KernelFamily::Epanechnikov, 0.08);
    let seed = p.grid().safe_seed().to_vec();
    let mut obs = |r: &IterationRecord, st: &LoopState, b: &BoundState| -> colsafe_core::Result<()> {
        for a in 0..b.points() {
            for i in 0..b.outputs() {
                assert!(b.lower(a, i) <= b.upper(a, i));
            }
        }
        for &s in &seed {
            assert!(st.safe.contains(s));
            assert!(b.lower(s, 1) >= 0.0);
        }
        assert!(st.maximizers.union(&st.expanders).contains(r.index));
        Ok(())
    };
    let cfg = LoopConfig { budget: 150, lipschitz: 1.0, seed: 9, record_timing: false };
    let outcome = run(&mut model, &p, &cfg, &mut obs).unwrap();
    assert_eq!(outcome.total_true_violations(), 0);
}

#[test]
fn gp_baseline_runs_safely_on_the_synthetic_problem() {
    let p = make_synthetic_2d(15, 0.01).unwrap();
    let mut gp = GpModel::new(GpParams::default(), 2, 2).unwrap();
    let cfg = LoopConfig { budget: 40, lipschitz: 1.0, seed: 2, record_timing: false };
    let outcome = run(&mut gp, &p, &cfg, &mut |_, _, _| Ok(())).unwrap();
    assert_eq!(outcome.method, "gp-safeopt");
    assert_eq!(outcome.total_true_violations(), 0);
    assert!(outcome.state.safe.len() > 1);
}

#[test]
fn identical_seeds_give_identical_runs() {
    let p = make_synthetic_2d(21, 0.01).unwrap();
    let cfg = LoopConfig { budget: 60, lipschitz: 1.0, seed: 5, record_timing: false };
    let a = run(&mut nw(&p, KernelFamily::Epanechnikov, 0.08), &p, &cfg, &mut |_, _, _| Ok(())).unwrap();
    let b = run(&mut nw(&p, KernelFamily::Epanechnikov, 0.08), &p, &cfg, &mut |_, _, _| Ok(())).unwrap();
    assert_eq!(a.records(), b.records());
    assert_eq!(a.bounds, b.bounds);
}
