use adjbai::design::{
    adjacent_optimal, apportion, design_matrix, g_optimal, kiefer_wolfowitz_check, minmax_design, round_design,
    DirectionSet, xy_optimal, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use adjbai::geometry::{compute_adjacent_pairs, ArmSet};
use adjbai::instances::{basis_set, circle_set, random_polytope_set};
use adjbai::linalg::Cholesky;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn arm_set() -> impl Strategy<Value = ArmSet<f64>> {
    (2usize..=4).prop_flat_map(|d| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), d + 1..=15)
            .prop_filter_map("spanning", |pts| ArmSet::new(pts).ok())
    })
}

#[test]
fn kiefer_wolfowitz_examples() {
    let check = |x: &ArmSet<f64>| {
        let kw = kiefer_wolfowitz_check(x, 0.01).unwrap();
        assert!(kw.passed, "value {}", kw.value);
        kw.value
    };
    assert_relative_eq!(check(&basis_set(3).unwrap()), 3.0, max_relative = 1e-3);
    assert_relative_eq!(check(&circle_set(12).unwrap()), 2.0, max_relative = 1e-3);
    assert_relative_eq!(check(&random_polytope_set(4, 20, 3).unwrap()), 4.0, max_relative = 1e-3);
}

#[test]
fn kiefer_wolfowitz_up_to_dimension_six() {
    for seed in 0..10u64 {
        let d = 2 + (seed as usize) % 5;
        let x = random_polytope_set::<f64>(d, 40, seed).unwrap();
        let g = g_optimal(&x, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(g.converged);
        assert!(g.lower_bound <= d as f64 + 1e-9 && d as f64 <= g.objective_value + 1e-9);
        assert!((g.objective_value - d as f64).abs() / (d as f64) < 1e-3);
    }
}

#[test]
fn scaling_leaves_difference_objectives_unchanged() {
    // Directions scale with the arms, so yᵀA⁻¹y is invariant; fixed
    // directions pick up 1/c².
    let x = random_polytope_set::<f64>(3, 12, 21).unwrap();
    let adj = compute_adjacent_pairs(&x).unwrap();
    let base = adjacent_optimal(&x, &adj, 1e-6, DEFAULT_MAX_ITER).unwrap();
    for c in [0.1, 3.0] {
        let xs = x.scaled(c).unwrap();
        let adjs = compute_adjacent_pairs(&xs).unwrap();
        assert!(adj.same_combinatorics(&adjs));
        let scaled = adjacent_optimal(&xs, &adjs, 1e-6, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(scaled.objective_value / base.objective_value, 1.0, max_relative = 1e-5);

        let fixed = DirectionSet::custom(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let a = minmax_design(&x, &fixed, 1e-6, DEFAULT_MAX_ITER).unwrap();
        let b = minmax_design(&xs, &fixed, 1e-6, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(b.objective_value * c * c / a.objective_value, 1.0, max_relative = 1e-5);
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let x = random_polytope_set::<f64>(3, 10, 5).unwrap();
    let x32 = x.cast::<f32>().unwrap();
    let adj = compute_adjacent_pairs(&x).unwrap();
    let adj32 = compute_adjacent_pairs(&x32).unwrap();
    assert_eq!(adj.adjacent_pairs, adj32.adjacent_pairs);
    let a = adjacent_optimal(&x, &adj, 1e-4, DEFAULT_MAX_ITER).unwrap();
    let b = adjacent_optimal(&x32, &adj32, 1e-3, DEFAULT_MAX_ITER).unwrap();
    assert_relative_eq!(b.objective_value as f64, a.objective_value, max_relative = 5e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn design_ordering_and_refinement(x in arm_set()) {
        let adj = compute_adjacent_pairs(&x).unwrap();
        let a = adjacent_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let xy = xy_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let d = x.dim() as f64;
        prop_assert!(a.lower_bound <= xy.objective_value * (1.0 + 1e-9));
        prop_assert!(a.objective_value <= 4.0 * d * (1.0 + DEFAULT_TOL));
        prop_assert!(xy.objective_value <= 4.0 * d * (1.0 + DEFAULT_TOL));
    }

    #[test]
    fn design_certificates(x in arm_set()) {
        let adj = compute_adjacent_pairs(&x).unwrap();
        let des = adjacent_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(des.converged);
        prop_assert!(des.weights.iter().all(|&w| w >= 0.0));
        prop_assert!((des.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(des.duality_gap >= 0.0 && des.lower_bound <= des.objective_value);
        prop_assert!(des.design_matrix.is_symmetric(0.0));
        prop_assert!(des.design_matrix.max_abs_diff(&design_matrix(&x, &des.weights)) < 1e-14);
        let chol = Cholesky::factor(&des.design_matrix).unwrap();
        prop_assert!((des.directions.max_inv_quad(&chol) - des.objective_value).abs() <= 1e-9 * des.objective_value);
        prop_assert!(des.trajectory.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*des.trajectory.last().unwrap(), des.objective_value);
    }

    #[test]
    fn rounding_guarantee(x in arm_set(), mult in prop::sample::select(vec![1usize, 4, 100])) {
        let adj = compute_adjacent_pairs(&x).unwrap();
        let d = x.dim();
        for des in [
            adjacent_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap(),
            g_optimal(&x, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap(),
        ] {
            let t = mult * d * d;
            let alloc = round_design(&x, &des, t).unwrap();
            prop_assert_eq!(alloc.counts.iter().sum::<usize>(), t);
            prop_assert!(alloc.variance_factor <= 2.0);
            for (i, &n) in alloc.counts.iter().enumerate() {
                prop_assert!(n == 0 || alloc.rounded_weights[i] > 0.0);
            }
        }
    }

    #[test]
    fn apportionment_sums_and_tracks_weights(raw in prop::collection::vec(0.0f64..1.0, 1..12), t in 1usize..500) {
        let s: f64 = raw.iter().sum();
        prop_assume!(s > 1e-6);
        let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let n = apportion(&w, t);
        prop_assert_eq!(n.iter().sum::<usize>(), t);
        let p = w.iter().filter(|&&v| v > 0.0).count() as f64;
        for (&ni, &wi) in n.iter().zip(&w) {
            if wi == 0.0 {
                prop_assert_eq!(ni, 0);
            } else {
                prop_assert!((ni as f64 - wi * t as f64).abs() <= p);
            }
        }
    }
}
