use adjbai::geometry::{center_arm_set, center_points, compute_adjacent_pairs, hull_oracle_2d, ArmSet};
use adjbai::instances::{circle_set, random_polytope_set};
use adjbai::linalg::{dot, sub};
use adjbai::Error;
use proptest::prelude::*;

fn arm_set_2d() -> impl Strategy<Value = ArmSet<f64>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 3..=30)
        .prop_filter_map("spanning", |pts| ArmSet::new(pts).ok())
}

fn arm_set_nd() -> impl Strategy<Value = (ArmSet<f64>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|d| {
        (
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), d + 1..=20),
            prop::collection::vec(-1.0f64..1.0, d),
        )
            .prop_filter_map("spanning", |(pts, th)| ArmSet::new(pts).ok().map(|x| (x, th)))
    })
}

#[test]
fn lp_adjacency_matches_hull_oracle_on_fifty_sets() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 50 {
        seed += 1;
        let k = 3 + (seed as usize * 11) % 28;
        let x = random_polytope_set::<f64>(2, k, seed).unwrap();
        let oracle = match hull_oracle_2d(&x) {
            Ok(o) => o,
            Err(Error::Collinear(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let lp = compute_adjacent_pairs(&x).unwrap();
        assert_eq!(lp.extreme_points, oracle.extreme_points, "seed {seed}");
        assert_eq!(lp.adjacent_pairs, oracle.adjacent_pairs, "seed {seed}");
        checked += 1;
    }
}

#[test]
fn circles_have_consecutive_edges() {
    for k in [8, 16] {
        let x = circle_set::<f64>(k).unwrap();
        let adj = compute_adjacent_pairs(&x).unwrap();
        assert_eq!(adj.extreme_points.len(), k);
        assert_eq!(adj.adjacent_pairs.len(), k);
        for &(i, j) in &adj.adjacent_pairs {
            assert!(j - i == 1 || (i == 0 && j == k - 1), "({i}, {j})");
        }
        assert!(adj.same_combinatorics(&hull_oracle_2d(&x).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_equivalence(x in arm_set_2d()) {
        if let Ok(oracle) = hull_oracle_2d(&x) {
            let lp = compute_adjacent_pairs(&x).unwrap();
            prop_assert_eq!(lp.extreme_points, oracle.extreme_points);
            prop_assert_eq!(lp.adjacent_pairs, oracle.adjacent_pairs);
        }
    }

    #[test]
    fn adjacency_lemma((x, theta) in arm_set_nd()) {
        let adj = compute_adjacent_pairs(&x).unwrap();
        for &v in &adj.extreme_points {
            let improves = |y: usize| dot(&sub(x.arm(y), x.arm(v)), &theta) > 0.0;
            let any = (0..x.len()).any(improves);
            let near = adj.neighbors_of(v).iter().any(|&z| improves(z));
            prop_assert_eq!(any, near, "vertex {}", v);
        }
    }

    #[test]
    fn structure_invariants((x, theta) in arm_set_nd()) {
        let adj = compute_adjacent_pairs(&x).unwrap();
        let centered = center_arm_set(&x);
        prop_assert!(adj.is_connected());
        for &(i, j) in &adj.adjacent_pairs {
            prop_assert!(i < j && adj.is_extreme(i) && adj.is_extreme(j));
            prop_assert!(adj.neighbors_of(i).contains(&j) && adj.neighbors_of(j).contains(&i));
            let w = adj.witness(i, j).unwrap();
            prop_assert!((dot(&centered.arms[i], &w.w) - 1.0).abs() < 1e-8);
            prop_assert!((dot(&centered.arms[j], &w.w) - 1.0).abs() < 1e-8);
            for &y in adj.extreme_points.iter().filter(|&&y| y != i && y != j) {
                prop_assert!(dot(&centered.arms[y], &w.w) <= 1.0 - w.margin + 1e-8);
            }
        }
        let degree_sum: usize = adj.neighbors.values().map(Vec::len).sum();
        prop_assert_eq!(degree_sum, 2 * adj.adjacent_pairs.len());

        // A unique maximizer is a vertex beating all its neighbors.
        let values: Vec<f64> = x.arms().iter().map(|a| dot(a, &theta)).collect();
        let best = (0..x.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
        if (0..x.len()).all(|i| i == best || values[i] < values[best]) {
            prop_assert!(adj.is_extreme(best));
            for &z in adj.neighbors_of(best) {
                prop_assert!(values[z] < values[best]);
            }
        }
    }

    #[test]
    fn centering_is_idempotent((x, _) in arm_set_nd()) {
        let once = center_arm_set(&x);
        let twice = center_points(&once.arms);
        for c in &twice.centroid {
            prop_assert!(c.abs() < 1e-12);
        }
        for (a, b) in once.arms.iter().zip(&twice.arms) {
            for (u, v) in a.iter().zip(b) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_preserves_combinatorics((x, _) in arm_set_nd(), c in 0.1f64..10.0) {
        let adj = compute_adjacent_pairs(&x).unwrap();
        let scaled = compute_adjacent_pairs(&x.scaled(c).unwrap()).unwrap();
        prop_assert!(adj.same_combinatorics(&scaled));
    }
}
