use cubicnet::cluster::build_quiver;
use cubicnet::curve::{CubicDifferential, HomologyClass};
use cubicnet::invariants::{self, random_sl3, rel_residual, Chart, Value, VectorAssignment};
use cubicnet::trees::{self, bipartify, frozen_fan, AbelTree, ChamberState};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// m zeros, ordered, gaps at least 0.3, with small imaginary parts.
fn zeros() -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((0.3f64..1.5, -0.2f64..0.2), 2..=5).prop_map(|v| {
        let mut x = -1.5;
        v.into_iter()
            .map(|(gap, im)| {
                x += gap;
                C::new(x, im)
            })
            .collect()
    })
}

/// Reachable crossing counts: every pair at c or c + 1.
fn chamber() -> impl Strategy<Value = ChamberState> {
    (2usize..=6, -4i64..4).prop_flat_map(|(m, c)| {
        prop::collection::vec(0i64..=1, m - 1).prop_map(move |d| ChamberState { m, states: d.iter().map(|k| c + k).collect() })
    })
}

fn value(v: Value<C>) -> C {
    match v {
        Value::Finite(x) => x,
        Value::Pole => panic!("pole on a random assignment"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeros_are_simple_and_cached(zs in zeros(), lead in (0.5f64..2.0, -3.0f64..3.0)) {
        let c = CubicDifferential::from_zeros(&zs, C::from_polar(lead.0, lead.1)).unwrap();
        prop_assert!(c.min_zero_gap() > 0.29);
        prop_assert!(c.max_residual() < 1e-10);
    }

    #[test]
    fn sheets_are_distinct_cube_roots(zs in zeros(), r in 0.05f64..3.0, a in 0.0f64..6.28) {
        let c = CubicDifferential::from_zeros(&zs, C::new(1.0, 0.0)).unwrap();
        let z = C::from_polar(r, a) + zs[0];
        prop_assume!(zs.iter().all(|w| (z - w).norm() > 1e-3));
        let v = c.sheet_system().sheet_values(z);
        prop_assume!(v.is_ok());
        let v = v.unwrap();
        let phi = c.eval(z);
        for x in v {
            prop_assert!((x.powu(3) - phi).norm() <= 1e-10 * (1.0 + phi.norm()));
        }
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            prop_assert!((v[i] - v[j]).norm() > 1e-6 * phi.norm().cbrt());
        }
    }

    #[test]
    fn cut_there_and_back_restores_sheet(zs in zeros(), k in 0usize..5, s in 0usize..3, d in 0.05f64..0.5) {
        let c = CubicDifferential::from_zeros(&zs, C::new(1.0, 0.0)).unwrap();
        let sys = c.sheet_system();
        let k = k % zs.len();
        let r = 0.1 * c.min_zero_gap();
        let cut = sys.cut_angles[k];
        let p = c.zeros[k] + C::from_polar(r, cut + d);
        let q = c.zeros[k] + C::from_polar(r, cut - d);
        let back = sys.continue_along(&[p, q, p], s).unwrap();
        prop_assert_eq!(back, s);
        let across = sys.continue_along(&[p, q], s).unwrap();
        prop_assert_ne!(across, s);
    }

    #[test]
    fn gamma13_is_the_sum(m in 2usize..7, i in 1usize..6) {
        let i = 1 + (i - 1) % (m - 1);
        let g = &(&HomologyClass::gamma(m, i, 1, 3) - &HomologyClass::gamma(m, i, 1, 2)) - &HomologyClass::gamma(m, i, 2, 3);
        prop_assert!(g.is_zero());
        prop_assert!((&HomologyClass::gamma(m, i, 2, 1) + &HomologyClass::gamma(m, i, 1, 2)).is_zero());
    }

    #[test]
    fn chamber_collections(st in chamber()) {
        let m = st.m;
        let col = st.collection().unwrap();
        let n = m + 3;
        prop_assert_eq!(col.trees.len(), 3 * m + 1);
        prop_assert_eq!(col.mutable_part().len(), 2 * m - 2);
        let frozen: BTreeSet<AbelTree> = col.frozen().into_iter().collect();
        prop_assert_eq!(frozen, frozen_fan(n).into_iter().collect::<BTreeSet<_>>());
        let distinct: BTreeSet<&AbelTree> = col.trees.iter().collect();
        prop_assert_eq!(distinct.len(), col.trees.len());
        for t in &col.trees {
            if let AbelTree::Tripod(idx) = t {
                prop_assert!(idx.iter().all(|&p| (1..=n).contains(&p)));
                prop_assert!(idx[0] < idx[1] && idx[0] < idx[2] && idx[1] != idx[2]);
            }
            prop_assert!(bipartify(t).is_proper());
        }
        for i in 1..m {
            prop_assert_eq!(trees::pair_state(&col, i).unwrap(), st.states[i - 1].rem_euclid(2 * n as i64));
        }
    }

    #[test]
    fn quivers_are_well_formed_and_mutation_is_involutive(st in chamber(), pick in 0usize..64) {
        let q = build_quiver(&st.collection().unwrap()).unwrap();
        prop_assert!(q.is_well_formed());
        prop_assert!(q.unbalanced_vertices().is_empty());
        let mutable = q.mutable_indices();
        let k = mutable[pick % mutable.len()];
        let mu = q.mutate(k).unwrap();
        prop_assert!(mu.is_well_formed());
        prop_assert_eq!(&mu.frozen, &q.frozen);
        prop_assert_eq!(mu.mutate(k).unwrap().arrow_multiset(), q.arrow_multiset());
    }

    #[test]
    fn coordinates_are_balanced_and_invariant(st in chamber(), seed in any::<u64>()) {
        let col = st.collection().unwrap();
        let q = build_quiver(&col).unwrap();
        let n = st.m + 3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let asg = VectorAssignment::random(n, &mut rng);
        let g = random_sl3(&mut rng);
        let moved = asg.transform(&g).rescale(1 + seed as usize % n, C::new(0.7, -1.3));
        for k in q.mutable_indices() {
            let e = invariants::x_expr(&q, k).unwrap();
            prop_assert!(e.is_balanced());
            let (a, b) = (value(e.eval(&asg).unwrap()), value(e.eval(&moved).unwrap()));
            prop_assert!(rel_residual(&a, &b) < 1e-9, "{} vs {}", a, b);
        }
        let chart = Chart::new(&col).unwrap();
        for (_, cls) in invariants::x_classes(&col).unwrap() {
            let (a, b) = (value(chart.x_value(&cls, &asg).unwrap()), value(chart.x_value(&cls, &moved).unwrap()));
            prop_assert!(rel_residual(&a, &b) < 1e-9);
        }
    }
}
