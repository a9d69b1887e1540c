use proptest::prelude::*;
use voxseg_core::fuzzy::*;
use voxseg_core::FeatureTable;

fn scored(op: u32, fsmd: &[f64]) -> FeatureTable {
    let mut t = FeatureTable::new(op, &["fsmd_1"]);
    for (k, f) in fsmd.iter().enumerate() {
        t.push_row(k as u64 + 1, &[*f]).unwrap();
    }
    t
}

/// Predecessor rows 1..=n, row k feeding successor k.
fn predecessor(n: usize) -> FeatureTable {
    let mut t = FeatureTable::new(1, &["x", "successor"]);
    for k in 1..=n {
        t.push_row(k as u64, &[k as f64 * 10.0, k as f64]).unwrap();
    }
    t
}

#[test]
fn augment_examples() {
    let mut t = FeatureTable::new(1, &["volume", "a", "b"]);
    t.push_row(1, &[1000.0, 0.9, 0.6]).unwrap();
    let before = t.clone();
    augment_table(&mut t, &[]).unwrap();
    assert_eq!(t, before);

    let vol = FuzzySpec::new("1", Combine::Min).with("volume", Trapezoid::new(449.0, 617.0, 1405.0, 2016.0).unwrap());
    let ramp = || Trapezoid::new(0.0, 1.0, f64::INFINITY, f64::INFINITY).unwrap();
    let two = FuzzySpec::new("2", Combine::Min).with("a", ramp()).with("b", ramp());
    augment_table(&mut t, &[vol, two]).unwrap();
    assert_eq!(t.columns().len(), 5);
    assert_eq!(t.get(0, "fsmd_1"), Some(1.0));
    assert_eq!(t.get(0, "fsmd_2"), Some(0.6));

    let missing = FuzzySpec::new("3", Combine::Min).with("depth", ramp());
    let err = augment_table(&mut t, &[missing]).unwrap_err();
    assert!(err.to_string().contains("depth"));
}

#[test]
fn nan_feature_scores_zero_with_a_diagnostic() {
    let mut t = FeatureTable::new(1, &["v"]);
    t.push_row(4, &[f64::NAN]).unwrap();
    let spec = FuzzySpec::new("1", Combine::Product).with("v", Trapezoid::new(0.0, 1.0, 2.0, 3.0).unwrap());
    let d = augment_table(&mut t, &[spec]).unwrap();
    assert_eq!(t.get(0, "fsmd_1"), Some(0.0));
    assert_eq!(d.nan_inputs, vec![(4, "v".to_string())]);
}

#[test]
fn alpha_examples() {
    let t = scored(2, &[0.0, 0.0, 0.3, 0.99, 1.0]);
    assert_eq!(alpha_filter(&t, &[("1".into(), 0.0)]).unwrap(), t);
    assert_eq!(alpha_filter(&t, &[("1".into(), 1.0)]).unwrap().ids(), &[5]);
    assert_eq!(alpha_filter(&t, &[("1".into(), 0.0001)]).unwrap().ids(), &[3, 4, 5]);
    assert!(alpha_filter(&t, &[("9".into(), 0.1)]).is_err());
}

#[test]
fn propagation_examples() {
    let succ = scored(2, &[0.05, 0.5, 0.95, 1.0]);
    let pred = predecessor(4);
    let none = propagate(&succ, &pred, "successor", &[("1".into(), 0.1, 0.1)]).unwrap();
    assert!(none.carried.is_empty());
    assert_eq!(none.omega_len(), succ.len());
    let all = propagate(&succ, &pred, "successor", &[("1".into(), 0.1, 1.0)]).unwrap();
    assert_eq!(all.carried.ids(), &[2, 3]);
    let mid = propagate(&succ, &pred, "successor", &[("1".into(), 0.1, 0.9)]).unwrap();
    assert_eq!(mid.carried.ids(), &[2]);
    assert!(propagate(&succ, &pred, "missing", &[("1".into(), 0.1, 0.9)]).is_err());
    assert!(propagate(&scored(1, &[0.5]), &pred, "successor", &[("1".into(), 0.1, 0.9)]).is_err());
}

fn sorted_theta() -> impl Strategy<Value = [f64; 4]> {
    proptest::collection::vec(-100.0f64..100.0, 4).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        [v[0], v[1], v[2], v[3]]
    })
}

proptest! {
    #[test]
    fn trapezoid_shape(theta in sorted_theta(), xs in proptest::collection::vec(-150.0f64..150.0, 2..40)) {
        let [a, b, c, d] = theta;
        let t = Trapezoid::new(a, b, c, d).unwrap();
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        for w in xs.windows(2) {
            let (u, v) = (t.eval(w[0]), t.eval(w[1]));
            prop_assert!((0.0..=1.0).contains(&u));
            if w[1] <= b { prop_assert!(v >= u); }
            if w[0] >= c { prop_assert!(v <= u); }
            if w[0] >= b && w[1] <= c { prop_assert_eq!(u, 1.0); prop_assert_eq!(v, 1.0); }
        }
        for &x in &xs {
            if x < a || x > d { prop_assert_eq!(t.eval(x), 0.0); }
        }
    }

    #[test]
    fn standard_partition_sums_to_one(edges in proptest::collection::vec(0.0f64..100.0, 6), x in -10.0f64..110.0) {
        let mut e = edges;
        e.sort_by(f64::total_cmp);
        prop_assume!(e.windows(2).all(|w| w[1] > w[0]));
        let inf = f64::INFINITY;
        let sets = [
            Trapezoid::new(-inf, -inf, e[0], e[1]).unwrap(),
            Trapezoid::new(e[0], e[1], e[2], e[3]).unwrap(),
            Trapezoid::new(e[2], e[3], e[4], e[5]).unwrap(),
            Trapezoid::new(e[4], e[5], inf, inf).unwrap(),
        ];
        let sum: f64 = sets.iter().map(|s| s.eval(x)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9, "sum {sum} at {x}");
    }

    #[test]
    fn min_dominates_product(vals in proptest::collection::vec(0.0f64..=1.0, 0..8)) {
        let m = combine(&vals, Combine::Min).unwrap();
        let p = combine(&vals, Combine::Product).unwrap();
        prop_assert!(m >= p);
        prop_assert!((0.0..=1.0).contains(&m) && (0.0..=1.0).contains(&p));
    }

    #[test]
    fn alpha_filter_is_monotone(f in proptest::collection::vec(0.0f64..=1.0, 0..30), a1 in 0.0f64..1.0, a2 in 0.0f64..1.0) {
        let t = scored(2, &f);
        let (lo, hi) = (a1.min(a2), a1.max(a2));
        let keep_lo = alpha_filter(&t, &[("1".into(), lo)]).unwrap();
        let keep_hi = alpha_filter(&t, &[("1".into(), hi)]).unwrap();
        prop_assert!(keep_hi.len() <= keep_lo.len());
        prop_assert!(keep_hi.ids().iter().all(|id| keep_lo.ids().contains(id)));
        prop_assert_eq!(alpha_filter(&t, &[("1".into(), 0.0)]).unwrap().len(), t.len());
    }

    #[test]
    fn omega_ledger(f in proptest::collection::vec(0.0f64..=1.0, 1..30), alpha in 0.0f64..0.5, width in 0.0f64..0.5) {
        let succ = scored(2, &f);
        let pred = predecessor(f.len());
        let beta = alpha + width;
        let state = propagate(&succ, &pred, "successor", &[("1".into(), alpha, beta)]).unwrap();
        prop_assert_eq!(state.omega_len(), state.filtered.len() + state.carried.len());
        prop_assert_eq!(state.omega_keys().len(), state.omega_len());
        let expected: Vec<u64> = f.iter().enumerate().filter(|(_, &v)| v >= alpha && v < beta).map(|(k, _)| k as u64 + 1).collect();
        prop_assert_eq!(state.carried.ids(), expected.as_slice());
    }

}
