use proptest::prelude::*;
use voxseg_sim::physics::{norm, repulsive_magnitude};
use voxseg_sim::*;

fn mid_shell() -> Shell {
    Shell { center: [0.0; 3], r_inner: 10.0, r_outer: 20.0, steepness: 1.0 }
}

fn obj(id: u64, x: [f64; 3], r: f64) -> SimObject {
    SimObject { id, parent_id: None, x, r, phase: 0.0, cycle_length: 1000, appearance_seed: id }
}

fn params(shell: Shell) -> SimParams {
    SimParams { shell, n_initial: 0, ..SimParams::default() }
}

#[test]
fn adhesion_examples() {
    assert_eq!(adhesive_disp([0.0, 0.0, 3.0], 3.0), [0.0; 3]);
    assert_eq!(adhesive_disp([0.0; 3], 3.0), [0.0; 3]);
    let d = [0.6, 0.0, 0.8];
    let v = adhesive_disp([d[0] * 1.5, 0.0, d[2] * 1.5], 3.0);
    assert!((norm(v) - 0.25).abs() < 1e-15);
    assert!((v[0] / norm(v) - d[0]).abs() < 1e-15 && (v[2] / norm(v) - d[2]).abs() < 1e-15);
}

#[test]
fn repulsion_examples() {
    let tie = [1.0, 0.0, 0.0];
    assert_eq!(repulsive_disp([0.0, 2.0, 0.0], 1.0, 2.0, tie), [0.0; 3]);
    let v = repulsive_disp([0.0, 1.5, 0.0], 1.0, 2.0, tie);
    assert!((v[1] + 0.0625).abs() < 1e-15 && v[0] == 0.0 && v[2] == 0.0);
    // Coincident centres: full magnitude 1 along the tie direction, pushed away.
    assert_eq!(repulsive_disp([0.0; 3], 1.0, 2.0, tie), [-1.0, 0.0, 0.0]);
}

#[test]
fn boundary_examples() {
    let s = mid_shell();
    let tie = [0.0, 1.0, 0.0];
    assert_eq!(boundary_disp([15.0, 0.0, 0.0], &s, tie), [0.0; 3]);
    let inner = boundary_disp([0.0, 0.0, 4.0], &s, tie);
    assert!(inner[2] > 0.0 && inner[0] == 0.0 && inner[1] == 0.0);
    assert!((inner[2] - (1.0 - (-6.0f64).exp())).abs() < 1e-15);
    let outer = boundary_disp([0.0, 23.0, 0.0], &s, tie);
    assert!(outer[1] < 0.0 && outer[0] == 0.0 && outer[2] == 0.0);
    assert!((outer[1] + (1.0 - (-3.0f64).exp())).abs() < 1e-15);
    let centre = boundary_disp([0.0; 3], &s, tie);
    assert!((centre[1] - (1.0 - (-10.0f64).exp())).abs() < 1e-15);
}

#[test]
fn lone_object_inside_shell_stays_put() {
    let p = params(mid_shell());
    let st = SimState { objects: vec![obj(1, [0.0, 15.0, 0.0], 2.0)], next_id: 2 };
    let next = step_simulation(&st, &p, 1);
    assert_eq!(next.objects[0].x, [0.0, 15.0, 0.0]);
}

#[test]
fn pair_at_nucleus_radius_moves_by_net_weighted_terms() {
    // R_N = 4, R_A = R_M = 8: both terms equal (1 - 1/2)^2 = 0.25 at distance R_N.
    let expected = (0.52f64 * 0.25 - 1.0 * 0.25).abs();
    let p = params(mid_shell());
    let a = obj(1, [0.0, 14.0, 0.0], 2.0);
    let b = obj(2, [0.0, 14.0, 4.0], 2.0);
    let st = SimState { objects: vec![a.clone(), b.clone()], next_id: 3 };
    let next = step_simulation(&st, &p, 1);
    let da = [0, 1, 2].map(|k| next.objects[0].x[k] - a.x[k]);
    let db = [0, 1, 2].map(|k| next.objects[1].x[k] - b.x[k]);
    assert!((norm(da) - expected).abs() < 1e-12);
    assert!((norm(db) - expected).abs() < 1e-12);
    assert!(da[2] < 0.0 && db[2] > 0.0);
}

#[test]
fn division_replaces_parent_with_two_fresh_children() {
    let p = params(mid_shell());
    let mut o = obj(7, [0.0, 15.0, 0.0], 2.0);
    o.cycle_length = 10;
    o.phase = 1.0 - 1e-3;
    let st = SimState { objects: vec![o], next_id: 8 };
    let next = step_simulation(&st, &p, 3);
    let ids: Vec<u64> = next.objects.iter().map(|o| o.id).collect();
    assert_eq!(ids, vec![8, 9]);
    assert_eq!(next.next_id, 10);
    for c in &next.objects {
        assert_eq!(c.parent_id, Some(7));
        assert_eq!(c.r, 2.0);
        assert_eq!(c.phase, 0.0);
    }
    let gap = norm([0, 1, 2].map(|k| next.objects[0].x[k] - next.objects[1].x[k]));
    assert!((gap - 2.0).abs() < 1e-12, "children sit 0.5 r either side of the parent");
}

#[test]
fn population_cap_suppresses_division() {
    let p = SimParams { n_max: 1, ..params(mid_shell()) };
    let mut o = obj(1, [0.0, 15.0, 0.0], 2.0);
    o.cycle_length = 4;
    o.phase = 0.9;
    let next = step_simulation(&SimState { objects: vec![o], next_id: 2 }, &p, 1);
    assert_eq!(next.objects.len(), 1);
    assert_eq!(next.objects[0].id, 1);
    assert!((next.objects[0].phase - 0.15).abs() < 1e-12);
}

#[test]
fn long_run_stays_near_shell_and_is_reproducible() {
    let p = SimParams { frames: 200, ..SimParams::default() };
    let frames = simulate(&p).unwrap();
    assert_eq!(frames.len(), 200);
    let r_max = frames.iter().flat_map(|f| f.objects.iter().map(|o| o.r)).fold(0.0, f64::max);
    let (lo, hi) = (p.shell.r_inner - 2.0 * r_max, p.shell.r_outer + 2.0 * r_max);
    for f in &frames {
        for o in &f.objects {
            let rho = norm([0, 1, 2].map(|k| o.x[k] - p.shell.center[k]));
            assert!(rho >= lo && rho <= hi, "object {} at {rho} outside [{lo}, {hi}]", o.id);
        }
    }
    assert!(frames.last().unwrap().objects.len() > 50, "some divisions happen over 200 frames");
    assert_eq!(simulate(&p).unwrap(), frames);
}

#[test]
fn lineage_is_a_forest_with_children_after_parents() {
    let p = SimParams { frames: 120, n_initial: 12, cycle_range: (20, 30), ..SimParams::default() };
    let frames = simulate(&p).unwrap();
    let mut first = std::collections::BTreeMap::new();
    let mut last = std::collections::BTreeMap::new();
    let mut parent = std::collections::BTreeMap::new();
    for (t, f) in frames.iter().enumerate() {
        let mut ids: Vec<u64> = f.objects.iter().map(|o| o.id).collect();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n, "ids unique within a frame");
        for o in &f.objects {
            first.entry(o.id).or_insert(t);
            last.insert(o.id, t);
            if let Some(q) = o.parent_id {
                parent.insert(o.id, q);
            }
        }
    }
    assert!(!parent.is_empty());
    for (child, par) in &parent {
        assert_eq!(first[child], last[par] + 1);
        assert!(par < child, "parents are older, so the lineage has no cycles");
    }
}

proptest! {
    #[test]
    fn repulsion_is_continuous_at_nucleus_radius(r_n in 0.1f64..50.0, k in 1.01f64..4.0) {
        let r_m = r_n * k;
        let inner_branch = ((1.0 - r_n / r_m).powi(2) - 1.0) * (r_n / r_n) + 1.0;
        let outer_branch = (1.0 - r_n / r_m).powi(2);
        prop_assert!((inner_branch - outer_branch).abs() < 1e-12);
        prop_assert!((repulsive_magnitude(r_n, r_n, r_m) - outer_branch).abs() < 1e-12);
        let above = repulsive_magnitude(r_n * (1.0 + 1e-12), r_n, r_m);
        prop_assert!((above - outer_branch).abs() < 1e-9);
    }

    #[test]
    fn pair_terms_are_antisymmetric(
        d in proptest::array::uniform3(-20.0f64..20.0),
        r in 1.0f64..6.0,
        tie in proptest::array::uniform3(-1.0f64..1.0),
    ) {
        let neg = d.map(|v| -v);
        let r_n = 2.0 * r;
        let (a, b) = (repulsive_disp(d, r_n, 2.0 * r_n, tie), repulsive_disp(neg, r_n, 2.0 * r_n, tie.map(|v| -v)));
        let (c, e) = (adhesive_disp(d, 2.0 * r_n), adhesive_disp(neg, 2.0 * r_n));
        for k in 0..3 {
            prop_assert_eq!(a[k], -b[k]);
            prop_assert_eq!(c[k], -e[k]);
        }
    }

    #[test]
    fn coincident_pair_separates_symmetrically(seed in 0u64..1000, frame in 0u32..50) {
        let p = SimParams { seed, ..params(mid_shell()) };
        let objects = vec![obj(3, [0.0, 15.0, 0.0], 2.0), obj(5, [0.0, 15.0, 0.0], 2.0)];
        let a = total_displacement(&objects, 0, &p, u64::from(frame));
        let b = total_displacement(&objects, 1, &p, u64::from(frame));
        for k in 0..3 {
            prop_assert_eq!(a[k], -b[k]);
        }
        prop_assert!((norm(a) - 1.0).abs() < 1e-12);
    }
}
