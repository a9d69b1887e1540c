mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxseg_core::filters::gaussian_smooth_voxels;
use voxseg_core::metrics::seed_eval;
use voxseg_core::seeds::*;
use voxseg_core::{FeatureTable, Volume};

/// Naive agglomeration: merge the closest pair under the Ward criterion
/// `sqrt(2 na nb / (na + nb)) * |mean_a - mean_b|` until it exceeds `cutoff`.
fn ward_oracle(points: &[[f64; 3]], cutoff: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let mean = |c: &[usize]| {
        let mut m = [0.0; 3];
        for &i in c {
            for a in 0..3 {
                m[a] += points[i][a] / c.len() as f64;
            }
        }
        m
    };
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let (a, b) = (mean(&clusters[i]), mean(&clusters[j]));
                let (na, nb) = (clusters[i].len() as f64, clusters[j].len() as f64);
                let d = (2.0 * na * nb / (na + nb)).sqrt() * (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();
                if best.map_or(true, |b| d < b.0) {
                    best = Some((d, i, j));
                }
            }
        }
        match best {
            Some((d, i, j)) if d <= cutoff => {
                let moved = clusters.remove(j);
                clusters[i].extend(moved);
            }
            _ => break,
        }
    }
    for c in clusters.iter_mut() {
        c.sort_unstable();
    }
    clusters.sort();
    clusters
}

fn seed_points(t: &FeatureTable) -> Vec<[f64; 3]> {
    seed_positions(t).unwrap()
}

#[test]
fn separated_spheres_give_one_seed_each() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut centres: Vec<[f64; 3]> = Vec::new();
    while centres.len() < 20 {
        let c = [rng.gen_range(8.0..72.0f64).round(), rng.gen_range(8.0..72.0f64).round(), rng.gen_range(7.0..23.0f64).round()];
        if centres.iter().all(|o| (0..3).map(|a| (o[a] - c[a]).powi(2)).sum::<f64>().sqrt() > 16.0) {
            centres.push(c);
        }
    }
    let list: Vec<_> = centres.iter().map(|&c| (c, 5.0, 0.6)).collect();
    let img = common::balls([80, 80, 30], [1.0; 3], &list, 1.0);
    let truth = common::ball_labels([80, 80, 30], [1.0; 3], &list.iter().map(|&(c, r, _)| (c, r)).collect::<Vec<_>>());
    let p = LogSeedParams { sigma_min: 3.0, sigma_max: 5.0, strict: true, ..Default::default() };
    let seeds = detect_log_seeds(&img, &p).unwrap();
    let e = seed_eval(&seed_points(&seeds), &truth);
    assert_eq!((e.tp, e.fp, e.fn_), (20, 0, 0));
    let sigma = seeds.column("sigma").unwrap();
    let radius = seeds.column("radius").unwrap();
    for (s, r) in sigma.iter().zip(&radius) {
        assert_eq!(*r, std::f64::consts::SQRT_2 * s);
    }
}

#[test]
fn two_voxel_plateau_needs_non_strict_maxima() {
    let mut img = Volume::zeros([15, 15, 15], [1.0; 3]).unwrap();
    img.set(7, 7, 7, 1.0);
    img.set(8, 7, 7, 1.0);
    let base = LogSeedParams { sigma_min: 1.0, sigma_max: 2.0, ..Default::default() };
    let strict = detect_log_seeds(&img, &LogSeedParams { strict: true, ..base.clone() }).unwrap();
    let loose = detect_log_seeds(&img, &LogSeedParams { strict: false, ..base.clone() }).unwrap();
    assert_eq!(strict.len(), 0);
    assert_eq!(seed_points(&loose), vec![[7.0, 7.0, 7.0], [8.0, 7.0, 7.0]]);
    let none = detect_log_seeds(&img, &LogSeedParams { t_wmi: 1.5, ..base }).unwrap();
    assert!(none.is_empty());
}

#[test]
fn fusion_examples() {
    let mut t = FeatureTable::new(1, &["x", "y", "z", "fsmd_1"]);
    t.push_row(1, &[10.0, 10.0, 10.0, 1.0]).unwrap();
    t.push_row(2, &[11.0, 10.0, 10.0, 0.0]).unwrap();
    let f = fuse_seeds(&t, 5.0, [1.0; 3]).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(f.row(0), &[10.5, 10.0, 10.0, 0.5]);
    let mut far = FeatureTable::new(1, &["x", "y", "z"]);
    far.push_row(1, &[0.0, 0.0, 0.0]).unwrap();
    far.push_row(2, &[20.0, 0.0, 0.0]).unwrap();
    assert_eq!(fuse_seeds(&far, 5.0, [1.0; 3]).unwrap().len(), 2);
    let one = far.select(&[0]);
    assert_eq!(fuse_seeds(&one, 5.0, [1.0; 3]).unwrap().row(0), one.row(0));
    assert!(fuse_seeds(&FeatureTable::new(1, &["x", "y", "z"]), 5.0, [1.0; 3]).unwrap().is_empty());
}

#[test]
fn bridged_spheres_give_two_edm_seeds() {
    let mut img = common::balls([40, 20, 20], [1.0; 3], &[([10.0, 10.0, 10.0], 6.0, 1.0), ([29.0, 10.0, 10.0], 6.0, 1.0)], 0.0);
    for x in 10..30 {
        img.set(x, 10, 10, 1.0);
    }
    let (labels, table) = detect_edm_seeds(&img, &EdmSeedParams::default()).unwrap();
    assert_eq!(table.len(), 2);
    assert_eq!(labels.max_label(), 2);
    let xs = table.column("x").unwrap();
    assert!((xs[0] - 10.0).abs() <= 1.0 && (xs[1] - 29.0).abs() <= 1.0);

    let big = EdmSeedParams { min_volume: 10_000, ..Default::default() };
    assert!(detect_edm_seeds(&img, &big).unwrap().1.is_empty());
    let empty = Volume::zeros([10, 10, 10], [1.0; 3]).unwrap();
    assert!(detect_edm_seeds(&empty, &EdmSeedParams::default()).unwrap().1.is_empty());
}

#[test]
fn default_seed_scoring() {
    let mut t = FeatureTable::new(1, &["wmi", "smi", "zpos"]);
    t.push_row(1, &[0.003, 0.001, 300.0]).unwrap();
    t.push_row(2, &[0.003, 0.001, 150.0]).unwrap();
    t.push_row(3, &[0.001, 0.001, 300.0]).unwrap();
    score_seeds(&mut t, &default_seed_spec()).unwrap();
    assert_eq!(t.column("fsmd_1").unwrap(), vec![1.0, 0.5, 0.0]);
    assert_eq!(t.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ward_matches_naive_agglomeration(
        pts in proptest::collection::vec((0.0f64..30.0, 0.0f64..30.0, 0.0f64..10.0), 1..20),
        cutoff in 0.5f64..15.0,
    ) {
        let points: Vec<[f64; 3]> = pts.iter().map(|&(x, y, z)| [x, y, z]).collect();
        let mut got = ward_clusters(&points, cutoff);
        for c in got.iter_mut() {
            c.sort_unstable();
        }
        got.sort();
        prop_assert_eq!(got, ward_oracle(&points, cutoff));
    }

    #[test]
    fn fusion_shrinks_and_stays_in_cluster_bounds(
        pts in proptest::collection::vec((0.0f64..20.0, 0.0f64..20.0, 0.0f64..8.0), 1..15),
        cutoff in 0.5f64..10.0,
    ) {
        let mut t = FeatureTable::new(1, &["x", "y", "z"]);
        for (k, &(x, y, z)) in pts.iter().enumerate() {
            t.push_row(k as u64 + 1, &[x, y, z]).unwrap();
        }
        let spacing = [1.0, 1.0, 2.0];
        let f = fuse_seeds(&t, cutoff, spacing).unwrap();
        prop_assert!(f.len() <= t.len());
        let pos = seed_points(&t);
        let phys: Vec<[f64; 3]> = pos.iter().map(|p| [p[0], p[1], p[2] * 2.0]).collect();
        let clusters = ward_clusters(&phys, cutoff);
        prop_assert_eq!(clusters.len(), f.len());
        for (c, q) in clusters.iter().zip(seed_points(&f)) {
            for a in 0..3 {
                let lo = c.iter().map(|&i| pos[i][a]).fold(f64::INFINITY, f64::min);
                let hi = c.iter().map(|&i| pos[i][a]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(q[a] >= lo - 1e-9 && q[a] <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn strict_seeds_are_non_strict_seeds(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Volume::from_fn([12, 12, 8], [1.0; 3], |_, _, _| rng.gen_range(0.0..1.0)).unwrap();
        let img = gaussian_smooth_voxels(&noise, [1.0; 3]).unwrap();
        let base = LogSeedParams { sigma_min: 1.0, sigma_max: 2.0, t_wmi: 0.0, ..Default::default() };
        let s = seed_points(&detect_log_seeds(&img, &LogSeedParams { strict: true, ..base.clone() }).unwrap());
        let n = seed_points(&detect_log_seeds(&img, &LogSeedParams { strict: false, ..base }).unwrap());
        for p in &s {
            prop_assert!(n.contains(p));
        }
    }
}
