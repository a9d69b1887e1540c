mod common;

use std::collections::VecDeque;

use proptest::prelude::*;
use voxseg_core::filters::*;
use voxseg_core::{Connectivity, Grid, LabelImage, Volume};

fn grid_strategy(lo: usize, hi: usize) -> impl Strategy<Value = ([usize; 3], Vec<bool>)> {
    (lo..=hi, lo..=hi, lo..=hi).prop_flat_map(|(x, y, z)| {
        (Just([x, y, z]), proptest::collection::vec(proptest::bool::weighted(0.6), x * y * z))
    })
}

fn brute_edm(g: &Grid, fg: &[bool], bordered: bool) -> Vec<f64> {
    let s = g.spacing;
    (0..g.len())
        .map(|i| {
            if !fg[i] {
                return 0.0;
            }
            let c = g.coords(i);
            let mut best = f64::INFINITY;
            for j in (0..g.len()).filter(|&j| !fg[j]) {
                let d = g.coords(j);
                let e: f64 = (0..3).map(|a| ((c[a] as f64 - d[a] as f64) * s[a]).powi(2)).sum();
                best = best.min(e.sqrt());
            }
            if bordered {
                for a in 0..3 {
                    best = best.min((c[a] + 1) as f64 * s[a]).min((g.dims[a] - c[a]) as f64 * s[a]);
                }
            }
            best
        })
        .collect()
}

fn brute_component_count(g: &Grid, fg: &[bool], conn: Connectivity) -> usize {
    let mut seen = vec![false; g.len()];
    let mut count = 0;
    for start in 0..g.len() {
        if !fg[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(i) = q.pop_front() {
            let c = g.coords(i);
            for j in 0..g.len() {
                if !fg[j] || seen[j] {
                    continue;
                }
                let d = g.coords(j);
                let diff: Vec<usize> = (0..3).map(|a| c[a].abs_diff(d[a])).collect();
                let adjacent = match conn {
                    Connectivity::Six => diff.iter().sum::<usize>() == 1,
                    Connectivity::TwentySix => diff.iter().all(|&x| x <= 1),
                };
                if adjacent {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
    }
    count
}

fn exhaustive_otsu(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = (hi - lo) / 256.0;
    let bin = |v: f64| (((v - lo) / w).floor() as usize).min(255);
    let centre = |b: usize| lo + (b as f64 + 0.5) * w;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for k in 1..256 {
        let mut below = Vec::new();
        let mut above = Vec::new();
        for &v in values {
            let b = bin(v);
            if b < k { below.push(centre(b)) } else { above.push(centre(b)) }
        }
        if below.is_empty() || above.is_empty() {
            continue;
        }
        let m0 = below.iter().sum::<f64>() / below.len() as f64;
        let m1 = above.iter().sum::<f64>() / above.len() as f64;
        let var = below.len() as f64 * above.len() as f64 * (m0 - m1).powi(2);
        if var > best.0 * (1.0 + 1e-12) {
            best = (var, k);
        }
    }
    lo + best.1 as f64 * w
}

#[test]
fn constant_survives_smoothing() {
    let img = Volume::filled([9, 9, 9], [1.0, 1.0, 2.0], 0.37).unwrap();
    let s = gaussian_smooth(&img, 2.0).unwrap();
    assert!(s.data().iter().all(|v| (v - 0.37).abs() < 1e-12));
}

#[test]
fn single_scale_projection_is_that_scale() {
    let img = common::balls([21, 21, 21], [1.0; 3], &[([10.0; 3], 4.0, 1.0)], 0.0);
    let m = log_scale_space_max(&img, 3.0, 3.0, 1.0).unwrap();
    let l = normalized_log(&img, 3.0).unwrap();
    assert_eq!(m.response.data(), l.data());
    assert!(m.scale.data().iter().all(|&s| s == 3.0));
}

#[test]
fn window_mean_matches_brute_force_on_5x5() {
    let img = Volume::from_fn([5, 5, 1], [1.0; 3], |x, y, _| ((x * 7 + y * 3) % 11) as f64).unwrap();
    let m = window_mean(&img, [1, 1, 0]).unwrap();
    for y in 0..5usize {
        for x in 0..5usize {
            let (mut s, mut n) = (0.0, 0.0);
            for yy in y.saturating_sub(1)..=(y + 1).min(4) {
                for xx in x.saturating_sub(1)..=(x + 1).min(4) {
                    s += img.get(xx, yy, 0);
                    n += 1.0;
                }
            }
            assert_eq!(m.get(x, y, 0), s / n);
        }
    }
    assert_eq!(window_mean(&img, [0; 3]).unwrap().data(), img.data());
}

#[test]
fn single_background_voxel_gives_point_distances() {
    let g = Grid::new([5, 5, 5], [1.0; 3]).unwrap();
    let fg: Vec<bool> = (0..g.len()).map(|i| i != g.index(2, 2, 2)).collect();
    let lab = LabelImage::from_grid(g, fg.iter().map(|&b| b as u32).collect()).unwrap();
    let e: Volume = euclidean_distance_map(&lab, EdmBorder::Open).unwrap();
    let oracle = brute_edm(&g, &fg, false);
    for (a, b) in e.data().iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn edm_scales_with_axial_spacing() {
    let lab = LabelImage::from_fn([3, 3, 3], [1.0, 1.0, 5.0], |x, y, z| !(x == 1 && y == 1 && z == 0) as u32).unwrap();
    let e: Volume = euclidean_distance_map(&lab, EdmBorder::Open).unwrap();
    assert_eq!(e.get(1, 1, 1), 5.0);
    let none = LabelImage::zeros([4, 4, 4], [1.0; 3]).unwrap();
    let e: Volume = euclidean_distance_map(&none, EdmBorder::Background).unwrap();
    assert!(e.data().iter().all(|&v| v == 0.0));
}

#[test]
fn two_bumps_keep_two_h_maxima() {
    let profile = |x: f64| {
        let b = |c: f64| (-(x - c).powi(2) / (2.0 * 2.0f64.powi(2))).exp();
        
        b(6.0) + b(16.0)
    };
    let raw: Vec<f64> = (0..23).map(|x| profile(x as f64)).collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    let valley = raw[11];
    let img = Volume::from_fn([23, 1, 1], [1.0; 3], |x, _, _| {
        0.4 + (raw[x] - valley) / (peak - valley) * 0.6
    })
    .unwrap();
    assert!((img.get(11, 0, 0) - 0.4).abs() < 1e-12);
    assert_eq!(h_maxima_extract(&img, 0.3).unwrap().max_label(), 2);
    let bump = Volume::from_fn([23, 1, 1], [1.0; 3], |x, _, _| 0.2 * (-(x as f64 - 11.0).powi(2) / 8.0).exp()).unwrap();
    assert_eq!(h_maxima_extract(&bump, 0.3).unwrap().max_label(), 0);
}

#[test]
fn eight_value_histogram_matches_exhaustive_search() {
    let levels = [0.05, 0.12, 0.2, 0.33, 0.58, 0.7, 0.81, 0.95];
    let counts = [40, 90, 60, 10, 5, 70, 120, 30];
    let values: Vec<f64> = levels.iter().zip(counts).flat_map(|(&v, n)| std::iter::repeat(v).take(n)).collect();
    let t = otsu_threshold(&values).unwrap().threshold;
    assert!((t - exhaustive_otsu(&values)).abs() < 1e-12);
    assert!(t > 0.33 && t <= 0.58);
}

#[test]
fn corner_touching_cubes() {
    let lab = LabelImage::from_fn([6, 6, 6], [1.0; 3], |x, y, z| {
        ((x < 3 && y < 3 && z < 3) || (x >= 3 && y >= 3 && z >= 3)) as u32
    })
    .unwrap();
    assert_eq!(connected_components(&lab, Connectivity::TwentySix).max_label(), 1);
    assert_eq!(connected_components(&lab, Connectivity::Six).max_label(), 2);
    let empty = LabelImage::zeros([4, 4, 4], [1.0; 3]).unwrap();
    assert_eq!(connected_components(&empty, Connectivity::Six).max_label(), 0);
}

#[test]
fn extrema_examples() {
    let mut img = Volume::zeros([7, 7, 7], [1.0; 3]).unwrap();
    img.set(3, 2, 4, 1.0);
    let p = local_extrema(&img, true, 0.5);
    assert_eq!(p.len(), 1);
    assert_eq!(p[0].pos, [3, 2, 4]);
    let c = Volume::filled([5, 5, 5], [1.0; 3], 0.3).unwrap();
    assert!(local_extrema(&c, false, 0.4).is_empty());
}

#[test]
fn watershed_splits_overlapping_spheres_at_the_midplane() {
    let img = common::balls([40, 24, 24], [1.0; 3], &[([13.0, 12.0, 12.0], 7.0, 1.0), ([25.0, 12.0, 12.0], 7.0, 1.0)], 1.0);
    let mask = LabelImage::from_predicate(&img, |v| v > 0.3);
    let mut markers = LabelImage::zeros(img.dims(), img.spacing()).unwrap();
    markers.set(13, 12, 12, 1);
    markers.set(25, 12, 12, 2);
    let ws = seeded_watershed(&img, &markers, Some(&mask)).unwrap();
    assert_eq!(ws.max_label(), 2);
    let g = *ws.grid();
    for (i, &l) in ws.data().iter().enumerate() {
        let x = g.coords(i)[0] as f64;
        match l {
            1 => assert!(x <= 19.0 + 1.0, "label 1 at x={x}"),
            2 => assert!(x >= 19.0 - 1.0, "label 2 at x={x}"),
            _ => {}
        }
    }
    let one = common::balls([20, 20, 20], [1.0; 3], &[([10.0; 3], 5.0, 1.0)], 0.0);
    let blob = LabelImage::from_predicate(&one, |v| v > 0.5);
    let mut m = LabelImage::zeros(one.dims(), one.spacing()).unwrap();
    m.set(10, 10, 10, 7);
    let ws = seeded_watershed(&one, &m, Some(&blob)).unwrap();
    assert_eq!(ws.data().iter().filter(|&&l| l == 7).count(), blob.foreground_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn edm_matches_brute_force((dims, fg) in grid_strategy(3, 9), sx in 0.5f64..2.0, sz in 0.5f64..4.0) {
        let g = Grid::new(dims, [sx, 1.0, sz]).unwrap();
        let lab = LabelImage::from_grid(g, fg.iter().map(|&b| b as u32).collect()).unwrap();
        let e: Volume = euclidean_distance_map(&lab, EdmBorder::Background).unwrap();
        let oracle = brute_edm(&g, &fg, true);
        for (a, b) in e.data().iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn component_count_matches_flood_fill((dims, fg) in grid_strategy(2, 7)) {
        let g = Grid::new(dims, [1.0; 3]).unwrap();
        let lab = LabelImage::from_grid(g, fg.iter().map(|&b| b as u32).collect()).unwrap();
        for conn in [Connectivity::Six, Connectivity::TwentySix] {
            prop_assert_eq!(connected_components(&lab, conn).max_label() as usize, brute_component_count(&g, &fg, conn));
        }
    }

    #[test]
    fn window_mean_matches_brute_force(
        (dims, vals) in (2usize..7, 2usize..7, 1usize..5).prop_flat_map(|(x, y, z)| (Just([x, y, z]), proptest::collection::vec(0u8..20, x * y * z))),
        r in (0usize..3, 0usize..3, 0usize..2),
    ) {
        let img = Volume::new(dims, [1.0; 3], vals.iter().map(|&v| v as f64).collect()).unwrap();
        let radius = [r.0, r.1, r.2];
        let m = window_mean(&img, radius).unwrap();
        let g = *img.grid();
        for i in 0..g.len() {
            let c = g.coords(i);
            let (mut s, mut n) = (0.0, 0.0);
            for j in 0..g.len() {
                let d = g.coords(j);
                if (0..3).all(|a| c[a].abs_diff(d[a]) <= radius[a]) {
                    s += img.data()[j];
                    n += 1.0;
                }
            }
            prop_assert!((m.data()[i] - s / n).abs() < 1e-12);
        }
    }

    #[test]
    fn otsu_matches_exhaustive_search(vals in proptest::collection::vec(0.0f64..1.0, 2..300)) {
        prop_assume!(vals.iter().any(|&v| v != vals[0]));
        let t = otsu_threshold(&vals).unwrap().threshold;
        prop_assert!((t - exhaustive_otsu(&vals)).abs() < 1e-12);
    }

    #[test]
    fn strict_extrema_are_non_strict_extrema(vals in proptest::collection::vec(0u8..4, 125)) {
        let img = Volume::new([5, 5, 5], [1.0; 3], vals.iter().map(|&v| v as f64).collect()).unwrap();
        let strict = local_extrema(&img, true, 0.0);
        let loose = local_extrema(&img, false, 0.0);
        for p in &strict {
            prop_assert!(loose.iter().any(|q| q.pos == p.pos));
        }
    }

    #[test]
    fn smoothing_preserves_interior_mass(sigma in 0.3f64..2.5, v in 0.1f64..1.0) {
        let mut img = Volume::zeros([21, 21, 21], [1.0; 3]).unwrap();
        img.set(10, 10, 10, v);
        let s = gaussian_smooth(&img, sigma).unwrap();
        let mass: f64 = s.data().iter().sum();
        prop_assert!((mass - v).abs() <= 1e-6 * v);
    }

    #[test]
    fn scale_projection_dominates_and_ignores_order(perm in Just(vec![2.0, 3.0, 4.0]).prop_shuffle()) {
        let img = common::balls([17, 17, 17], [1.0; 3], &[([8.0; 3], 3.5, 1.0)], 0.0);
        let m = log_scale_space_max_scales(&img, &perm).unwrap();
        let sorted = log_scale_space_max_scales(&img, &[2.0, 3.0, 4.0]).unwrap();
        prop_assert_eq!(m.response.data(), sorted.response.data());
        prop_assert_eq!(m.scale.data(), sorted.scale.data());
        for &s in &perm {
            let l = normalized_log(&img, s).unwrap();
            prop_assert!(m.response.data().iter().zip(l.data()).all(|(a, b)| a >= b));
        }
    }
}
