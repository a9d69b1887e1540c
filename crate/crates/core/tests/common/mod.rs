#![allow(dead_code)]

use voxseg_core::filters::gaussian_smooth_voxels;
use voxseg_core::{FeatureTable, LabelImage, Volume};

/// Sum of solid balls `(center, radius, intensity)` in voxel units, blurred
/// by `blur` voxels.
pub fn balls(dims: [usize; 3], spacing: [f64; 3], list: &[([f64; 3], f64, f64)], blur: f64) -> Volume {
    let img = Volume::from_fn(dims, spacing, |x, y, z| {
        let mut v: f64 = 0.0;
        for (c, r, a) in list {
            let d2 = (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2) + (z as f64 - c[2]).powi(2);
            if d2 <= r * r {
                v = v.max(*a);
            }
        }
        v
    })
    .unwrap();
    if blur > 0.0 {
        gaussian_smooth_voxels(&img, [blur; 3]).unwrap()
    } else {
        img
    }
}

/// Label image of solid balls, one label per ball in list order.
pub fn ball_labels(dims: [usize; 3], spacing: [f64; 3], list: &[([f64; 3], f64)]) -> LabelImage {
    LabelImage::from_fn(dims, spacing, |x, y, z| {
        for (k, (c, r)) in list.iter().enumerate() {
            let d2 = (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2) + (z as f64 - c[2]).powi(2);
            if d2 <= r * r {
                return k as u32 + 1;
            }
        }
        0
    })
    .unwrap()
}

/// Seed table in voxel coordinates with physical scale `sigma`.
pub fn seed_table(points: &[([f64; 3], f64)]) -> FeatureTable {
    let mut t = FeatureTable::new(1, &["x", "y", "z", "sigma", "fsmd_1"]);
    for (k, (p, s)) in points.iter().enumerate() {
        t.push_row(k as u64 + 1, &[p[0], p[1], p[2], *s, 1.0]).unwrap();
    }
    t
}
