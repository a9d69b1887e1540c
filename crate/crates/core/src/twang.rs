//! Seed-based segmentation: each seed's neighbourhood is reweighted by a
//! gradient orientation field and a radial plateau kernel, then thresholded
//! locally with Otsu's method.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::filters::{component_containing, gaussian_smooth, otsu_threshold};
use crate::image::{Connectivity, Grid, LabelImage, VolumetricImage};
use crate::scalar::Real;
use crate::table::FeatureTable;

/// Columns of a segment table, after the leading `id`. Centroids are physical,
/// extents in voxels.
pub const SEGMENT_COLUMNS: [&str; 10] =
    ["cx", "cy", "cz", "volume", "width", "height", "depth", "mean_int", "max_int", "seed_id"];

#[derive(Clone, Debug, PartialEq)]
pub struct TwangParams {
    /// Physical sigma of the smoothing applied before the gradient.
    pub sigma_grad: f64,
    /// Physical width of the Gaussian flank outside the plateau.
    pub sigma_kernel: f64,
    /// Plateau radius as a multiple of the seed radius.
    pub omega: f64,
    pub operator: u32,
}

impl Default for TwangParams {
    fn default() -> Self {
        Self { sigma_grad: 3.0, sigma_kernel: 3.0, omega: 1.0, operator: 2 }
    }
}

/// One seed's segmentation inside its crop.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedMask {
    pub seed_id: u64,
    pub fsmd: f64,
    /// Global voxel indices.
    pub voxels: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TwangOutput {
    pub segments: FeatureTable,
    pub labels: Option<LabelImage>,
    /// Seeds that produced no segment, with the reason.
    pub skipped: Vec<(u64, String)>,
}

/// Orientation agreement in `[0, 1]` between gradient `g` and the direction `d`
/// from a voxel towards the seed. Undefined directions give 0.5.
#[inline]
pub fn orientation_field(g: [f64; 3], d: [f64; 3]) -> f64 {
    let ng = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    let nd = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if ng == 0.0 || nd == 0.0 || !ng.is_finite() {
        return 0.5;
    }
    (0.5 * (1.0 + (g[0] * d[0] + g[1] * d[1] + g[2] * d[2]) / (ng * nd))).clamp(0.0, 1.0)
}

/// Radial weight: 1 up to `omega * r_s`, then a Gaussian flank of width `sigma_k`.
#[inline]
pub fn plateau_kernel(dist: f64, r_s: f64, omega: f64, sigma_k: f64) -> f64 {
    let e = omega * r_s - dist;
    if e >= 0.0 {
        1.0
    } else if sigma_k == 0.0 {
        0.0
    } else {
        (-(e * e) / (2.0 * sigma_k * sigma_k)).exp()
    }
}

fn seed_distance(g: &Grid, seed: [usize; 3], i: usize) -> f64 {
    let d = seed_vector(g, seed, i);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Physical vector from voxel `i` to the seed.
fn seed_vector(g: &Grid, seed: [usize; 3], i: usize) -> [f64; 3] {
    let c = g.coords(i);
    let sp = g.spacing;
    [
        (seed[0] as f64 - c[0] as f64) * sp[0],
        (seed[1] as f64 - c[1] as f64) * sp[1],
        (seed[2] as f64 - c[2] as f64) * sp[2],
    ]
}

/// Agreement between the smoothed intensity gradient and the direction to
/// the seed, per voxel of `crop`. `seed` is in crop voxel coordinates.
pub fn dot_product_field<T: Real>(crop: &VolumetricImage<T>, seed: [usize; 3], sigma_grad: f64) -> Result<Vec<f64>> {
    let g = *crop.grid();
    if g.checked_index(seed[0] as isize, seed[1] as isize, seed[2] as isize).is_none() {
        return invalid(format!("seed {seed:?} outside the crop"));
    }
    let smooth = gaussian_smooth(crop, sigma_grad)?;
    let sd = smooth.data();
    let sp = g.spacing;
    Ok((0..g.len())
        .map(|i| {
            let c = g.coords(i);
            let mut grad = [0.0; 3];
            for a in 0..3 {
                let n = g.dims[a];
                if n == 1 {
                    continue;
                }
                let mut up = c;
                let mut dn = c;
                up[a] = (c[a] + 1).min(n - 1);
                dn[a] = c[a].saturating_sub(1);
                let h = (up[a] - dn[a]) as f64 * sp[a];
                grad[a] = (sd[g.index(up[0], up[1], up[2])] - sd[g.index(dn[0], dn[1], dn[2])]).as_f64() / h;
            }
            orientation_field(grad, seed_vector(&g, seed, i))
        })
        .collect())
}

/// Plateau kernel sampled on `grid` around `seed` (voxel coordinates).
pub fn weighting_kernel(grid: &Grid, seed: [usize; 3], r_s: f64, sigma_kernel: f64, omega: f64) -> Vec<f64> {
    (0..grid.len()).map(|i| plateau_kernel(seed_distance(grid, seed, i), r_s, omega, sigma_kernel)).collect()
}

struct Seed {
    id: u64,
    pos: [usize; 3],
    radius: f64,
    fsmd: f64,
}

fn read_seeds(seeds: &FeatureTable, dims: [usize; 3], skipped: &mut Vec<(u64, String)>) -> Result<Vec<Seed>> {
    let x = seeds.require_column("x")?;
    let y = seeds.require_column("y")?;
    let z = seeds.require_column("z")?;
    let sigma = seeds.column_index("sigma");
    let radius = seeds.column_index("radius");
    if sigma.is_none() && radius.is_none() {
        return invalid("seed table needs a sigma or radius column");
    }
    let fsmd = seeds.column_index("fsmd_1");
    let mut out = Vec::with_capacity(seeds.len());
    for r in 0..seeds.len() {
        let row = seeds.row(r);
        let p = [row[x], row[y], row[z]];
        if (0..3).any(|a| !(p[a] > -0.5 && p[a] < dims[a] as f64 - 0.5)) {
            skipped.push((seeds.ids()[r], format!("position {p:?} outside the volume")));
            continue;
        }
        let rad = match radius {
            Some(c) => row[c],
            None => std::f64::consts::SQRT_2 * row[sigma.unwrap()],
        };
        if !(rad.is_finite() && rad > 0.0) {
            return invalid(format!("seed {} has invalid radius {rad}", seeds.ids()[r]));
        }
        out.push(Seed {
            id: seeds.ids()[r],
            pos: [p[0].round() as usize, p[1].round() as usize, p[2].round() as usize],
            radius: rad,
            fsmd: fsmd.map_or(1.0, |c| row[c]),
        });
    }
    Ok(out)
}

fn segment_one<T: Real>(img: &VolumetricImage<T>, s: &Seed, p: &TwangParams) -> std::result::Result<SeedMask, String> {
    let g = *img.grid();
    let sp = g.spacing;
    let mut lo = [0; 3];
    let mut hi = [0; 3];
    for a in 0..3 {
        let half = (1.5 * s.radius / sp[a]).ceil() as usize;
        lo[a] = s.pos[a].saturating_sub(half);
        hi[a] = (s.pos[a] + half + 1).min(g.dims[a]);
    }
    let crop = img.crop(lo, hi).map_err(|e| e.to_string())?;
    let (min, _) = crop.min_max();
    let cg = *crop.grid();
    let local = [s.pos[0] - lo[0], s.pos[1] - lo[1], s.pos[2] - lo[2]];
    let phi = dot_product_field(&crop, local, p.sigma_grad).map_err(|e| e.to_string())?;
    let w = weighting_kernel(&cg, local, s.radius, p.sigma_kernel, p.omega);
    let weighted: Vec<f64> = (0..cg.len())
        .map(|i| {
            let v = (crop.data()[i] - min).as_f64();
            if seed_distance(&cg, local, i) <= s.radius {
                v
            } else {
                v * w[i] * phi[i]
            }
        })
        .collect();
    let otsu = otsu_threshold(&weighted).map_err(|e| e.to_string())?;
    if otsu.degenerate {
        return Err("constant neighbourhood".into());
    }
    let seed_local = cg.index(local[0], local[1], local[2]);
    let comp = component_containing(&cg, Connectivity::TwentySix, seed_local, |i| weighted[i] >= otsu.threshold);
    if comp.is_empty() {
        return Err("seed voxel below the local threshold".into());
    }
    let mut voxels: Vec<usize> = comp
        .into_iter()
        .map(|i| {
            let c = cg.coords(i);
            g.index(c[0] + lo[0], c[1] + lo[1], c[2] + lo[2])
        })
        .collect();
    voxels.sort_unstable();
    Ok(SeedMask { seed_id: s.id, fsmd: s.fsmd, voxels })
}

/// Features of a voxel set: physical centroid, voxel count, bounding box
/// extents in voxels and raw intensity statistics.
pub fn mask_features<T: Real>(img: &VolumetricImage<T>, voxels: &[usize]) -> [f64; 9] {
    let g = img.grid();
    let mut sum = [0.0; 3];
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let (mut total, mut max) = (0.0, f64::NEG_INFINITY);
    for &i in voxels {
        let c = g.coords(i);
        for a in 0..3 {
            sum[a] += c[a] as f64;
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
        let v = img.data()[i].as_f64();
        total += v;
        max = max.max(v);
    }
    let n = voxels.len() as f64;
    let s = g.spacing;
    [
        sum[0] / n * s[0],
        sum[1] / n * s[1],
        sum[2] / n * s[2],
        n,
        (hi[0] - lo[0] + 1) as f64,
        (hi[1] - lo[1] + 1) as f64,
        (hi[2] - lo[2] + 1) as f64,
        total / n,
        max,
    ]
}

/// Per-seed masks, in seed table order. Seeds that yield no mask are reported.
pub fn twang_masks<T: Real>(
    img: &VolumetricImage<T>,
    seeds: &FeatureTable,
    p: &TwangParams,
) -> Result<(Vec<SeedMask>, Vec<(u64, String)>)> {
    for (name, v) in [("sigma_grad", p.sigma_grad), ("sigma_kernel", p.sigma_kernel), ("omega", p.omega)] {
        if !(v.is_finite() && v > 0.0) {
            return invalid(format!("TWANG {name} must be finite and > 0, got {v}"));
        }
    }
    let mut skipped = Vec::new();
    let list = read_seeds(seeds, img.dims(), &mut skipped)?;
    let results: Vec<_> = list.par_iter().map(|s| (s.id, segment_one(img, s, p))).collect();
    let mut masks = Vec::new();
    for (id, r) in results {
        match r {
            Ok(m) => masks.push(m),
            Err(e) => skipped.push((id, e)),
        }
    }
    Ok((masks, skipped))
}

/// Writes masks into one label volume labelled by seed id. Overlaps go to the
/// higher FSMD, then the lower seed id.
pub fn composite_labels(grid: &Grid, masks: &[SeedMask]) -> Result<LabelImage> {
    let mut order: Vec<&SeedMask> = masks.iter().collect();
    order.sort_by(|a, b| b.fsmd.total_cmp(&a.fsmd).then(a.seed_id.cmp(&b.seed_id)));
    let mut out = LabelImage::from_grid(*grid, vec![0; grid.len()])?;
    for m in order {
        let l = u32::try_from(m.seed_id).map_err(|_| crate::Error::InvalidInput(format!("seed id {} too large", m.seed_id)))?;
        for &i in &m.voxels {
            let v = &mut out.data_mut()[i];
            if *v == 0 {
                *v = l;
            }
        }
    }
    Ok(out)
}

/// Segments every seed independently. The table holds one row per segmented
/// seed (id = seed id); `want_labels` also returns the composite label volume.
pub fn twang_segment<T: Real>(
    img: &VolumetricImage<T>,
    seeds: &FeatureTable,
    p: &TwangParams,
    want_labels: bool,
) -> Result<TwangOutput> {
    let (masks, skipped) = twang_masks(img, seeds, p)?;
    let mut segments = FeatureTable::new(p.operator, &SEGMENT_COLUMNS);
    for m in &masks {
        let f = mask_features(img, &m.voxels);
        let mut row = f.to_vec();
        row.push(m.seed_id as f64);
        segments.push_row(m.seed_id, &row)?;
    }
    let labels = if want_labels { Some(composite_labels(img.grid(), &masks)?) } else { None };
    Ok(TwangOutput { segments, labels, skipped })
}
