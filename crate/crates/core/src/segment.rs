//! Threshold baselines, per-label features and uncertainty-guided repair of
//! over- and under-sized segments.

use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::filters::{gaussian_smooth, label_components, otsu_threshold, seeded_watershed};
use crate::fuzzy::{augment_table, Combine, FuzzySpec, Trapezoid};
use crate::image::{Connectivity, LabelImage, VolumetricImage};
use crate::scalar::Real;
use crate::seeds::seed_positions;
use crate::table::FeatureTable;
use crate::twang::{mask_features, SEGMENT_COLUMNS};

/// Gaussian smoothing, one global Otsu threshold, 26-connected components.
pub fn otsu_segment_baseline<T: Real>(img: &VolumetricImage<T>, sigma_smooth: f64) -> Result<LabelImage> {
    let smooth = gaussian_smooth(img, sigma_smooth)?;
    let otsu = otsu_threshold(smooth.data())?;
    let g = *img.grid();
    if otsu.degenerate {
        return LabelImage::from_grid(g, vec![0; g.len()]);
    }
    let t = T::of(otsu.threshold);
    let d = smooth.data();
    Ok(label_components(&g, Connectivity::TwentySix, |i| d[i] >= t))
}

/// Otsu foreground flooded from the seeds by a seeded watershed. Components
/// without a seed keep a label of their own.
pub fn otsu_watershed_baseline<T: Real>(
    img: &VolumetricImage<T>,
    sigma_smooth: f64,
    seeds: &FeatureTable,
) -> Result<LabelImage> {
    let comps = otsu_segment_baseline(img, sigma_smooth)?;
    let g = *img.grid();
    let mut markers = vec![0u32; g.len()];
    let mut next = 0u32;
    for p in seed_positions(seeds)? {
        let v = g.nearest_voxel(p);
        let i = g.index(v[0], v[1], v[2]);
        if comps.data()[i] != 0 && markers[i] == 0 {
            next += 1;
            markers[i] = next;
        }
    }
    let smooth = gaussian_smooth(img, sigma_smooth)?;
    let flooded = seeded_watershed(&smooth, &LabelImage::from_grid(g, markers)?, Some(&comps))?;
    let mut seeded = vec![false; comps.max_label() as usize + 1];
    for (i, &l) in flooded.data().iter().enumerate() {
        if l != 0 {
            seeded[comps.data()[i] as usize] = true;
        }
    }
    let mut extra = BTreeMap::new();
    let out = comps
        .data()
        .iter()
        .zip(flooded.data())
        .map(|(&c, &f)| {
            if f != 0 || c == 0 || seeded[c as usize] {
                f
            } else {
                let n = extra.len() as u32;
                *extra.entry(c).or_insert(next + 1 + n)
            }
        })
        .collect();
    LabelImage::from_grid(g, out)
}

/// Voxel lists per non-zero label, in label order.
pub fn label_voxels(labels: &LabelImage) -> BTreeMap<u32, Vec<usize>> {
    let mut m: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.data().iter().enumerate() {
        if l != 0 {
            m.entry(l).or_default().push(i);
        }
    }
    m
}

/// One row per label (id = label) with the segment feature columns. The
/// `seed_id` column is NaN where no seed is known.
pub fn region_features<T: Real>(labels: &LabelImage, img: &VolumetricImage<T>, operator: u32) -> Result<FeatureTable> {
    if !labels.grid().same_shape(img.grid()) {
        return invalid("label image and intensity image differ in shape");
    }
    let mut t = FeatureTable::new(operator, &SEGMENT_COLUMNS);
    for (l, vox) in label_voxels(labels) {
        let mut row = mask_features(img, &vox).to_vec();
        row.push(f64::NAN);
        t.push_row(l as u64, &row)?;
    }
    Ok(t)
}

/// Size term over volume, width, height and depth with min combination.
pub fn default_segment_spec() -> FuzzySpec {
    let t = |a, b, c, d| Trapezoid::new(a, b, c, d).expect("ordered");
    FuzzySpec::new("2", Combine::Min)
        .with("volume", t(449.0, 617.0, 1405.0, 2016.0))
        .with("width", t(13.0, 15.0, 24.0, 31.0))
        .with("height", t(13.0, 15.0, 24.0, 34.0))
        .with("depth", t(3.0, 5.0, 8.0, 11.0))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Trapezoid from sample statistics: minimum, 5th and 95th percentile, maximum.
pub fn derive_trapezoid(values: &[f64]) -> Result<Trapezoid<f64>> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return invalid("cannot derive a membership function from no values");
    }
    v.sort_by(f64::total_cmp);
    Trapezoid::new(v[0], quantile(&v, 0.05), quantile(&v, 0.95), v[v.len() - 1])
}

/// Builds a spec with one derived trapezoid per named column of `truth`.
pub fn derive_spec(name: &str, truth: &FeatureTable, features: &[&str], combine: Combine) -> Result<FuzzySpec> {
    let mut spec = FuzzySpec::new(name, combine);
    for f in features {
        spec = spec.with(*f, derive_trapezoid(&truth.column(f)?)?);
    }
    Ok(spec)
}

#[derive(Clone, Debug)]
pub struct SplitOutcome {
    pub labels: LabelImage,
    /// Features of the repaired labels, scored with the spec.
    pub segments: FeatureTable,
    pub split: usize,
    pub deleted: usize,
    pub diagnostics: Vec<String>,
}

/// Splits large uncertain segments by a seeded watershed over the seeds they
/// contain and deletes small uncertain ones. Size class is judged on the
/// volume trapezoid of `spec`: below `b` is small, above `c` is large.
pub fn split_oversized<T: Real>(
    labels: &LabelImage,
    img: &VolumetricImage<T>,
    seeds: &FeatureTable,
    spec: &FuzzySpec,
    alpha: f64,
    beta: f64,
) -> Result<SplitOutcome> {
    let vol = spec
        .set_for("volume")
        .ok_or_else(|| crate::Error::Contract(format!("fuzzy term {} has no volume set", spec.name)))?;
    let mut table = region_features(labels, img, 0)?;
    augment_table(&mut table, std::slice::from_ref(spec))?;
    let fsmd = table.column(&spec.column())?;
    let volume = table.column("volume")?;
    let g = *img.grid();

    let mut seeds_in: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for p in seed_positions(seeds)? {
        if (0..3).any(|a| !(p[a] > -0.5 && p[a] < g.dims[a] as f64 - 0.5)) {
            continue;
        }
        let v = g.nearest_voxel(p);
        let i = g.index(v[0], v[1], v[2]);
        let l = labels.data()[i];
        if l != 0 {
            seeds_in.entry(l).or_default().push(i);
        }
    }

    let mut out = labels.data().to_vec();
    let mut next = labels.max_label();
    let (mut split, mut deleted) = (0, 0);
    let mut diagnostics = Vec::new();
    let voxels = label_voxels(labels);
    for r in 0..table.len() {
        let l = table.ids()[r] as u32;
        let (f, v) = (fsmd[r], volume[r]);
        if f < beta && v > vol.c {
            let mut s = seeds_in.get(&l).cloned().unwrap_or_default();
            s.sort_unstable();
            s.dedup();
            if s.len() < 2 {
                diagnostics.push(format!("segment {l}: oversized with {} contained seed(s), left untouched", s.len()));
                continue;
            }
            let vox = &voxels[&l];
            let mut lo = [usize::MAX; 3];
            let mut hi = [0; 3];
            for &i in vox {
                let c = g.coords(i);
                for a in 0..3 {
                    lo[a] = lo[a].min(c[a]);
                    hi[a] = hi[a].max(c[a] + 1);
                }
            }
            let crop = img.crop(lo, hi)?;
            let cg = *crop.grid();
            let local = |i: usize| {
                let c = g.coords(i);
                cg.index(c[0] - lo[0], c[1] - lo[1], c[2] - lo[2])
            };
            let mut mask = vec![0u32; cg.len()];
            for &i in vox {
                mask[local(i)] = 1;
            }
            let mut markers = vec![0u32; cg.len()];
            for (k, &i) in s.iter().enumerate() {
                markers[local(i)] = k as u32 + 1;
            }
            let ws = seeded_watershed(
                &crop,
                &LabelImage::from_grid(cg, markers)?,
                Some(&LabelImage::from_grid(cg, mask)?),
            )?;
            for &i in vox {
                let k = ws.data()[local(i)];
                out[i] = if k == 0 { 0 } else { next + k };
            }
            next += s.len() as u32;
            split += 1;
        } else if f < alpha && v < vol.b {
            for &i in &voxels[&l] {
                out[i] = 0;
            }
            deleted += 1;
        }
    }

    let mut remap = BTreeMap::new();
    for &l in &out {
        if l != 0 {
            remap.entry(l).or_insert(0u32);
        }
    }
    for (n, v) in remap.values_mut().enumerate() {
        *v = n as u32 + 1;
    }
    for l in out.iter_mut() {
        if *l != 0 {
            *l = remap[l];
        }
    }
    let labels = LabelImage::from_grid(g, out)?;
    let mut segments = region_features(&labels, img, 0)?;
    augment_table(&mut segments, std::slice::from_ref(spec))?;
    Ok(SplitOutcome { labels, segments, split, deleted, diagnostics })
}
