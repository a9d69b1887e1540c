//! Seed point detection in the LoG scale-space maximum projection, redundant
//! seed fusion, fuzzy scoring and a distance-map based alternative.

use crate::error::{invalid, Result};
use crate::filters::{
    connected_components, euclidean_distance_map, h_maxima_extract, local_extrema_where, log_scale_space_max,
    normalized_log, EdmBorder, SummedVolume,
};
use crate::fuzzy::{augment_table, Combine, Diagnostics, FuzzySpec, Trapezoid};
use crate::image::{Connectivity, LabelImage, VolumetricImage};
use crate::scalar::Real;
use crate::table::FeatureTable;

/// Columns of a seed table, after the leading `id`.
pub const SEED_COLUMNS: [&str; 8] = ["x", "y", "z", "sigma", "radius", "smi", "wmi", "zpos"];

#[derive(Clone, Debug, PartialEq)]
pub struct LogSeedParams {
    /// Physical scale range of the scale space.
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_step: f64,
    /// Strict (`>`) or plateau-tolerant (`>=`) maximum test.
    pub strict: bool,
    /// Minimum window mean intensity of a seed.
    pub t_wmi: f64,
    /// Half-size of the intensity window in voxels.
    pub window_radius: [usize; 3],
    /// Operator index stamped on the output table.
    pub operator: u32,
}

impl Default for LogSeedParams {
    fn default() -> Self {
        Self {
            sigma_min: 4.0,
            sigma_max: 8.0,
            sigma_step: 1.0,
            strict: false,
            t_wmi: 0.0025,
            window_radius: [2, 2, 2],
            operator: 1,
        }
    }
}

/// Local maxima of the LoG scale-space maximum projection with window mean
/// intensity `>= t_wmi`. Positions are voxel coordinates; `radius` is
/// `sqrt(2) * sigma`, `smi` the projection response, `wmi` the raw window mean.
pub fn detect_log_seeds<T: Real>(img: &VolumetricImage<T>, p: &LogSeedParams) -> Result<FeatureTable> {
    let ssm = log_scale_space_max(img, p.sigma_min, p.sigma_max, p.sigma_step)?;
    let table = SummedVolume::new(img);
    let g = *img.grid();
    let wmi = |i: usize| table.window_mean_at(g.coords(i), p.window_radius);
    let resp = ssm.response.data();
    let peaks = local_extrema_where(&ssm.response, p.strict, |i| resp[i] > T::zero() && wmi(i) >= p.t_wmi);
    let mut out = FeatureTable::new(p.operator, &SEED_COLUMNS);
    for (k, pt) in peaks.iter().enumerate() {
        let [x, y, z] = pt.pos;
        let i = g.index(x, y, z);
        let sigma = ssm.scale.data()[i].as_f64();
        let row = [
            x as f64,
            y as f64,
            z as f64,
            sigma,
            std::f64::consts::SQRT_2 * sigma,
            pt.value.as_f64(),
            wmi(i),
            z as f64,
        ];
        out.push_row(k as u64 + 1, &row)?;
    }
    Ok(out)
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Groups of row indices merged by Ward linkage at dissimilarity `<= cutoff`,
/// ordered by their first member.
pub fn ward_clusters(points: &[[f64; 3]], cutoff: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (points[i], points[j]);
            condensed.push(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
        }
    }
    let dendro = kodama::linkage(&mut condensed, n, kodama::Method::Ward);
    let mut rep: Vec<usize> = (0..n).collect();
    let mut ds = DisjointSet((0..n).collect());
    for s in dendro.steps() {
        let (a, b) = (rep[s.cluster1], rep[s.cluster2]);
        if s.dissimilarity <= cutoff {
            ds.union(a, b);
        }
        rep.push(a.min(b));
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..n {
        let r = ds.find(i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Replaces each cluster of seeds closer than `cutoff` (physical units, Ward
/// linkage) by the mean of its members' feature vectors. Rows are renumbered.
pub fn fuse_seeds(seeds: &FeatureTable, cutoff: f64, spacing: [f64; 3]) -> Result<FeatureTable> {
    if !(cutoff.is_finite() && cutoff >= 0.0) {
        return invalid(format!("fusion cutoff must be finite and >= 0, got {cutoff}"));
    }
    let pos = seed_positions(seeds)?;
    let phys: Vec<[f64; 3]> = pos.iter().map(|p| [p[0] * spacing[0], p[1] * spacing[1], p[2] * spacing[2]]).collect();
    let mut out = FeatureTable::new(seeds.operator(), seeds.columns());
    let width = seeds.columns().len();
    for (k, members) in ward_clusters(&phys, cutoff).into_iter().enumerate() {
        let mut mean = vec![0.0; width];
        for &m in &members {
            mean.iter_mut().zip(seeds.row(m)).for_each(|(s, v)| *s += v);
        }
        mean.iter_mut().for_each(|s| *s /= members.len() as f64);
        out.push_row(k as u64 + 1, &mean)?;
    }
    Ok(out)
}

/// Voxel positions of a seed table.
pub fn seed_positions(seeds: &FeatureTable) -> Result<Vec<[f64; 3]>> {
    let c = [seeds.require_column("x")?, seeds.require_column("y")?, seeds.require_column("z")?];
    Ok((0..seeds.len()).map(|r| [seeds.row(r)[c[0]], seeds.row(r)[c[1]], seeds.row(r)[c[2]]]).collect())
}

/// Fuzzy scoring of seeds. `spec` is typically in product mode.
pub fn score_seeds(seeds: &mut FeatureTable, spec: &FuzzySpec) -> Result<Diagnostics> {
    augment_table(seeds, std::slice::from_ref(spec))
}

/// Seed uncertainty term with the intensity and axial-position sets used for
/// embryo light-sheet data: fixed intensity steps and a ramp towards the
/// detection objective.
pub fn default_seed_spec() -> FuzzySpec {
    let inf = f64::INFINITY;
    FuzzySpec::new("1", Combine::Product)
        .with("wmi", Trapezoid { a: 0.0025, b: 0.0025, c: inf, d: inf })
        .with("smi", Trapezoid { a: 0.0007, b: 0.0007, c: inf, d: inf })
        .with("zpos", Trapezoid { a: 50.0, b: 250.0, c: inf, d: inf })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdmSeedParams {
    /// LoG pre-filter scale; 0 binarizes the raw intensity.
    pub log_sigma: f64,
    /// Foreground threshold applied to the (filtered) image.
    pub threshold: f64,
    /// Dynamic below which distance maxima are suppressed (physical units).
    pub h: f64,
    /// Minimum voxel count of a seed region.
    pub min_volume: usize,
    pub operator: u32,
}

impl Default for EdmSeedParams {
    fn default() -> Self {
        Self { log_sigma: 0.0, threshold: 0.5, h: 1.0, min_volume: 1, operator: 1 }
    }
}

/// Seeds as regional maxima of the distance map of the foreground, reported as
/// region centroids (voxel coordinates) with their voxel count, together with
/// the labelled seed regions.
pub fn detect_edm_seeds<T: Real>(img: &VolumetricImage<T>, p: &EdmSeedParams) -> Result<(LabelImage, FeatureTable)> {
    let filtered = if p.log_sigma > 0.0 { normalized_log(img, p.log_sigma)? } else { img.clone() };
    let t = T::of(p.threshold);
    let binary = LabelImage::from_predicate(&filtered, |v| v >= t);
    let edm: VolumetricImage<f64> = euclidean_distance_map(&binary, EdmBorder::Background)?;
    let maxima = h_maxima_extract(&edm, p.h)?;
    let maxima = connected_components(&maxima, Connectivity::TwentySix);
    let mut out = FeatureTable::new(p.operator, &["x", "y", "z", "volume"]);
    let mut keep = vec![0u32; maxima.max_label() as usize + 1];
    let mut k = 0;
    for r in maxima.regions() {
        if r.volume < p.min_volume {
            continue;
        }
        let c = r.centroid();
        k += 1;
        keep[r.label as usize] = k as u32;
        out.push_row(k, &[c[0], c[1], c[2], r.volume as f64])?;
    }
    let labels = LabelImage::from_grid(*maxima.grid(), maxima.data().iter().map(|&l| keep[l as usize]).collect())?;
    Ok((labels, out))
}
