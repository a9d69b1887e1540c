//! Rigid registration from point correspondences and fusion of two views.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{invalid, Error, Result};
use crate::image::{Grid, LabelImage, VolumetricImage};
use crate::metrics::IntersectionHistogram;
use crate::scalar::Real;
use crate::segment::label_voxels;
use crate::table::FeatureTable;

/// `x -> r * x + t` in physical coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { r: Matrix3::identity(), t: Vector3::zeros() }
    }

    pub fn new(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        let orth = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(orth <= 1e-9 && (r.determinant() - 1.0).abs() <= 1e-9) {
            return invalid("matrix is not a proper rotation");
        }
        Ok(Self { r, t })
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.r * Vector3::from(p) + self.t;
        [q.x, q.y, q.z]
    }

    pub fn inverse(&self) -> Self {
        let rt = self.r.transpose();
        Self { r: rt, t: -(rt * self.t) }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Self) -> Self {
        Self { r: self.r * first.r, t: self.r * first.t + self.t }
    }

    pub fn rms(&self, src: &[[f64; 3]], dst: &[[f64; 3]]) -> f64 {
        if src.is_empty() {
            return 0.0;
        }
        let s: f64 = src
            .iter()
            .zip(dst)
            .map(|(a, b)| (Vector3::from(self.apply(*a)) - Vector3::from(*b)).norm_squared())
            .sum();
        (s / src.len() as f64).sqrt()
    }

    /// Twelve numbers: `r` row-major, then `t`.
    pub fn to_text(&self) -> String {
        let mut v = Vec::with_capacity(12);
        for i in 0..3 {
            for j in 0..3 {
                v.push(format!("{}", self.r[(i, j)]));
            }
        }
        v.extend(self.t.iter().map(|x| format!("{x}")));
        v.join(" ") + "\n"
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|e| Error::Format(format!("transform value {w:?}: {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != 12 {
            return Err(Error::Format(format!("transform needs 12 numbers, found {}", v.len())));
        }
        Self::new(Matrix3::from_row_slice(&v[..9]), Vector3::new(v[9], v[10], v[11]))
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Least-squares rotation and translation taking `src` onto `dst`.
pub fn umeyama(src: &[[f64; 3]], dst: &[[f64; 3]]) -> Result<RigidTransform> {
    if src.len() != dst.len() {
        return invalid(format!("point lists differ in length: {} vs {}", src.len(), dst.len()));
    }
    if src.len() < 3 {
        return Err(Error::Degenerate(format!("{} correspondences, need at least 3", src.len())));
    }
    let n = src.len() as f64;
    let mean = |p: &[[f64; 3]]| p.iter().fold(Vector3::zeros(), |acc, q| acc + Vector3::from(*q)) / n;
    let (ms, md) = (mean(src), mean(dst));
    let mut cov = Matrix3::zeros();
    for (a, b) in src.iter().zip(dst) {
        cov += (Vector3::from(*b) - md) * (Vector3::from(*a) - ms).transpose();
    }
    cov /= n;
    let svd = cov.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let spread = |p: &[[f64; 3]], m: Vector3<f64>| p.iter().map(|q| (Vector3::from(*q) - m).norm_squared()).sum::<f64>();
    let scale = spread(src, ms).max(spread(dst, md)) / n;
    if !(sv[1] > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate("points are collinear or coincident".into()));
    }
    let mut s = Matrix3::identity();
    if (u.determinant() * vt.determinant()) < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let r = u * s * vt;
    Ok(RigidTransform { r, t: md - r * ms })
}

pub fn intersection_histogram_3d(reference: &LabelImage, seg: &LabelImage) -> Result<IntersectionHistogram> {
    IntersectionHistogram::from_images(reference, seg)
}

/// Labels of `src` sampled nearest-neighbour on `target`, where `to_target`
/// maps physical `src` coordinates to physical `target` coordinates.
pub fn resample_labels(src: &LabelImage, to_target: &RigidTransform, target: &Grid) -> Result<LabelImage> {
    let inv = to_target.inverse();
    let sg = *src.grid();
    let out = (0..target.len())
        .map(|i| {
            let c = target.coords(i);
            let p = inv.apply(target.to_physical([c[0] as f64, c[1] as f64, c[2] as f64]));
            let v = sg.to_voxel(p);
            sg.checked_index(v[0].round() as isize, v[1].round() as isize, v[2].round() as isize)
                .map_or(0, |j| src.data()[j])
        })
        .collect();
    LabelImage::from_grid(*target, out)
}

/// Intensities of `src` sampled trilinearly on `target`; outside samples are 0.
pub fn resample_intensity<T: Real>(
    src: &VolumetricImage<T>,
    to_target: &RigidTransform,
    target: &Grid,
) -> Result<VolumetricImage<T>> {
    let inv = to_target.inverse();
    let sg = *src.grid();
    let d = src.data();
    let out = (0..target.len())
        .map(|i| {
            let c = target.coords(i);
            let v = sg.to_voxel(inv.apply(target.to_physical([c[0] as f64, c[1] as f64, c[2] as f64])));
            let mut base = [0usize; 3];
            let mut frac = [0.0; 3];
            for a in 0..3 {
                let x = (v[a] * 1e9).round() / 1e9;
                if x < 0.0 || x > (sg.dims[a] - 1) as f64 {
                    return T::zero();
                }
                let f = x.floor();
                base[a] = (f as usize).min(sg.dims[a].saturating_sub(2));
                frac[a] = x - base[a] as f64;
            }
            let mut acc = 0.0;
            for corner in 0..8 {
                let mut w = 1.0;
                let mut q = [0usize; 3];
                for a in 0..3 {
                    let hi = (corner >> a) & 1 == 1;
                    q[a] = (base[a] + hi as usize).min(sg.dims[a] - 1);
                    w *= if hi { frac[a] } else { 1.0 - frac[a] };
                }
                if w != 0.0 {
                    acc += w * d[sg.index(q[0], q[1], q[2])].as_f64();
                }
            }
            T::of(acc)
        })
        .collect();
    VolumetricImage::from_grid(*target, out)
}

fn fsmd_by_label(t: &FeatureTable, column: &str) -> Result<BTreeMap<u32, (usize, f64)>> {
    let c = t
        .column_index(column)
        .ok_or_else(|| Error::Contract(format!("segment table lacks column {column}")))?;
    Ok((0..t.len()).map(|r| (t.ids()[r] as u32, (r, t.row(r)[c]))).collect())
}

/// Candidate taking part in the segment fusion.
struct Candidate {
    view: usize,
    label: u32,
    fsmd: f64,
}

/// Fuses two segmentations of the same specimen. `b` is resampled into `a`'s
/// frame with `b_to_a`. Exclusive segments are copied; for each max-overlap
/// pair the higher-FSMD segment is kept (ties keep `a`). Segments are written
/// by descending FSMD onto unclaimed voxels; one that finds more than half of
/// its voxels claimed is dropped. Output labels are `1..n` in writing order,
/// and the table holds the source rows with centroids mapped into `a`'s frame
/// plus `view` and `source_id` columns.
pub fn fuse_segment_labels(
    a: &LabelImage,
    ta: &FeatureTable,
    b: &LabelImage,
    tb: &FeatureTable,
    b_to_a: &RigidTransform,
    fsmd_column: &str,
) -> Result<(LabelImage, FeatureTable)> {
    if ta.columns() != tb.columns() {
        return Err(Error::Contract("segment tables of the two views differ in columns".into()));
    }
    let fa = fsmd_by_label(ta, fsmd_column)?;
    let fb = fsmd_by_label(tb, fsmd_column)?;
    let g = *a.grid();
    let br = resample_labels(b, b_to_a, &g)?;
    let h = IntersectionHistogram::from_images(a, &br)?;

    let mut cells: Vec<((u32, u32), u64)> = h.cells().filter(|((i, j), _)| *i != 0 && *j != 0).collect();
    cells.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    let (mut used_a, mut used_b) = (BTreeSet::new(), BTreeSet::new());
    let mut dropped = (BTreeSet::new(), BTreeSet::new());
    for ((i, j), _) in cells {
        if used_a.contains(&i) || used_b.contains(&j) {
            continue;
        }
        used_a.insert(i);
        used_b.insert(j);
        let si = fa.get(&i).map_or(0.0, |x| x.1);
        let sj = fb.get(&j).map_or(0.0, |x| x.1);
        if si >= sj {
            dropped.1.insert(j);
        } else {
            dropped.0.insert(i);
        }
    }

    let va = label_voxels(a);
    let vb = label_voxels(&br);
    let mut cands: Vec<Candidate> = Vec::new();
    for &l in va.keys().filter(|l| !dropped.0.contains(*l)) {
        cands.push(Candidate { view: 0, label: l, fsmd: fa.get(&l).map_or(0.0, |x| x.1) });
    }
    for &l in vb.keys().filter(|l| !dropped.1.contains(*l)) {
        cands.push(Candidate { view: 1, label: l, fsmd: fb.get(&l).map_or(0.0, |x| x.1) });
    }
    cands.sort_by(|x, y| y.fsmd.total_cmp(&x.fsmd).then(x.view.cmp(&y.view)).then(x.label.cmp(&y.label)));

    let mut cols: Vec<String> = ta.columns().to_vec();
    cols.push("view".into());
    cols.push("source_id".into());
    let mut table = FeatureTable::new(ta.operator(), &cols);
    let centroid = ["cx", "cy", "cz"].map(|c| ta.column_index(c));
    let mut out = vec![0u32; g.len()];
    let mut next = 0u32;
    for c in cands {
        let vox = if c.view == 0 { &va[&c.label] } else { &vb[&c.label] };
        let claimed = vox.iter().filter(|&&i| out[i] != 0).count();
        if 2 * claimed > vox.len() {
            continue;
        }
        next += 1;
        for &i in vox {
            if out[i] == 0 {
                out[i] = next;
            }
        }
        let (src, row) = if c.view == 0 { (ta, fa.get(&c.label)) } else { (tb, fb.get(&c.label)) };
        let mut values = match row {
            Some(&(r, _)) => src.row(r).to_vec(),
            None => vec![f64::NAN; src.columns().len()],
        };
        if c.view == 1 {
            if let [Some(x), Some(y), Some(z)] = centroid {
                let p = b_to_a.apply([values[x], values[y], values[z]]);
                values[x] = p[0];
                values[y] = p[1];
                values[z] = p[2];
            }
        }
        values.push(c.view as f64);
        values.push(c.label as f64);
        table.push_row(next as u64, &values)?;
    }
    Ok((LabelImage::from_grid(g, out)?, table))
}

/// Fuses two seed tables whose positions are voxel coordinates of grids with
/// the given spacings. Mutually nearest pairs closer than the smaller of their
/// `radius` values are replaced by the FSMD-weighted mean of all columns
/// (equal weights when both are zero). Output positions are in `a`'s voxel frame.
pub fn fuse_point_sets(
    a: &FeatureTable,
    spacing_a: [f64; 3],
    b: &FeatureTable,
    spacing_b: [f64; 3],
    b_to_a: &RigidTransform,
    fsmd_column: &str,
) -> Result<FeatureTable> {
    if a.columns() != b.columns() {
        return Err(Error::Contract("seed tables of the two views differ in columns".into()));
    }
    let (x, y, z) = (a.require_column("x")?, a.require_column("y")?, a.require_column("z")?);
    let rad = a.require_column("radius")?;
    let fc = a
        .column_index(fsmd_column)
        .ok_or_else(|| Error::Contract(format!("seed table lacks column {fsmd_column}")))?;
    let phys = |row: &[f64], s: [f64; 3]| [row[x] * s[0], row[y] * s[1], row[z] * s[2]];
    let pa: Vec<[f64; 3]> = (0..a.len()).map(|r| phys(a.row(r), spacing_a)).collect();
    let pb: Vec<[f64; 3]> = (0..b.len()).map(|r| b_to_a.apply(phys(b.row(r), spacing_b))).collect();
    let dist = |p: [f64; 3], q: [f64; 3]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
    let nearest = |p: [f64; 3], set: &[[f64; 3]]| {
        set.iter().enumerate().map(|(k, q)| (dist(p, *q), k)).min_by(|u, v| u.0.total_cmp(&v.0).then(u.1.cmp(&v.1)))
    };

    let mut out = FeatureTable::new(a.operator(), a.columns());
    let mut paired_b = vec![false; b.len()];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, &p) in pa.iter().enumerate() {
        let ra = a.row(i);
        let hit = nearest(p, &pb).filter(|&(d, j)| {
            nearest(pb[j], &pa).map(|n| n.1) == Some(i) && d < ra[rad].min(b.row(j)[rad])
        });
        let mut row = ra.to_vec();
        if let Some((_, j)) = hit {
            paired_b[j] = true;
            let rb = b.row(j);
            let (wa, wb) = (ra[fc].max(0.0), rb[fc].max(0.0));
            let (wa, wb) = if wa + wb > 0.0 { (wa / (wa + wb), wb / (wa + wb)) } else { (0.5, 0.5) };
            let qb = pb[j];
            for k in 0..row.len() {
                row[k] = wa * ra[k] + wb * rb[k];
            }
            row[x] = (wa * p[0] + wb * qb[0]) / spacing_a[0];
            row[y] = (wa * p[1] + wb * qb[1]) / spacing_a[1];
            row[z] = (wa * p[2] + wb * qb[2]) / spacing_a[2];
        }
        rows.push(row);
    }
    for j in (0..b.len()).filter(|&j| !paired_b[j]) {
        let mut row = b.row(j).to_vec();
        row[x] = pb[j][0] / spacing_a[0];
        row[y] = pb[j][1] / spacing_a[1];
        row[z] = pb[j][2] / spacing_a[2];
        rows.push(row);
    }
    for (k, r) in rows.iter().enumerate() {
        out.push_row(k as u64 + 1, r)?;
    }
    Ok(out)
}

/// Blends `a` with `b` resampled into `a`'s frame: `alpha * a + (1 - alpha) * b`
/// with `alpha = z / (nz - 1)`, so `a` dominates its near side at high z.
pub fn intensity_fuse<T: Real>(
    a: &VolumetricImage<T>,
    b: &VolumetricImage<T>,
    b_to_a: &RigidTransform,
) -> Result<VolumetricImage<T>> {
    let g = *a.grid();
    let br = resample_intensity(b, b_to_a, &g)?;
    let nz = g.dims[2];
    let plane = g.dims[0] * g.dims[1];
    let data = a
        .data()
        .iter()
        .zip(br.data())
        .enumerate()
        .map(|(i, (&va, &vb))| {
            let alpha = if nz > 1 { (i / plane) as f64 / (nz - 1) as f64 } else { 0.5 };
            T::of(va.as_f64() + (1.0 - alpha) * (vb.as_f64() - va.as_f64()))
        })
        .collect();
    VolumetricImage::from_grid(g, data)
}

/// Transform mapping a view rotated 180 degrees about the y axis back onto
/// the reference view, for a grid of the given dims and spacing.
pub fn flip_xz_transform(dims: [usize; 3], spacing: [f64; 3]) -> RigidTransform {
    RigidTransform {
        r: Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0),
        t: Vector3::new((dims[0] - 1) as f64 * spacing[0], 0.0, (dims[2] - 1) as f64 * spacing[2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let t = flip_xz_transform([10, 10, 5], [1.0, 1.0, 2.5]);
        assert_eq!(RigidTransform::from_text(&t.to_text()).unwrap(), t);
        assert!(RigidTransform::from_text("1 2 3").is_err());
    }

    #[test]
    fn flip_is_an_involution() {
        let t = flip_xz_transform([10, 10, 5], [1.0, 1.0, 2.5]);
        let p = [3.0, 4.0, 5.0];
        let q = t.apply(t.apply(p));
        assert!((0..3).all(|k| (p[k] - q[k]).abs() < 1e-12));
    }
}
