use crate::error::{invalid, Result};
use crate::filters::{euclidean_distance_map, EdmBorder};
use crate::image::{Grid, LabelImage, VolumetricImage};

use super::histogram::IntersectionHistogram;

/// Boundary-weighted disagreement between matched objects.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DistanceReport {
    /// Mean normalized sum of distances over reference objects.
    pub nsd: f64,
    /// Mean Hausdorff-style maximum over reference objects.
    pub hausdorff: f64,
    /// `(reference label, nsd, hausdorff)` per object.
    pub per_object: Vec<(u32, f64, f64)>,
}

/// Box enclosing two label sets plus one voxel of margin, possibly outside the image.
struct Window {
    lo: [isize; 3],
    grid: Grid,
}

impl Window {
    fn around(boxes: &[([usize; 3], [usize; 3])], spacing: [f64; 3]) -> Self {
        let mut lo = [isize::MAX; 3];
        let mut hi = [isize::MIN; 3];
        for (l, h) in boxes {
            for a in 0..3 {
                lo[a] = lo[a].min(l[a] as isize - 1);
                hi[a] = hi[a].max(h[a] as isize + 1);
            }
        }
        let dims = [(hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize, (hi[2] - lo[2] + 1) as usize];
        Self { lo, grid: Grid::new(dims, spacing).expect("valid window") }
    }

    fn mask(&self, src: &LabelImage, label: u32) -> LabelImage {
        let g = src.grid();
        let data = (0..self.grid.len())
            .map(|k| {
                let c = self.grid.coords(k);
                let p = [c[0] as isize + self.lo[0], c[1] as isize + self.lo[1], c[2] as isize + self.lo[2]];
                g.checked_index(p[0], p[1], p[2]).map_or(0, |i| u32::from(src.data()[i] == label))
            })
            .collect();
        LabelImage::from_grid(self.grid, data).expect("window shape")
    }
}

/// Distance weights: depth inside the reference object, or distance to it outside.
fn weights(reference: &LabelImage) -> Vec<f64> {
    let inside: VolumetricImage<f64> = euclidean_distance_map(reference, EdmBorder::Open).expect("valid mask");
    let inv = LabelImage::from_grid(*reference.grid(), reference.data().iter().map(|&l| u32::from(l == 0)).collect())
        .expect("same grid");
    let outside: VolumetricImage<f64> = euclidean_distance_map(&inv, EdmBorder::Open).expect("valid mask");
    reference.data().iter().enumerate().map(|(i, &l)| if l != 0 { inside.data()[i] } else { outside.data()[i] }).collect()
}

/// NSD and Hausdorff metric per reference object against its maximum-overlap
/// segment, averaged. Objects without a partner score NSD 1 and their maximum
/// interior depth as Hausdorff value.
pub fn nsd_hausdorff(reference: &LabelImage, seg: &LabelImage) -> Result<DistanceReport> {
    if !reference.grid().same_shape(seg.grid()) {
        return invalid("label volumes differ in shape");
    }
    let h = IntersectionHistogram::from_images(reference, seg)?;
    let seg_boxes: std::collections::BTreeMap<u32, ([usize; 3], [usize; 3])> =
        seg.regions().into_iter().map(|r| (r.label, (r.lo, r.hi))).collect();
    let spacing = reference.spacing();
    let mut out = DistanceReport::default();
    for region in reference.regions() {
        let partner = h
            .row(region.label)
            .into_iter()
            .filter(|(j, _)| *j != 0)
            .fold(None, |best: Option<(u32, u64)>, (j, n)| match best {
                Some((_, m)) if m >= n => best,
                _ => Some((j, n)),
            })
            .map(|(j, _)| j);
        let mut boxes = vec![(region.lo, region.hi)];
        if let Some(j) = partner {
            boxes.push(seg_boxes[&j]);
        }
        let win = Window::around(&boxes, spacing);
        let r = win.mask(reference, region.label);
        let w = weights(&r);
        let (nsd, hm) = match partner {
            None => {
                let max = r.data().iter().zip(&w).filter(|(&l, _)| l != 0).map(|(_, &d)| d).fold(0.0, f64::max);
                (1.0, max)
            }
            Some(j) => {
                let s = win.mask(seg, j);
                let (mut num, mut den, mut max) = (0.0, 0.0, 0.0f64);
                for ((&a, &b), &d) in r.data().iter().zip(s.data()).zip(&w) {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    den += d;
                    if a != b {
                        num += d;
                        max = max.max(d);
                    }
                }
                (if den == 0.0 { 0.0 } else { num / den }, max)
            }
        };
        out.per_object.push((region.label, nsd, hm));
    }
    if !out.per_object.is_empty() {
        let n = out.per_object.len() as f64;
        out.nsd = out.per_object.iter().map(|p| p.1).sum::<f64>() / n;
        out.hausdorff = out.per_object.iter().map(|p| p.2).sum::<f64>() / n;
    }
    Ok(out)
}
