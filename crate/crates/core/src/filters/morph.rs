//! Grey-level reconstruction by dilation and h-maxima extraction (26-connected).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{invalid, Result};
use crate::image::{for_each_neighbor, Connectivity, Grid, LabelImage, VolumetricImage};
use crate::scalar::Real;

struct Entry {
    value: f64,
    index: usize,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.value.total_cmp(&o.value).then_with(|| o.index.cmp(&self.index))
    }
}

/// Reconstruction by dilation of `marker` under `mask` (`marker <= mask` is enforced
/// by taking the pointwise minimum first).
pub fn reconstruct_by_dilation<T: Real>(marker: &VolumetricImage<T>, mask: &VolumetricImage<T>) -> Result<VolumetricImage<T>> {
    if !marker.grid().same_shape(mask.grid()) {
        return invalid("marker and mask shapes differ");
    }
    let g = *mask.grid();
    let m: Vec<f64> = mask.data().iter().map(|v| v.as_f64()).collect();
    let mut rec: Vec<f64> = marker.data().iter().zip(&m).map(|(a, b)| a.as_f64().min(*b)).collect();
    let mut heap: BinaryHeap<Entry> = rec.iter().enumerate().map(|(index, &value)| Entry { value, index }).collect();
    while let Some(Entry { value, index }) = heap.pop() {
        if value < rec[index] {
            continue;
        }
        for_each_neighbor(&g, index, Connectivity::TwentySix, |j| {
            let cand = value.min(m[j]);
            if cand > rec[j] {
                rec[j] = cand;
                heap.push(Entry { value: cand, index: j });
            }
        });
    }
    VolumetricImage::from_grid(g, rec.into_iter().map(T::of).collect())
}

/// Labels plateaus that have no higher neighbour and at least one lower one.
/// A plateau covering the whole image is not a maximum.
pub fn regional_maxima(grid: &Grid, values: &[f64]) -> LabelImage {
    let mut labels = vec![0u32; grid.len()];
    let mut visited = vec![false; grid.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    let mut members = Vec::new();
    for start in 0..grid.len() {
        if visited[start] {
            continue;
        }
        let v = values[start];
        visited[start] = true;
        queue.push_back(start);
        members.clear();
        let mut higher = false;
        let mut lower = false;
        while let Some(i) = queue.pop_front() {
            members.push(i);
            for_each_neighbor(grid, i, Connectivity::TwentySix, |j| {
                let w = values[j];
                if w == v {
                    if !visited[j] {
                        visited[j] = true;
                        queue.push_back(j);
                    }
                } else if w > v {
                    higher = true;
                } else {
                    lower = true;
                }
            });
        }
        if !higher && lower {
            next += 1;
            for &i in &members {
                labels[i] = next;
            }
        }
    }
    LabelImage::from_grid(*grid, labels).expect("grid already validated")
}

/// Regional maxima of the reconstruction of `img - h` under `img`, labelled in
/// raster order. Maxima whose height above the surrounding saddle is `<= h`
/// are suppressed.
pub fn h_maxima_extract<T: Real>(img: &VolumetricImage<T>, h: f64) -> Result<LabelImage> {
    if !(h.is_finite() && h >= 0.0) {
        return invalid(format!("h must be finite and >= 0, got {h}"));
    }
    let shifted = img.map(|v| T::of(v.as_f64() - h));
    let rec = reconstruct_by_dilation(&shifted, img)?;
    let vals: Vec<f64> = rec.data().iter().map(|v| v.as_f64()).collect();
    Ok(regional_maxima(img.grid(), &vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(vals: &[f64]) -> VolumetricImage<f64> {
        VolumetricImage::new([vals.len(), 1, 1], [1.0; 3], vals.to_vec()).unwrap()
    }

    #[test]
    fn two_peaks_survive_moderate_h() {
        let img = profile(&[0.0, 0.5, 1.0, 0.4, 1.0, 0.5, 0.0]);
        let l = h_maxima_extract(&img, 0.3).unwrap();
        assert_eq!(l.data(), &[0, 0, 1, 0, 2, 0, 0]);
        let merged = h_maxima_extract(&img, 0.6).unwrap();
        assert_eq!(merged.max_label(), 1);
    }

    #[test]
    fn low_bump_and_constant_are_suppressed() {
        assert_eq!(h_maxima_extract(&profile(&[0.0, 0.1, 0.2, 0.1, 0.0]), 0.3).unwrap().max_label(), 0);
        assert_eq!(h_maxima_extract(&profile(&[0.4; 6]), 0.1).unwrap().max_label(), 0);
        assert_eq!(h_maxima_extract(&profile(&[0.0, 0.3, 0.0]), 0.3).unwrap().max_label(), 0);
    }

    #[test]
    fn plateau_is_one_label() {
        let l = h_maxima_extract(&profile(&[0.0, 1.0, 1.0, 1.0, 0.0]), 0.5).unwrap();
        assert_eq!(l.data(), &[0, 1, 1, 1, 0]);
    }
}
