use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{invalid, Result};
use crate::image::{for_each_neighbor, Connectivity, LabelImage, VolumetricImage};
use crate::scalar::Real;

/// Marker-controlled watershed flooding the inverted intensity: bright voxels
/// are reached first. Markers are the non-zero voxels of `markers`. When given,
/// only non-zero voxels of `mask` are flooded. Equal priorities are served in
/// insertion order, so plateaus are shared by distance from the markers;
/// ridge voxels go to the basin that reaches them first.
pub fn seeded_watershed<T: Real>(
    img: &VolumetricImage<T>,
    markers: &LabelImage,
    mask: Option<&LabelImage>,
) -> Result<LabelImage> {
    let g = *img.grid();
    if !g.same_shape(markers.grid()) || mask.is_some_and(|m| !g.same_shape(m.grid())) {
        return invalid("watershed inputs differ in shape");
    }
    let inside = |i: usize| mask.map_or(true, |m| m.data()[i] != 0);
    let mut out = vec![0u32; g.len()];
    let mut heap = BinaryHeap::new();
    let mut order = 0u64;
    let key = |i: usize| Reverse(ordered(-img.data()[i].as_f64()));
    for (i, &l) in markers.data().iter().enumerate() {
        if l == 0 {
            continue;
        }
        if !inside(i) {
            return Err(crate::Error::Contract(format!("marker {l} at {:?} lies outside the mask", g.coords(i))));
        }
        out[i] = l;
        heap.push((key(i), Reverse(order), i));
        order += 1;
    }
    while let Some((_, _, i)) = heap.pop() {
        let l = out[i];
        for_each_neighbor(&g, i, Connectivity::Six, |j| {
            if out[j] == 0 && inside(j) {
                out[j] = l;
                heap.push((key(j), Reverse(order), j));
                order += 1;
            }
        });
    }
    LabelImage::from_grid(g, out)
}

/// Total order wrapper for heap keys.
#[derive(Clone, Copy)]
struct Ordered(f64);
impl PartialEq for Ordered {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o).is_eq()
    }
}
impl Eq for Ordered {}
impl PartialOrd for Ordered {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Ordered {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}
fn ordered(v: f64) -> Ordered {
    Ordered(v)
}
