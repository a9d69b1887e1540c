use crate::image::{for_each_neighbor, Connectivity, Point, PointSet, VolumetricImage};
use crate::scalar::Real;

/// Local maxima over the in-bounds 26-neighbourhood with value `>= threshold`.
///
/// `strict` requires the voxel to exceed every neighbour; otherwise it must
/// be at least as large (plateaus yield every plateau voxel).
pub fn local_extrema<T: Real>(img: &VolumetricImage<T>, strict: bool, threshold: T) -> PointSet<T> {
    local_extrema_where(img, strict, |i| img.data()[i] >= threshold)
}

/// As [`local_extrema`] with an arbitrary per-voxel admission predicate.
pub fn local_extrema_where<T: Real>(img: &VolumetricImage<T>, strict: bool, admit: impl Fn(usize) -> bool) -> PointSet<T> {
    let g = img.grid();
    let d = img.data();
    let mut out = Vec::new();
    for i in 0..g.len() {
        let v = d[i];
        if v.is_nan() || !admit(i) {
            continue;
        }
        let mut ok = true;
        for_each_neighbor(g, i, Connectivity::TwentySix, |j| {
            if strict && d[j] >= v || !strict && d[j] > v {
                ok = false;
            }
        });
        if ok {
            out.push(Point { pos: g.coords(i), value: v });
        }
    }
    out
}
