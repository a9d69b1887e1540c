use crate::error::Result;
use crate::image::VolumetricImage;
use crate::scalar::Real;

/// Median over a clamped box of half-size `radius` per axis.
pub fn median_filter<T: Real>(img: &VolumetricImage<T>, radius: [usize; 3]) -> Result<VolumetricImage<T>> {
    let g = *img.grid();
    let d = img.data();
    let mut win = Vec::new();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let c = g.coords(i);
        win.clear();
        for dz in -(radius[2] as isize)..=radius[2] as isize {
            let z = (c[2] as isize + dz).clamp(0, g.dims[2] as isize - 1) as usize;
            for dy in -(radius[1] as isize)..=radius[1] as isize {
                let y = (c[1] as isize + dy).clamp(0, g.dims[1] as isize - 1) as usize;
                for dx in -(radius[0] as isize)..=radius[0] as isize {
                    let x = (c[0] as isize + dx).clamp(0, g.dims[0] as isize - 1) as usize;
                    win.push(d[g.index(x, y, z)]);
                }
            }
        }
        let mid = win.len() / 2;
        let (_, m, _) = win.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out.push(*m);
    }
    VolumetricImage::from_grid(g, out)
}
