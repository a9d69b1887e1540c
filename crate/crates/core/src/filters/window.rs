use crate::error::Result;
use crate::image::VolumetricImage;
use crate::scalar::Real;

/// Summed-volume table with one leading zero plane per axis.
pub struct SummedVolume {
    dims: [usize; 3],
    sums: Vec<f64>,
}

impl SummedVolume {
    pub fn new<T: Real>(img: &VolumetricImage<T>) -> Self {
        let [nx, ny, nz] = img.dims();
        let (sx, sy) = (nx + 1, ny + 1);
        let mut sums = vec![0.0; sx * sy * (nz + 1)];
        let data = img.data();
        for z in 0..nz {
            for y in 0..ny {
                let mut row = 0.0;
                for x in 0..nx {
                    row += data[x + nx * (y + ny * z)].as_f64();
                    let i = (x + 1) + sx * ((y + 1) + sy * (z + 1));
                    sums[i] = row + sums[i - sx] + sums[i - sx * sy] - sums[i - sx - sx * sy];
                }
            }
        }
        Self { dims: [nx, ny, nz], sums }
    }

    /// Sum over the half-open box `[lo, hi)`.
    pub fn box_sum(&self, lo: [usize; 3], hi: [usize; 3]) -> f64 {
        let sx = self.dims[0] + 1;
        let sy = self.dims[1] + 1;
        let at = |x: usize, y: usize, z: usize| self.sums[x + sx * (y + sy * z)];
        at(hi[0], hi[1], hi[2]) - at(lo[0], hi[1], hi[2]) - at(hi[0], lo[1], hi[2]) - at(hi[0], hi[1], lo[2])
            + at(lo[0], lo[1], hi[2])
            + at(lo[0], hi[1], lo[2])
            + at(hi[0], lo[1], lo[2])
            - at(lo[0], lo[1], lo[2])
    }

    /// Mean over the window of half-size `radius` centred at `c`, clipped to the volume.
    pub fn window_mean_at(&self, c: [usize; 3], radius: [usize; 3]) -> f64 {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        let mut count = 1usize;
        for a in 0..3 {
            lo[a] = c[a].saturating_sub(radius[a]);
            hi[a] = (c[a] + radius[a] + 1).min(self.dims[a]);
            count *= hi[a] - lo[a];
        }
        self.box_sum(lo, hi) / count as f64
    }
}

/// Box mean of half-size `radius` voxels per axis. Border windows are clipped
/// and divided by their clipped voxel count.
pub fn window_mean<T: Real>(img: &VolumetricImage<T>, radius: [usize; 3]) -> Result<VolumetricImage<T>> {
    let table = SummedVolume::new(img);
    let g = *img.grid();
    let data = (0..g.len()).map(|i| T::of(table.window_mean_at(g.coords(i), radius))).collect();
    VolumetricImage::from_grid(g, data)
}
