//! Exact Euclidean distance map by separable lower-envelope passes.

use crate::error::Result;
use crate::image::{Grid, LabelImage, VolumetricImage};
use crate::scalar::Real;

/// What lies beyond the image border.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EdmBorder {
    /// The border is adjacent to background, bounding every distance.
    #[default]
    Background,
    /// Only voxels inside the image count as background. Without any
    /// background voxel all distances are infinite.
    Open,
}

/// Squared distance transform of one line, in place. `f` holds squared
/// distances (or infinity) sampled at spacing `s`.
fn edt_line(f: &mut [f64], s: f64, v: &mut Vec<usize>, z: &mut Vec<f64>, out: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        let hq = f[q] + (q as f64 * s).powi(2);
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let hp = f[p] + (p as f64 * s).powi(2);
                    let x = (hq - hp) / (2.0 * s * s * (q - p) as f64);
                    if x <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(x);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        return;
    }
    out.clear();
    let mut k = 0;
    for q in 0..n {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        out.push(f[p] + ((q as f64 - p as f64) * s).powi(2));
    }
    f.copy_from_slice(out);
}

fn squared_edt(grid: &Grid, background: impl Fn(usize) -> bool) -> Vec<f64> {
    let dims = grid.dims;
    let mut d: Vec<f64> = (0..grid.len()).map(|i| if background(i) { 0.0 } else { f64::INFINITY }).collect();
    let (mut v, mut z, mut out) = (Vec::new(), Vec::new(), Vec::new());
    let mut line = Vec::new();
    for axis in 0..3 {
        let n = dims[axis];
        let stride = [1, dims[0], dims[0] * dims[1]][axis];
        for start in 0..grid.len() {
            if grid.coords(start)[axis] != 0 {
                continue;
            }
            line.clear();
            line.extend((0..n).map(|k| d[start + k * stride]));
            edt_line(&mut line, grid.spacing[axis], &mut v, &mut z, &mut out);
            for k in 0..n {
                d[start + k * stride] = line[k];
            }
        }
    }
    d
}

/// Distance from every foreground voxel (non-zero label) to the nearest
/// background voxel, in physical units. Background voxels map to 0.
pub fn euclidean_distance_map<T: Real>(binary: &LabelImage, border: EdmBorder) -> Result<VolumetricImage<T>> {
    let g = *binary.grid();
    let data = binary.data();
    let sq = match border {
        EdmBorder::Open => squared_edt(&g, |i| data[i] == 0),
        EdmBorder::Background => {
            let pd = [g.dims[0] + 2, g.dims[1] + 2, g.dims[2] + 2];
            let pg = Grid::new(pd, g.spacing)?;
            let padded = squared_edt(&pg, |i| {
                let [x, y, z] = pg.coords(i);
                let inside = (1..=g.dims[0]).contains(&x) && (1..=g.dims[1]).contains(&y) && (1..=g.dims[2]).contains(&z);
                !inside || data[g.index(x - 1, y - 1, z - 1)] == 0
            });
            (0..g.len())
                .map(|i| {
                    let [x, y, z] = g.coords(i);
                    padded[pg.index(x + 1, y + 1, z + 1)]
                })
                .collect()
        }
    };
    VolumetricImage::from_grid(g, sq.into_iter().map(|v| T::of(v.sqrt())).collect())
}
