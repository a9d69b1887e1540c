//! Separable 1-D convolution along one axis with clamp-to-edge borders.

use crate::image::Dims;
use crate::scalar::Real;

/// Visits every line parallel to `axis`, handing the line's voxel stride and start index.
fn for_each_line(dims: Dims, axis: usize, mut f: impl FnMut(usize, usize)) {
    let stride = [1, dims[0], dims[0] * dims[1]][axis];
    match axis {
        0 => {
            for z in 0..dims[2] {
                for y in 0..dims[1] {
                    f(stride, dims[0] * (y + dims[1] * z));
                }
            }
        }
        1 => {
            for z in 0..dims[2] {
                for x in 0..dims[0] {
                    f(stride, x + dims[0] * dims[1] * z);
                }
            }
        }
        _ => {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    f(stride, x + dims[0] * y);
                }
            }
        }
    }
}

/// How kernel taps combine with the samples.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Taps {
    /// `sum_k w_k v[x + k]`
    Plain,
    /// `sum_k w_k (v[x + k] - v[x])`, exact zero on constant lines for zero-sum kernels.
    Difference,
}

/// Convolves along `axis` with a symmetric odd-length kernel centred on its middle tap.
pub(crate) fn convolve_axis<T: Real>(src: &[T], dims: Dims, axis: usize, kernel: &[f64], taps: Taps) -> Vec<T> {
    let n = dims[axis];
    let r = kernel.len() / 2;
    let mut out = vec![T::zero(); src.len()];
    let mut line = vec![0.0f64; n + 2 * r];
    for_each_line(dims, axis, |stride, start| {
        for k in 0..n + 2 * r {
            let p = (k as isize - r as isize).clamp(0, n as isize - 1) as usize;
            line[k] = src[start + p * stride].as_f64();
        }
        for x in 0..n {
            let centre = line[x + r];
            let mut acc = 0.0;
            // Taps are paired outside-in so mirrored inputs give bit-identical outputs.
            match taps {
                Taps::Plain => {
                    for k in 0..r {
                        acc += kernel[k] * (line[x + k] + line[x + 2 * r - k]);
                    }
                    acc += kernel[r] * centre;
                }
                Taps::Difference => {
                    for k in 0..r {
                        acc += kernel[k] * ((line[x + k] - centre) + (line[x + 2 * r - k] - centre));
                    }
                }
            }
            out[start + x * stride] = T::of(acc);
        }
    });
    out
}

/// Sampled Gaussian truncated at `ceil(3 sigma)` and normalized to unit sum.
pub fn gaussian_kernel(sigma_vox: f64) -> Vec<f64> {
    let r = (3.0 * sigma_vox).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * r)
        .map(|i| {
            let x = i as f64 - r as f64;
            (-x * x / (2.0 * sigma_vox * sigma_vox)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Sampled second derivative of a Gaussian with the moment conditions of a
/// continuous second derivative enforced: zero sum and `sum x^2 k(x) = 2`.
pub fn gaussian_second_derivative_kernel(sigma_vox: f64) -> Vec<f64> {
    let r = (3.0 * sigma_vox).ceil().max(1.0) as usize;
    let s2 = sigma_vox * sigma_vox;
    let xs: Vec<f64> = (0..=2 * r).map(|i| i as f64 - r as f64).collect();
    let mut k: Vec<f64> = xs.iter().map(|&x| (x * x / (s2 * s2) - 1.0 / s2) * (-x * x / (2.0 * s2)).exp()).collect();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    k.iter_mut().for_each(|v| *v -= mean);
    let m2: f64 = xs.iter().zip(&k).map(|(x, w)| x * x * w).sum();
    k.iter_mut().for_each(|v| *v *= 2.0 / m2);
    k
}
