//! Scale-normalized Laplacian-of-Gaussian and its maximum projection over scales.

use super::conv::{convolve_axis, gaussian_kernel, gaussian_second_derivative_kernel, Taps};
use crate::error::{invalid, Result};
use crate::image::VolumetricImage;
use crate::scalar::Real;

/// Maximum projection of the normalized LoG response over a set of scales.
#[derive(Clone, Debug)]
pub struct ScaleSpaceMax<T> {
    /// Largest response per voxel.
    pub response: VolumetricImage<T>,
    /// Physical sigma that produced the response (smallest on ties).
    pub scale: VolumetricImage<T>,
}

/// Scales `min, min + step, ...` up to and including `max`.
pub fn scale_range(sigma_min: f64, sigma_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(sigma_min.is_finite() && sigma_max.is_finite() && step.is_finite()) {
        return invalid("scale range must be finite");
    }
    if sigma_min <= 0.0 || sigma_max < sigma_min {
        return invalid(format!("invalid scale range [{sigma_min}, {sigma_max}]"));
    }
    if step <= 0.0 {
        return invalid(format!("scale step must be > 0, got {step}"));
    }
    let n = ((sigma_max - sigma_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| sigma_min + k as f64 * step).collect())
}

/// Negated LoG at physical scale `sigma`, multiplied by `sigma^3`, so bright
/// blobs of radius `sqrt(2) * sigma` give positive maxima.
pub fn normalized_log<T: Real>(img: &VolumetricImage<T>, sigma: f64) -> Result<VolumetricImage<T>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return invalid(format!("LoG sigma must be finite and > 0, got {sigma}"));
    }
    let dims = img.dims();
    let sp = img.spacing();
    let gauss: Vec<Vec<f64>> = (0..3).map(|a| gaussian_kernel(sigma / sp[a])).collect();
    let mut acc = vec![T::zero(); img.len()];
    for a in 0..3 {
        if dims[a] == 1 {
            continue;
        }
        let mut d2 = gaussian_second_derivative_kernel(sigma / sp[a]);
        let inv = 1.0 / (sp[a] * sp[a]);
        d2.iter_mut().for_each(|w| *w *= inv);
        let mut term = convolve_axis(img.data(), dims, a, &d2, Taps::Difference);
        for b in (0..3).filter(|&b| b != a && dims[b] > 1) {
            term = convolve_axis(&term, dims, b, &gauss[b], Taps::Plain);
        }
        acc.iter_mut().zip(term).for_each(|(s, t)| *s += t);
    }
    let norm = T::of(-sigma.powi(3));
    acc.iter_mut().for_each(|v| *v *= norm);
    VolumetricImage::from_grid(*img.grid(), acc)
}

/// Maximum projection over `sigma_min..=sigma_max` in steps of `step`.
pub fn log_scale_space_max<T: Real>(
    img: &VolumetricImage<T>,
    sigma_min: f64,
    sigma_max: f64,
    step: f64,
) -> Result<ScaleSpaceMax<T>> {
    log_scale_space_max_scales(img, &scale_range(sigma_min, sigma_max, step)?)
}

/// Maximum projection over an explicit scale list. Order of the list does not
/// matter; only two response volumes are held at any time.
pub fn log_scale_space_max_scales<T: Real>(img: &VolumetricImage<T>, scales: &[f64]) -> Result<ScaleSpaceMax<T>> {
    if scales.is_empty() {
        return invalid("empty scale set");
    }
    let mut sorted = scales.to_vec();
    if sorted.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return invalid(format!("scales must be finite and > 0, got {scales:?}"));
    }
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut response = normalized_log(img, sorted[0])?;
    let mut scale = VolumetricImage::filled(img.dims(), img.spacing(), T::of(sorted[0]))?;
    for &s in &sorted[1..] {
        let r = normalized_log(img, s)?;
        let sv = T::of(s);
        for ((best, arg), v) in response.data_mut().iter_mut().zip(scale.data_mut()).zip(r.data()) {
            if *v > *best {
                *best = *v;
                *arg = sv;
            }
        }
    }
    Ok(ScaleSpaceMax { response, scale })
}
