use crate::error::{invalid, Result};
use crate::image::{LabelImage, VolumetricImage};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageQuality {
    pub mean_fg: f64,
    pub mean_bg: f64,
    /// Population standard deviation of the background.
    pub std_bg: f64,
    pub snr: f64,
    pub cnr: f64,
    /// Set when the background is constant and both ratios are infinite.
    pub degenerate: bool,
}

/// Signal- and contrast-to-noise ratios of `img` with foreground `fg != 0`.
pub fn image_quality<T: Real>(img: &VolumetricImage<T>, fg: &LabelImage) -> Result<ImageQuality> {
    if !img.grid().same_shape(fg.grid()) {
        return invalid("image and mask differ in shape");
    }
    let (mut nf, mut sf, mut nb, mut sb) = (0usize, 0.0, 0usize, 0.0);
    for (&v, &l) in img.data().iter().zip(fg.data()) {
        if l != 0 {
            nf += 1;
            sf += v.as_f64();
        } else {
            nb += 1;
            sb += v.as_f64();
        }
    }
    if nf == 0 || nb == 0 {
        return invalid("image quality needs both foreground and background voxels");
    }
    let mean_fg = sf / nf as f64;
    let mean_bg = sb / nb as f64;
    let var: f64 = img
        .data()
        .iter()
        .zip(fg.data())
        .filter(|(_, &l)| l == 0)
        .map(|(v, _)| (v.as_f64() - mean_bg).powi(2))
        .sum::<f64>()
        / nb as f64;
    let std_bg = var.sqrt();
    let degenerate = std_bg == 0.0;
    let (snr, cnr) = if degenerate {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (mean_fg / std_bg, (mean_fg - mean_bg).abs() / std_bg)
    };
    Ok(ImageQuality { mean_fg, mean_bg, std_bg, snr, cnr, degenerate })
}
