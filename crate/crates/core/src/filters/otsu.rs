use crate::error::{invalid, Result};
use crate::scalar::Real;

pub const OTSU_BINS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OtsuResult {
    /// Values `>= threshold` are foreground.
    pub threshold: f64,
    /// Set when the input holds a single distinct value.
    pub degenerate: bool,
}

/// Histogram over the data range, split into the two bins. Returns
/// `(bin index of the last background bin, threshold)`.
fn search(values: &[f64], lo: f64, hi: f64) -> (usize, f64) {
    let width = (hi - lo) / OTSU_BINS as f64;
    let mut hist = [0u64; OTSU_BINS];
    for &v in values {
        hist[bin_of(v, lo, width)] += 1;
    }
    let total = values.len() as f64;
    let centre = |b: usize| lo + (b as f64 + 0.5) * width;
    let sum_all: f64 = hist.iter().enumerate().map(|(b, &c)| c as f64 * centre(b)).sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let mut best = (0usize, f64::NEG_INFINITY);
    for t in 0..OTSU_BINS - 1 {
        w0 += hist[t] as f64;
        s0 += hist[t] as f64 * centre(t);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let d = s0 / w0 - (sum_all - s0) / w1;
        let between = w0 * w1 * d * d;
        if between > best.1 {
            best = (t, between);
        }
    }
    (best.0, lo + (best.0 + 1) as f64 * width)
}

#[inline]
fn bin_of(v: f64, lo: f64, width: f64) -> usize {
    (((v - lo) / width).floor().max(0.0) as usize).min(OTSU_BINS - 1)
}

/// Otsu threshold maximizing the between-class variance over a 256-bin
/// histogram spanning the data range. Ties resolve to the lower bin.
pub fn otsu_threshold<T: Real>(values: &[T]) -> Result<OtsuResult> {
    if values.is_empty() {
        return invalid("otsu threshold of an empty set");
    }
    let vals: Vec<f64> = values.iter().map(|v| v.as_f64()).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return invalid("otsu threshold of non-finite values");
    }
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo == hi {
        return Ok(OtsuResult { threshold: lo, degenerate: true });
    }
    let (_, threshold) = search(&vals, lo, hi);
    Ok(OtsuResult { threshold, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bimodal_splits_between_modes() {
        let mut v = vec![0.1f64; 500];
        v.extend(vec![0.9; 500]);
        let r = otsu_threshold(&v).unwrap();
        assert!(!r.degenerate);
        assert!(r.threshold > 0.1 && r.threshold <= 0.9);
        assert!(v.iter().filter(|&&x| x >= r.threshold).count() == 500);
    }

    #[test]
    fn constant_is_degenerate() {
        let r = otsu_threshold(&[0.5f32; 10]).unwrap();
        assert_eq!(r, OtsuResult { threshold: 0.5, degenerate: true });
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(otsu_threshold::<f64>(&[]).is_err());
        assert!(otsu_threshold(&[0.1, f64::NAN]).is_err());
    }
}
