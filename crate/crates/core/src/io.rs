//! Multi-page 16-bit TIFF volumes (one page per z-slice) with a spacing sidecar.
//!
//! Intensities are stored as `round(v * 65535)` and read back as `v / 65535`.
//! The sidecar lives next to the image with the extension replaced by `meta`
//! and holds `spacing_x`, `spacing_y` and `spacing_z`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::encoder::{colortype, TiffEncoder};

use crate::error::{invalid, Error, Result};
use crate::image::{Dims, LabelImage, Spacing, VolumetricImage};
use crate::kv::KeyValues;
use crate::scalar::Real;

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta")
}

pub fn write_spacing(path: &Path, spacing: Spacing) -> Result<()> {
    let mut kv = KeyValues::new();
    kv.set("spacing_x", spacing[0]);
    kv.set("spacing_y", spacing[1]);
    kv.set("spacing_z", spacing[2]);
    kv.write(&sidecar_path(path))
}

/// Spacing from the sidecar, or `None` when the sidecar is absent.
pub fn read_spacing(path: &Path) -> Result<Option<Spacing>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let kv = KeyValues::read(&side)?;
    let mut s = [1.0; 3];
    for (a, key) in ["spacing_x", "spacing_y", "spacing_z"].iter().enumerate() {
        s[a] = kv.get_f64(key)?.ok_or_else(|| Error::Format(format!("{}: missing {key}", side.display())))?;
    }
    Ok(Some(s))
}

fn write_pages(path: &Path, dims: Dims, pages: impl Fn(usize) -> Vec<u16>) -> Result<()> {
    let w = u32::try_from(dims[0]).map_err(|_| Error::InvalidInput("image too wide".into()))?;
    let h = u32::try_from(dims[1]).map_err(|_| Error::InvalidInput("image too tall".into()))?;
    let mut enc = TiffEncoder::new(BufWriter::new(File::create(path)?))?;
    for z in 0..dims[2] {
        enc.write_image::<colortype::Gray16>(w, h, &pages(z))?;
    }
    Ok(())
}

fn read_pages(path: &Path) -> Result<(Dims, Vec<f64>, bool)> {
    let mut dec = Decoder::new(BufReader::new(File::open(path)?))?.with_limits(Limits::unlimited());
    let mut data = Vec::new();
    let mut dims = [0usize; 3];
    let mut integral = true;
    loop {
        let (w, h) = dec.dimensions()?;
        if dims[2] == 0 {
            dims[0] = w as usize;
            dims[1] = h as usize;
        } else if dims[0] != w as usize || dims[1] != h as usize {
            return Err(Error::Format(format!("{}: page {} has a different size", path.display(), dims[2])));
        }
        match dec.read_image()? {
            DecodingResult::U16(v) => data.extend(v.into_iter().map(f64::from)),
            DecodingResult::U8(v) => data.extend(v.into_iter().map(|b| f64::from(b) * 257.0)),
            DecodingResult::F32(v) => {
                integral = false;
                data.extend(v.into_iter().map(f64::from))
            }
            _ => return Err(Error::Format(format!("{}: unsupported pixel type", path.display()))),
        }
        dims[2] += 1;
        if !dec.more_images() {
            break;
        }
        dec.next_image()?;
    }
    if data.len() != dims[0] * dims[1] * dims[2] {
        return Err(Error::Format(format!("{}: expected single-channel pages", path.display())));
    }
    Ok((dims, data, integral))
}

/// Writes a normalized volume. Fails if any voxel lies outside `[0, 1]`.
pub fn write_volume<T: Real>(path: &Path, img: &VolumetricImage<T>) -> Result<()> {
    img.check_normalized()?;
    let g = *img.grid();
    let plane = g.dims[0] * g.dims[1];
    write_pages(path, g.dims, |z| {
        img.data()[z * plane..(z + 1) * plane]
            .iter()
            .map(|v| (v.as_f64() * 65535.0).round() as u16)
            .collect()
    })?;
    write_spacing(path, g.spacing)
}

/// Reads a volume; spacing comes from the sidecar, defaulting to 1.
pub fn read_volume<T: Real>(path: &Path) -> Result<VolumetricImage<T>> {
    let (dims, raw, integral) = read_pages(path)?;
    let spacing = read_spacing(path)?.unwrap_or([1.0; 3]);
    let scale = if integral { 1.0 / 65535.0 } else { 1.0 };
    VolumetricImage::new(dims, spacing, raw.into_iter().map(|v| T::of(v * scale)).collect())
}

pub fn write_labels(path: &Path, labels: &LabelImage) -> Result<()> {
    if labels.max_label() > u32::from(u16::MAX) {
        return invalid(format!("label {} does not fit 16 bits", labels.max_label()));
    }
    let g = *labels.grid();
    let plane = g.dims[0] * g.dims[1];
    write_pages(path, g.dims, |z| labels.data()[z * plane..(z + 1) * plane].iter().map(|&l| l as u16).collect())?;
    write_spacing(path, g.spacing)
}

pub fn read_labels(path: &Path) -> Result<LabelImage> {
    let (dims, raw, integral) = read_pages(path)?;
    if !integral {
        return Err(Error::Format(format!("{}: label images must be integer typed", path.display())));
    }
    let spacing = read_spacing(path)?.unwrap_or([1.0; 3]);
    LabelImage::new(dims, spacing, raw.into_iter().map(|v| v as u32).collect())
}
