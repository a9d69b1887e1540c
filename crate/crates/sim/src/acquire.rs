//! Microscope acquisition model: attenuation along the optical axis, PSF
//! blur, dark current, photon shot noise and readout noise.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Poisson};

use voxseg_core::filters::gaussian_smooth_voxels;
use voxseg_core::Volume;

use crate::error::{Error, Result};
use crate::rng::{keyed, normal, Purpose};

/// Acquisition scheme of a time series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// One view per frame.
    #[default]
    Sv,
    /// One view per frame, alternating between the two orientations.
    SeMv,
    /// Both views at every frame.
    SiMv,
}

impl Mode {
    /// Views acquired at `frame`.
    pub fn views(self, frame: u32) -> Vec<u8> {
        match self {
            Mode::Sv => vec![0],
            Mode::SeMv => vec![(frame % 2) as u8],
            Mode::SiMv => vec![0, 1],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sv => "SV",
            Mode::SeMv => "SeMV",
            Mode::SiMv => "SiMV",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sv" => Ok(Mode::Sv),
            "semv" => Ok(Mode::SeMv),
            "simv" => Ok(Mode::SiMv),
            _ => Err(Error::InvalidParams(format!("unknown acquisition mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Psf {
    /// Separable Gaussian with sigma in voxels per axis.
    Gaussian { sigma_vox: [f64; 3] },
    /// Explicit odd-sized kernel with unit mass.
    Kernel(Volume),
}

/// Linear intensity ramp along `axis`: factor 1 at the slice nearest the
/// detection objective, 0 at the farthest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attenuation {
    pub axis: usize,
    /// Objective sits at the high-index end of the axis.
    pub toward_high: bool,
}

impl Attenuation {
    pub fn factor(&self, i: usize, n: usize) -> f64 {
        if n <= 1 {
            return 1.0;
        }
        let t = i as f64 / (n - 1) as f64;
        if self.toward_high {
            t
        } else {
            1.0 - t
        }
    }

    pub fn inverted(self) -> Self {
        Self { toward_high: !self.toward_high, ..self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionParams {
    pub attenuation: Option<Attenuation>,
    pub psf: Option<Psf>,
    pub dark_offset: f64,
    /// Photons per unit intensity; `None` skips shot noise.
    pub photons: Option<f64>,
    pub sigma_agn: f64,
    pub mode: Mode,
}

impl Default for AcquisitionParams {
    fn default() -> Self {
        Self {
            attenuation: Some(Attenuation { axis: 2, toward_high: true }),
            psf: Some(Psf::Gaussian { sigma_vox: [1.0, 1.0, 3.0] }),
            dark_offset: 0.05,
            photons: Some(100.0),
            sigma_agn: 0.001,
            mode: Mode::Sv,
        }
    }
}

impl AcquisitionParams {
    /// Everything switched off: `distort` only clamps.
    pub fn ideal() -> Self {
        Self { attenuation: None, psf: None, dark_offset: 0.0, photons: None, sigma_agn: 0.0, mode: Mode::Sv }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.sigma_agn >= 0.0 && self.sigma_agn.is_finite()) {
            return bad(format!("sigma_agn must be >= 0, got {}", self.sigma_agn));
        }
        if !(self.dark_offset >= 0.0 && self.dark_offset.is_finite()) {
            return bad(format!("dark_offset must be >= 0, got {}", self.dark_offset));
        }
        if let Some(k) = self.photons {
            if !(k > 0.0 && k.is_finite()) {
                return bad(format!("photon scale must be > 0, got {k}"));
            }
        }
        if let Some(a) = self.attenuation {
            if a.axis > 2 {
                return bad(format!("attenuation axis {} out of range", a.axis));
            }
        }
        match &self.psf {
            Some(Psf::Gaussian { sigma_vox }) if sigma_vox.iter().any(|s| !(*s >= 0.0 && s.is_finite())) => {
                bad(format!("psf sigma must be >= 0, got {sigma_vox:?}"))
            }
            Some(Psf::Kernel(k)) => {
                let mass: f64 = k.data().iter().sum();
                if k.dims().iter().any(|d| d % 2 == 0) {
                    bad(format!("psf kernel dims must be odd, got {:?}", k.dims()))
                } else if (mass - 1.0).abs() > 1e-6 {
                    bad(format!("psf kernel must have unit mass, got {mass}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Identifies the random streams of one acquired image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseKey {
    pub seed: u64,
    pub frame: u32,
    pub view: u8,
}

impl NoiseKey {
    fn stream(&self, slice: usize, purpose: Purpose) -> rand_chacha::ChaCha8Rng {
        keyed(self.seed, u64::from(self.frame), (u64::from(self.view) << 32) | slice as u64, purpose)
    }
}

/// Rotation by 180 degrees about y: x and z reversed.
pub fn flip_xz(img: &Volume) -> Volume {
    let [nx, ny, nz] = img.dims();
    Volume::from_fn([nx, ny, nz], img.spacing(), |x, y, z| img.get(nx - 1 - x, y, nz - 1 - z))
        .expect("same shape as the source")
}

fn convolve_kernel(img: &Volume, k: &Volume) -> Volume {
    let [nx, ny, nz] = img.dims();
    let kd = k.dims();
    let h = [kd[0] / 2, kd[1] / 2, kd[2] / 2];
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    Volume::from_fn([nx, ny, nz], img.spacing(), |x, y, z| {
        let mut acc = 0.0;
        for kz in 0..kd[2] {
            let sz = clamp(z as isize + h[2] as isize - kz as isize, nz);
            for ky in 0..kd[1] {
                let sy = clamp(y as isize + h[1] as isize - ky as isize, ny);
                for kx in 0..kd[0] {
                    let w = k.get(kx, ky, kz);
                    if w != 0.0 {
                        acc += w * img.get(clamp(x as isize + h[0] as isize - kx as isize, nx), sy, sz);
                    }
                }
            }
        }
        acc
    })
    .expect("same shape as the source")
}

/// Applies the acquisition model to a raw image in the camera frame and
/// clamps the result to `[0, 1]`.
pub fn distort(img: &Volume, acq: &AcquisitionParams, key: NoiseKey) -> Result<Volume> {
    acq.validate()?;
    let mut out = img.clone();
    let dims = out.dims();
    let plane = dims[0] * dims[1];

    if let Some(att) = acq.attenuation {
        let n = dims[att.axis];
        let g = *out.grid();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v *= att.factor(g.coords(i)[att.axis], n);
        }
    }
    out = match &acq.psf {
        Some(Psf::Gaussian { sigma_vox }) => gaussian_smooth_voxels(&out, *sigma_vox)?,
        Some(Psf::Kernel(k)) => convolve_kernel(&out, k),
        None => out,
    };
    if acq.dark_offset > 0.0 {
        out.data_mut().iter_mut().for_each(|v| *v += acq.dark_offset);
    }
    if let Some(k) = acq.photons {
        for (z, slice) in out.data_mut().chunks_mut(plane).enumerate() {
            let mut rng = key.stream(z, Purpose::Poisson);
            for v in slice {
                let lambda = k * v.max(0.0);
                *v = if lambda > 0.0 {
                    Poisson::new(lambda).map_err(|e| Error::InvalidParams(e.to_string()))?.sample(&mut rng) / k
                } else {
                    0.0
                };
            }
        }
    }
    if acq.sigma_agn > 0.0 {
        for (z, slice) in out.data_mut().chunks_mut(plane).enumerate() {
            let mut rng = key.stream(z, Purpose::Readout);
            for v in slice {
                *v += acq.sigma_agn * normal(&mut rng);
            }
        }
    }
    out.data_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(out)
}

/// Acquires view 0 (world frame) or view 1 (rotated 180 degrees about y,
/// returned in its own camera frame).
pub fn acquire_view(raw: &Volume, acq: &AcquisitionParams, key: NoiseKey) -> Result<Volume> {
    if key.view == 0 {
        distort(raw, acq, key)
    } else {
        distort(&flip_xz(raw), acq, key)
    }
}
