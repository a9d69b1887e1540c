//! Procedural nucleus rendering with a matching ground-truth label image.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;

use voxseg_core::{Dims, FeatureTable, LabelImage, Spacing, Volume};

use crate::error::Result;
use crate::model::{SimObject, SimState};
use crate::rng::{keyed, unit_vector, Purpose};

pub const TRUTH_COLUMNS: [&str; 6] = ["parent_id", "x", "y", "z", "radius", "phase"];

const SURFACE_LEVEL: f64 = 0.6;
const TEXTURE_AMPLITUDE: f64 = 0.02;

/// Per-object shape and texture derived from its appearance seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Appearance {
    pub semi_axes: [f64; 3],
    waves: Vec<([f64; 3], f64)>,
}

impl Appearance {
    /// Axis-aligned ellipsoid of the same volume as the sphere of radius `r`,
    /// one axis stretched by up to 1.2 relative to the other two.
    pub fn of(o: &SimObject) -> Self {
        let mut rng = keyed(o.appearance_seed, 0, o.id, Purpose::Appearance);
        let q: f64 = rng.gen_range(1.0..=1.2);
        let long = rng.gen_range(0..3usize);
        let mut semi_axes = [o.r * q.powf(-1.0 / 3.0); 3];
        semi_axes[long] = o.r * q.powf(2.0 / 3.0);
        let waves = (0..3)
            .map(|_| {
                let k = unit_vector(&mut rng);
                let f = TAU / (o.r * rng.gen_range(0.5..1.0));
                ([k[0] * f, k[1] * f, k[2] * f], rng.gen_range(0.0..TAU))
            })
            .collect();
        Self { semi_axes, waves }
    }

    /// Intensity at normalized radius `rho <= 1` and offset `d` from the centre.
    fn intensity(&self, rho: f64, d: [f64; 3]) -> f64 {
        let base = SURFACE_LEVEL + (1.0 - SURFACE_LEVEL) * (FRAC_PI_2 * rho).cos();
        let tex: f64 = self.waves.iter().map(|(k, ph)| (k[0] * d[0] + k[1] * d[1] + k[2] * d[2] + ph).sin()).sum();
        (base + TEXTURE_AMPLITUDE / 3.0 * tex).clamp(0.0, 1.0)
    }
}

fn stamp(o: &SimObject, raw: &mut Volume, labels: &mut LabelImage) {
    let app = Appearance::of(o);
    let g = *raw.grid();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let c = o.x[a] / g.spacing[a];
        let h = app.semi_axes[a] / g.spacing[a] + 1.0;
        lo[a] = (c - h).floor().max(0.0) as usize;
        hi[a] = ((c + h).ceil().max(-1.0) + 1.0).min(g.dims[a] as f64) as usize;
    }
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            for x in lo[0]..hi[0] {
                let p = [x as f64 * g.spacing[0], y as f64 * g.spacing[1], z as f64 * g.spacing[2]];
                let d = [p[0] - o.x[0], p[1] - o.x[1], p[2] - o.x[2]];
                let e: f64 = (0..3).map(|a| (d[a] / app.semi_axes[a]).powi(2)).sum();
                if e > 1.0 {
                    continue;
                }
                let i = g.index(x, y, z);
                raw.data_mut()[i] = app.intensity(e.sqrt(), d);
                labels.data_mut()[i] = o.id as u32;
            }
        }
    }
}

/// Renders every object in ascending id order, so higher ids win overlaps.
///
/// The truth table (operator 0) lists each object that owns at least one
/// voxel: parent id (0 for founders), centre in voxel coordinates, radius and
/// phase.
pub fn render_frame(state: &SimState, dims: Dims, spacing: Spacing) -> Result<(Volume, LabelImage, FeatureTable)> {
    let mut raw = Volume::zeros(dims, spacing)?;
    let mut labels = LabelImage::zeros(dims, spacing)?;
    let mut order: Vec<&SimObject> = state.objects.iter().collect();
    order.sort_by_key(|o| o.id);
    for o in &order {
        stamp(o, &mut raw, &mut labels);
    }
    let present: BTreeSet<u32> = labels.data().iter().copied().filter(|&l| l != 0).collect();
    let mut truth = FeatureTable::new(0, &TRUTH_COLUMNS);
    for o in order.into_iter().filter(|o| present.contains(&(o.id as u32))) {
        let v = [o.x[0] / spacing[0], o.x[1] / spacing[1], o.x[2] / spacing[2]];
        truth.push_row(o.id, &[o.parent_id.unwrap_or(0) as f64, v[0], v[1], v[2], o.r, o.phase])?;
    }
    Ok((raw, labels, truth))
}
