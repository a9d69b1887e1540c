//! Counter-style random streams keyed by `(seed, frame, object, purpose)`.
//!
//! Every draw comes from a fresh ChaCha stream seeded with the key bytes, so
//! results never depend on the order in which objects or slices are visited.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::physics::{norm, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Division = 2,
    Tie = 3,
    Boundary = 4,
    Appearance = 5,
    Poisson = 6,
    Readout = 7,
    Cycle = 8,
}

pub fn keyed(seed: u64, frame: u64, object: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&frame.to_le_bytes());
    key[16..24].copy_from_slice(&object.to_le_bytes());
    key[24..].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Uniform direction on the unit sphere.
pub fn unit_vector<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = norm(v);
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub(crate) fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
