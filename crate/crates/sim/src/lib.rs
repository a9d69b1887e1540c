//! Synthetic embryo benchmark generator.
//!
//! Nuclei move under pairwise repulsion and adhesion inside a spherical
//! shell, divide at the end of their cycle, and are rendered into raw and
//! label volumes. Raw volumes then pass through an acquisition model with
//! attenuation, PSF blur, dark current, shot noise and readout noise.

pub mod acquire;
pub mod benchmark;
pub mod error;
pub mod model;
pub mod physics;
pub mod render;
pub mod rng;

pub use acquire::{acquire_view, distort, flip_xz, AcquisitionParams, Attenuation, Mode, NoiseKey, Psf};
pub use benchmark::{generate_benchmark, read_truth, truth_track_graph, BenchmarkConfig, Dataset, TruthRow};
pub use error::{Error, Result};
pub use model::{init_state, relax, simulate, step_simulation, total_displacement, SimObject, SimParams, SimState};
pub use physics::{adhesive_disp, boundary_disp, repulsive_disp, Shell};
pub use render::render_frame;
