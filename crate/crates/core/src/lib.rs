//! Volumetric nucleus detection, segmentation, fusion, tracking and evaluation.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common choices.

pub mod error;
pub mod filters;
pub mod fusion;
pub mod fuzzy;
pub mod image;
pub mod io;
pub mod kv;
pub mod metrics;
pub mod scalar;
pub mod seeds;
pub mod segment;
pub mod table;
pub mod track;
pub mod twang;

pub use error::{Error, Result};
pub use fuzzy::{Combine, FuzzySpec, Trapezoid};
pub use image::{Connectivity, Dims, Grid, LabelImage, Point, PointSet, Region, Spacing, VolumetricImage};
pub use scalar::Real;
pub use table::{FeatureTable, RowKey};

/// Double precision volume.
pub type Volume = VolumetricImage<f64>;
/// Single precision volume, the working type of the pipeline operators.
pub type Volume32 = VolumetricImage<f32>;
