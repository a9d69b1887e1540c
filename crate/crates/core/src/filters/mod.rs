//! Neighbourhood operators. All of them clamp to the nearest edge voxel at the border.

mod components;
mod conv;
mod edm;
mod extrema;
mod gaussian;
mod log;
mod median;
mod morph;
mod otsu;
mod watershed;
mod window;

pub use components::{component_containing, connected_components, label_components};
pub use conv::{gaussian_kernel, gaussian_second_derivative_kernel};
pub use edm::{euclidean_distance_map, EdmBorder};
pub use extrema::{local_extrema, local_extrema_where};
pub use gaussian::{gaussian_smooth, gaussian_smooth_aniso, gaussian_smooth_voxels};
pub use log::{log_scale_space_max, log_scale_space_max_scales, normalized_log, scale_range, ScaleSpaceMax};
pub use median::median_filter;
pub use morph::{h_maxima_extract, reconstruct_by_dilation, regional_maxima};
pub use otsu::{otsu_threshold, OtsuResult, OTSU_BINS};
pub use watershed::seeded_watershed;
pub use window::{window_mean, SummedVolume};
