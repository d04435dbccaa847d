//! Brown-Conrady camera toolkit: pinhole projection, forward and inverse lens
//! distortion, displacement-bounded distortion sampling, raster warping,
//! synthetic dataset generation and pixel-wise error-map evaluation.

pub mod camera;
pub mod dataset;
pub mod error;
pub mod errormap;
pub mod lines;
pub mod raster;
pub mod sampler;
pub mod warp;

pub use camera::{
    distort, fx_to_hfov, hfov_to_fx, normalized_to_pixel, pixel_to_normalized, undistort,
    Coefficient, DistortionCoefficients, ImageGeometry, Intrinsics, NormalizedPoint, PixelPoint,
};
pub use error::{Error, NonConvergence, Result};
pub use sampler::{
    bound_coefficient, camera_rng, compute_focal_scale, poi_displacement, sample_camera,
    BoundInterval, SampledCamera, SamplerConfig,
};
pub use raster::RasterImage;
pub use warp::{
    apply_distortion_to_image, distort_with_camera, generate_grid_image, undistort_image,
    undistort_image_to,
};
pub use errormap::{
    extract_line_profiles, mean_error_map, pixel_error_map, summarize, CameraParameterVector,
    ErrorMap, LinePosition, LineProfile, PredictionRecord, SummaryRow,
};
pub use dataset::{
    decode_targets, encode_targets, generate_dataset, split_dataset, AnnotationRecord,
    DatasetConfig, Manifest, ManifestHeader, TargetEncoding,
};
