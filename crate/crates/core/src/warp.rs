//! Rendering and removing lens distortion on rasters by inverse mapping.
//!
//! Every destination pixel is computed independently from the source, so rows
//! are processed in parallel and the result does not depend on the number of
//! worker threads.

use rayon::prelude::*;

use crate::camera::{
    distort, normalized_to_pixel, pixel_to_normalized, DistortionCoefficients, ImageGeometry,
    Intrinsics, PixelPoint,
};
use crate::error::{Error, NonConvergence, Result};
use crate::raster::RasterImage;
use crate::sampler::{in_frame, source_location, SampledCamera};

/// Number of destination pixels that had no in-frame source sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WarpStats {
    pub black_filled: usize,
}

fn check_geometry(expected: ImageGeometry, found: ImageGeometry) -> Result<()> {
    if expected != found {
        return Err(Error::GeometryMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

/// Generic inverse warp: `map` gives the source location of each destination
/// pixel. Out-of-frame locations are filled with 0.
fn remap<F>(src: &RasterImage, map: F) -> Result<(RasterImage, WarpStats)>
where
    F: Fn(PixelPoint) -> Result<PixelPoint, NonConvergence> + Sync,
{
    let geometry = src.geometry();
    let channels = usize::from(src.channels());
    let row_len = src.row_len();
    let mut pixels = vec![0u8; geometry.pixel_count() * channels];

    let per_row: Vec<Result<usize, Error>> = pixels
        .par_chunks_mut(row_len)
        .enumerate()
        .map(|(v, row)| {
            let mut black = 0;
            for (u, out) in row.chunks_mut(channels).enumerate() {
                let dest = PixelPoint::new(u as f64, v as f64);
                let from = map(dest).map_err(|source| Error::PixelNonConvergence { u, v, source })?;
                if in_frame(from, geometry) {
                    src.sample_bilinear(from.u, from.v, out);
                } else {
                    black += 1;
                }
            }
            Ok(black)
        })
        .collect();

    let mut stats = WarpStats::default();
    for row in per_row {
        stats.black_filled += row?;
    }
    Ok((RasterImage::new(geometry, src.channels(), pixels)?, stats))
}

/// Renders a distorted image from an undistorted source.
///
/// `source` is the camera the input was taken with and `dest` the camera of the
/// distorted output. Output pixel `x_d` reads the source at
/// `source(undistort(dest⁻¹(x_d)))`. Pass the same intrinsics twice for a
/// plain single-camera warp.
pub fn apply_distortion_to_image(
    src: &RasterImage,
    source: &Intrinsics,
    dest: &Intrinsics,
    d: &DistortionCoefficients,
) -> Result<RasterImage> {
    apply_distortion_with_stats(src, source, dest, d).map(|(img, _)| img)
}

pub fn apply_distortion_with_stats(
    src: &RasterImage,
    source: &Intrinsics,
    dest: &Intrinsics,
    d: &DistortionCoefficients,
) -> Result<(RasterImage, WarpStats)> {
    check_geometry(src.geometry(), source.geometry)?;
    check_geometry(src.geometry(), dest.geometry)?;
    remap(src, |p| source_location(p, source, dest, d))
}

/// Renders the distorted view of `camera` from an undistorted source.
pub fn distort_with_camera(src: &RasterImage, camera: &SampledCamera) -> Result<RasterImage> {
    apply_distortion_to_image(
        src,
        &camera.source_intrinsics,
        &camera.intrinsics,
        &camera.coefficients,
    )
}

/// Removes distortion: output pixel `x_i` reads the input at
/// `k(distort(k⁻¹(x_i)))`, producing the ideal image in the same camera.
pub fn undistort_image(
    src: &RasterImage,
    k: &Intrinsics,
    d: &DistortionCoefficients,
) -> Result<RasterImage> {
    undistort_image_to(src, k, k, d)
}

/// Removes distortion and re-projects into `ideal`: output pixel `x_i` reads
/// the input at `distorted(distort(ideal⁻¹(x_i)))`.
pub fn undistort_image_to(
    src: &RasterImage,
    distorted: &Intrinsics,
    ideal: &Intrinsics,
    d: &DistortionCoefficients,
) -> Result<RasterImage> {
    undistort_with_stats(src, distorted, ideal, d).map(|(img, _)| img)
}

pub fn undistort_with_stats(
    src: &RasterImage,
    distorted: &Intrinsics,
    ideal: &Intrinsics,
    d: &DistortionCoefficients,
) -> Result<(RasterImage, WarpStats)> {
    check_geometry(src.geometry(), distorted.geometry)?;
    check_geometry(src.geometry(), ideal.geometry)?;
    remap(src, |p| {
        Ok(normalized_to_pixel(
            distort(pixel_to_normalized(p, ideal), d),
            distorted,
        ))
    })
}

/// White image with black horizontal and vertical lines every `spacing_px`,
/// mirror-symmetric about the image center.
///
/// Line centers sit at `(N-1)/2 + k * spacing_px`; a pixel is on a line when
/// its center is within `line_width_px / 2` of a line center, so lines on a
/// half-integer center come out one pixel wider.
pub fn generate_grid_image(
    geometry: ImageGeometry,
    spacing_px: u32,
    line_width_px: u32,
) -> Result<RasterImage> {
    if line_width_px == 0 || spacing_px <= line_width_px {
        return Err(Error::Domain(format!(
            "grid needs spacing > line width > 0, got spacing {spacing_px}, width {line_width_px}"
        )));
    }
    // Work in doubled units so that half-integer centers stay integral.
    let on_line = |i: usize, n: u32| {
        let doubled_offset = (2 * i as i64 - (i64::from(n) - 1)).unsigned_abs();
        let period = 2 * u64::from(spacing_px);
        let phase = doubled_offset % period;
        phase.min(period - phase) <= u64::from(line_width_px)
    };
    let cols: Vec<bool> = (0..geometry.width()).map(|u| on_line(u, geometry.width_px)).collect();
    let rows: Vec<bool> = (0..geometry.height()).map(|v| on_line(v, geometry.height_px)).collect();
    Ok(RasterImage::from_fn(geometry, |u, v| {
        if cols[u] || rows[v] {
            0
        } else {
            255
        }
    }))
}
