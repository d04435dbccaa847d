//! Displacement-bounded sampling of distortion parameters.
//!
//! The magnitude of every coefficient is limited by how far it moves the
//! top-left pixel (the point of interest, POI) under the forward distortion.
//! Coefficients are bounded one at a time in a random order, each interval
//! found by bisection with the previously drawn coefficients held fixed, and
//! the value drawn uniformly from it. The principal point is then shifted and
//! the focal length scaled up until the distorted render needs no samples from
//! outside the source frame.

use std::fmt::Write as _;

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::camera::Coefficient;
use crate::camera::{
    distort, normalized_to_pixel, pixel_to_normalized, undistort, DistortionCoefficients,
    ImageGeometry, Intrinsics, PixelPoint, DEFAULT_UNDISTORT_MAX_ITER, DEFAULT_UNDISTORT_TOL,
};
use crate::error::{Error, Result};

/// Slack (pixels) allowed when deciding whether a source sample is in frame.
pub const FRAME_EPS: f64 = 1e-9;
/// Largest focal scale [`compute_focal_scale`] will try.
pub const MAX_FOCAL_SCALE: f64 = 64.0;
/// Relative precision of the focal-scale bisection.
pub const FOCAL_SCALE_REL_TOL: f64 = 1e-4;

/// How often the bracket `[0, limit]` may be doubled before saturating.
const BRACKET_EXPANSIONS: u32 = 4;
/// Default principal-point shift as a fraction of each image dimension.
const DEFAULT_SHIFT_FRACTION: f64 = 0.04;

/// Deterministic generator for the `index`-th camera of a run.
///
/// ChaCha8 seeded with `seed` via `seed_from_u64`, on stream `index`. Streams
/// are independent, so cameras can be drawn in any order or in parallel.
pub fn camera_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub max_displacement_px: f64,
    pub hfov_choices_deg: Vec<f64>,
    /// Maximum shift per axis `[x, y]`; `None` means 4% of each dimension.
    pub principal_shift_max_px: Option<[f64; 2]>,
    pub seed: u64,
    pub bisection_tol: f64,
    pub bisection_max_iter: usize,
    /// Initial bracketing bound per coefficient, in `Coefficient::ALL` order.
    pub coefficient_search_limit: [f64; 5],
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            max_displacement_px: 50.0,
            hfov_choices_deg: (3..=15).map(|i| f64::from(i) * 10.0).collect(),
            principal_shift_max_px: None,
            seed: 0,
            bisection_tol: 1e-4,
            bisection_max_iter: 100,
            coefficient_search_limit: [2.0, 5.0, 10.0, 0.5, 0.5],
        }
    }
}

impl SamplerConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = SamplerConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let list = |v: &str| -> Result<Vec<f64>> {
                v.split([',', ' ', '\t'])
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| bad(format!("{key}: {s:?} is not a number")))
                    })
                    .collect()
            };
            match key {
                "max_displacement_px" => cfg.max_displacement_px = scalar(&list(value)?, key, &bad)?,
                "hfov_choices_deg" => cfg.hfov_choices_deg = list(value)?,
                "principal_shift_max_px" => {
                    cfg.principal_shift_max_px = match list(value)?.as_slice() {
                        [both] => Some([*both, *both]),
                        [x, y] => Some([*x, *y]),
                        _ => return Err(bad(format!("{key} takes one or two values"))),
                    }
                }
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| bad(format!("seed: {value:?} is not an unsigned integer")))?
                }
                "bisection_tol" => cfg.bisection_tol = scalar(&list(value)?, key, &bad)?,
                "bisection_max_iter" => {
                    cfg.bisection_max_iter = value.parse().map_err(|_| {
                        bad(format!("bisection_max_iter: {value:?} is not a positive integer"))
                    })?
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the file-backed keys in `from_kv_str` syntax.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
        writeln!(out, "max_displacement_px = {}", self.max_displacement_px).unwrap();
        writeln!(out, "hfov_choices_deg = {}", join(&self.hfov_choices_deg)).unwrap();
        if let Some(shift) = self.principal_shift_max_px {
            writeln!(out, "principal_shift_max_px = {}", join(&shift)).unwrap();
        }
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "bisection_tol = {}", self.bisection_tol).unwrap();
        writeln!(out, "bisection_max_iter = {}", self.bisection_max_iter).unwrap();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if !(self.max_displacement_px >= 0.0 && self.max_displacement_px.is_finite()) {
            return err(format!(
                "max_displacement_px must be finite and non-negative, got {}",
                self.max_displacement_px
            ));
        }
        if self.hfov_choices_deg.is_empty() {
            return err("hfov_choices_deg must not be empty".into());
        }
        if let Some(h) = self.hfov_choices_deg.iter().find(|h| !(**h > 0.0 && **h < 180.0)) {
            return err(format!("hfov_choices_deg entries must lie in (0, 180), got {h}"));
        }
        if let Some(shift) = self.principal_shift_max_px {
            if shift.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return err(format!("principal_shift_max_px must be non-negative, got {shift:?}"));
            }
        }
        if !(self.bisection_tol > 0.0 && self.bisection_tol.is_finite()) {
            return err(format!("bisection_tol must be positive, got {}", self.bisection_tol));
        }
        if self.bisection_max_iter == 0 {
            return err("bisection_max_iter must be at least 1".into());
        }
        if self.coefficient_search_limit.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return err(format!(
                "coefficient_search_limit entries must be positive, got {:?}",
                self.coefficient_search_limit
            ));
        }
        Ok(())
    }

    /// Checks the geometry-dependent constraints.
    pub fn validate_for(&self, geometry: ImageGeometry) -> Result<()> {
        self.validate()?;
        let half = f64::from(geometry.width_px.min(geometry.height_px)) / 2.0;
        if self.max_displacement_px > 0.0 && self.max_displacement_px >= half {
            return Err(Error::Config(format!(
                "max_displacement_px {} must be below half the smaller image side ({half}) for {geometry}",
                self.max_displacement_px
            )));
        }
        Ok(())
    }

    pub fn principal_shift_for(&self, geometry: ImageGeometry) -> [f64; 2] {
        self.principal_shift_max_px.unwrap_or([
            DEFAULT_SHIFT_FRACTION * f64::from(geometry.width_px),
            DEFAULT_SHIFT_FRACTION * f64::from(geometry.height_px),
        ])
    }

    pub fn search_limit(&self, c: Coefficient) -> f64 {
        self.coefficient_search_limit[c as usize]
    }
}

fn scalar(values: &[f64], key: &str, bad: &dyn Fn(String) -> Error) -> Result<f64> {
    match values {
        [v] => Ok(*v),
        _ => Err(bad(format!("{key} takes exactly one value"))),
    }
}

/// Admissible interval for one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub iterations_lower: usize,
    pub iterations_upper: usize,
}

impl BoundInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Uniform draw from `[lower, upper]`.
pub fn draw_uniform<R: Rng + ?Sized>(rng: &mut R, interval: &BoundInterval) -> f64 {
    if interval.lower == interval.upper {
        return interval.lower;
    }
    Uniform::new_inclusive(interval.lower, interval.upper)
        .expect("bound interval is ordered and finite")
        .sample(rng)
}

/// Pixel distance the top-left pixel moves under the forward distortion.
pub fn poi_displacement(d: &DistortionCoefficients, k: &Intrinsics) -> f64 {
    let poi = PixelPoint::new(0.0, 0.0);
    let moved = normalized_to_pixel(distort(pixel_to_normalized(poi, k), d), k);
    moved.distance(&poi)
}

/// Finds the interval of values for `name` that keeps the POI displacement
/// within budget, holding the other coefficients at their values in `fixed`.
pub fn bound_coefficient(
    name: Coefficient,
    fixed: &DistortionCoefficients,
    k: &Intrinsics,
    cfg: &SamplerConfig,
) -> Result<BoundInterval> {
    let budget = cfg.max_displacement_px;
    let base = fixed.with(name, 0.0);
    let base_displacement = poi_displacement(&base, k);
    if base_displacement > budget + cfg.bisection_tol {
        return Err(Error::BudgetExhausted {
            coefficient: name,
            displacement_px: base_displacement,
            budget_px: budget,
        });
    }
    if budget == 0.0 {
        return Ok(BoundInterval {
            lower: 0.0,
            upper: 0.0,
            iterations_lower: 0,
            iterations_upper: 0,
        });
    }

    let excess = |value: f64| poi_displacement(&base.with(name, value), k) - budget;
    let (lower, iterations_lower) = bisect_endpoint(&excess, -1.0, cfg.search_limit(name), cfg);
    let (upper, iterations_upper) = bisect_endpoint(&excess, 1.0, cfg.search_limit(name), cfg);
    Ok(BoundInterval {
        lower,
        upper,
        iterations_lower,
        iterations_upper,
    })
}

/// Root of `excess` on `[0, sign * limit]`, where `excess(0) <= tol`.
fn bisect_endpoint(
    excess: &dyn Fn(f64) -> f64,
    sign: f64,
    limit: f64,
    cfg: &SamplerConfig,
) -> (f64, usize) {
    let mut hi = limit;
    let mut expansions = 0;
    while excess(sign * hi) <= 0.0 {
        if expansions == BRACKET_EXPANSIONS {
            return (sign * hi, 0);
        }
        hi *= 2.0;
        expansions += 1;
    }

    let mut lo = 0.0;
    for iteration in 1..=cfg.bisection_max_iter {
        let mid = 0.5 * (lo + hi);
        let g = excess(sign * mid);
        if g.abs() <= cfg.bisection_tol {
            return (sign * mid, iteration);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (sign * 0.5 * (lo + hi), cfg.bisection_max_iter)
}

/// One synthetic camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCamera {
    /// Camera of the distorted image: shifted principal point, scaled focal length.
    pub intrinsics: Intrinsics,
    /// Centered, unscaled camera the source image is assumed to be rendered with.
    pub source_intrinsics: Intrinsics,
    pub coefficients: DistortionCoefficients,
    /// Field of view picked from the config, before focal scaling.
    pub hfov_deg: f64,
    pub focal_scale: f64,
    pub draw_order: Vec<Coefficient>,
    /// Intervals the coefficients were drawn from, in draw order.
    pub bounds: Vec<BoundInterval>,
}

impl SampledCamera {
    /// Horizontal field of view of the distorted image.
    pub fn effective_hfov_deg(&self) -> f64 {
        self.intrinsics.hfov_deg()
    }
}

pub fn sample_camera<R: Rng + ?Sized>(
    geometry: ImageGeometry,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SampledCamera> {
    cfg.validate_for(geometry)?;

    let hfov_deg = cfg.hfov_choices_deg[rng.random_range(0..cfg.hfov_choices_deg.len())];
    let source = Intrinsics::from_hfov(hfov_deg, geometry)?;

    let mut draw_order = Coefficient::ALL.to_vec();
    draw_order.shuffle(rng);

    let mut coefficients = DistortionCoefficients::ZERO;
    let mut bounds = Vec::with_capacity(draw_order.len());
    for &name in &draw_order {
        let interval = bound_coefficient(name, &coefficients, &source, cfg)?;
        coefficients.set(name, draw_uniform(rng, &interval));
        bounds.push(interval);
    }

    let displacement = poi_displacement(&coefficients, &source);
    if displacement > cfg.max_displacement_px + cfg.bisection_tol {
        return Err(Error::BudgetExhausted {
            coefficient: *draw_order.last().expect("five coefficients"),
            displacement_px: displacement,
            budget_px: cfg.max_displacement_px,
        });
    }

    let [max_dx, max_dy] = cfg.principal_shift_for(geometry);
    let dx = draw_uniform(rng, &symmetric(max_dx));
    let dy = draw_uniform(rng, &symmetric(max_dy));
    let shifted = source.with_principal_point(source.cx + dx, source.cy + dy);

    let focal_scale = compute_focal_scale(&source, &shifted, &coefficients)?;
    Ok(SampledCamera {
        intrinsics: shifted.with_focal_scale(focal_scale),
        source_intrinsics: source,
        coefficients,
        hfov_deg,
        focal_scale,
        draw_order,
        bounds,
    })
}

fn symmetric(max: f64) -> BoundInterval {
    BoundInterval {
        lower: -max,
        upper: max,
        iterations_lower: 0,
        iterations_upper: 0,
    }
}

/// Where the distorted-image pixel `p` samples the source image, or `None`
/// when the inverse distortion does not converge there.
pub fn source_location(
    p: PixelPoint,
    source: &Intrinsics,
    dest: &Intrinsics,
    d: &DistortionCoefficients,
) -> Result<PixelPoint, crate::error::NonConvergence> {
    let distorted = pixel_to_normalized(p, dest);
    let ideal = undistort(distorted, d, DEFAULT_UNDISTORT_TOL, DEFAULT_UNDISTORT_MAX_ITER)?;
    Ok(normalized_to_pixel(ideal, source))
}

pub fn in_frame(p: PixelPoint, geometry: ImageGeometry) -> bool {
    let max_u = f64::from(geometry.width_px - 1) + FRAME_EPS;
    let max_v = f64::from(geometry.height_px - 1) + FRAME_EPS;
    p.u >= -FRAME_EPS && p.u <= max_u && p.v >= -FRAME_EPS && p.v <= max_v
}

fn border_pixels(geometry: ImageGeometry) -> impl Iterator<Item = PixelPoint> {
    let (w, h) = (geometry.width_px, geometry.height_px);
    let rows = [0, h - 1];
    let horizontal = rows
        .into_iter()
        .take(if h > 1 { 2 } else { 1 })
        .flat_map(move |v| (0..w).map(move |u| (u, v)));
    let vertical = (1..h.saturating_sub(1)).flat_map(move |v| {
        [0, w - 1]
            .into_iter()
            .take(if w > 1 { 2 } else { 1 })
            .map(move |u| (u, v))
    });
    horizontal
        .chain(vertical)
        .map(|(u, v)| PixelPoint::new(f64::from(u), f64::from(v)))
}

/// True when every pixel in `pixels`, seen through `dest` scaled by `scale`,
/// maps inside the source frame.
fn pixels_fit(
    pixels: &[PixelPoint],
    source: &Intrinsics,
    dest: &Intrinsics,
    d: &DistortionCoefficients,
    scale: f64,
) -> bool {
    let scaled = dest.with_focal_scale(scale);
    pixels.iter().all(|&p| {
        source_location(p, source, &scaled, d).is_ok_and(|q| in_frame(q, source.geometry))
    })
}

/// Smallest feasible scale in `[lo, ...)` for `pixels`, given that `lo` is
/// infeasible: doubling to bracket, then bisection to [`FOCAL_SCALE_REL_TOL`].
fn bisect_scale(
    pixels: &[PixelPoint],
    source: &Intrinsics,
    dest: &Intrinsics,
    d: &DistortionCoefficients,
    mut lo: f64,
) -> Result<f64> {
    let mut hi = 2.0 * lo;
    while !pixels_fit(pixels, source, dest, d, hi) {
        if hi >= MAX_FOCAL_SCALE {
            return Err(Error::FocalScaleNotFound {
                max_scale: MAX_FOCAL_SCALE,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(MAX_FOCAL_SCALE);
    }
    while (hi - lo) > FOCAL_SCALE_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if pixels_fit(pixels, source, dest, d, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest focal scale `s >= 1` such that rendering the distorted image with
/// `dest`'s focal lengths multiplied by `s` reads only in-frame source pixels.
///
/// The check runs over the border pixels of the destination frame; border
/// pixels whose inverse distortion fails to converge count as out of frame.
/// The result is the feasible end of a bisection bracket narrowed to
/// [`FOCAL_SCALE_REL_TOL`].
pub fn compute_focal_scale(
    source: &Intrinsics,
    dest: &Intrinsics,
    d: &DistortionCoefficients,
) -> Result<f64> {
    if source.geometry != dest.geometry {
        return Err(Error::GeometryMismatch {
            expected: source.geometry.to_string(),
            found: dest.geometry.to_string(),
        });
    }
    let border: Vec<PixelPoint> = border_pixels(dest.geometry).collect();
    if pixels_fit(&border, source, dest, d, 1.0) {
        return Ok(1.0);
    }
    // Bisect on a sparse subset first. A scale that fails the subset fails the
    // full border too, so the subset's infeasible end stays a valid lower
    // bound; one full check then confirms the feasible end.
    let sparse: Vec<PixelPoint> = border
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 16 == 0)
        .map(|(_, p)| *p)
        .chain(corners(dest.geometry))
        .collect();
    let candidate = bisect_scale(&sparse, source, dest, d, 1.0)?;
    if pixels_fit(&border, source, dest, d, candidate) {
        return Ok(candidate);
    }
    bisect_scale(&border, source, dest, d, candidate)
}

fn corners(geometry: ImageGeometry) -> [PixelPoint; 4] {
    let (u, v) = (f64::from(geometry.width_px - 1), f64::from(geometry.height_px - 1));
    [
        PixelPoint::new(0.0, 0.0),
        PixelPoint::new(u, 0.0),
        PixelPoint::new(0.0, v),
        PixelPoint::new(u, v),
    ]
}
