//! Pinhole projection and the Brown-Conrady distortion model.
//!
//! Distortion always operates on normalized image coordinates, i.e. pixel
//! coordinates translated by the principal point and divided by the focal
//! length:
//!
//! ```text
//! r²  = x² + y²
//! x_d = x (1 + k1 r² + k2 r⁴ + k3 r⁶) + 2 p1 x y + p2 (r² + 2 x²)
//! y_d = y (1 + k1 r² + k2 r⁴ + k3 r⁶) + p1 (r² + 2 y²) + 2 p2 x y
//! ```
//!
//! Pixel coordinates put the center of the top-left pixel at (0, 0).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, NonConvergence, Result};

/// Default residual bound for [`undistort`], in normalized units.
pub const DEFAULT_UNDISTORT_TOL: f64 = 1e-10;
/// Default iteration cap for [`undistort`].
pub const DEFAULT_UNDISTORT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageGeometry {
    pub width_px: u32,
    pub height_px: u32,
}

impl ImageGeometry {
    pub fn new(width_px: u32, height_px: u32) -> Result<Self> {
        if width_px == 0 || height_px == 0 {
            return Err(Error::Domain(format!(
                "image geometry must be at least 1x1, got {width_px}x{height_px}"
            )));
        }
        Ok(Self {
            width_px,
            height_px,
        })
    }

    pub fn width(&self) -> usize {
        self.width_px as usize
    }

    pub fn height(&self) -> usize {
        self.height_px as usize
    }

    pub fn pixel_count(&self) -> usize {
        self.width() * self.height()
    }

    /// Principal point of a centered camera: `(W/2, H/2)`.
    pub fn center(&self) -> (f64, f64) {
        (self.width_px as f64 / 2.0, self.height_px as f64 / 2.0)
    }
}

impl fmt::Display for ImageGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width_px, self.height_px)
    }
}

impl std::str::FromStr for ImageGeometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("geometry must look like WIDTHxHEIGHT, got {s:?}"));
        let (w, h) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        ImageGeometry::new(w, h)
    }
}

/// Pinhole intrinsics bound to an image geometry.
///
/// The skew term is carried for completeness of the intrinsic matrix but every
/// constructor in this crate sets it to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub skew: f64,
    pub geometry: ImageGeometry,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, geometry: ImageGeometry) -> Result<Self> {
        if !(fx > 0.0 && fx.is_finite() && fy > 0.0 && fy.is_finite()) {
            return Err(Error::Domain(format!(
                "focal lengths must be positive and finite, got fx={fx}, fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::Domain(format!(
                "principal point must be finite, got ({cx}, {cy})"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            skew: 0.0,
            geometry,
        })
    }

    /// Square-pixel camera with the given horizontal field of view and the
    /// principal point at the image center.
    pub fn from_hfov(hfov_deg: f64, geometry: ImageGeometry) -> Result<Self> {
        let fx = hfov_to_fx(hfov_deg, geometry.width_px)?;
        let (cx, cy) = geometry.center();
        Intrinsics::new(fx, fx, cx, cy, geometry)
    }

    pub fn hfov_deg(&self) -> f64 {
        fx_to_hfov(self.fx, self.geometry.width_px)
    }

    pub fn with_principal_point(mut self, cx: f64, cy: f64) -> Self {
        self.cx = cx;
        self.cy = cy;
        self
    }

    /// Multiplies both focal lengths by `scale`, leaving the principal point.
    pub fn with_focal_scale(mut self, scale: f64) -> Self {
        self.fx *= scale;
        self.fy *= scale;
        self
    }
}

/// Brown-Conrady coefficients: radial `k1..k3`, tangential `p1, p2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistortionCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl DistortionCoefficients {
    pub const ZERO: Self = Self {
        k1: 0.0,
        k2: 0.0,
        k3: 0.0,
        p1: 0.0,
        p2: 0.0,
    };

    pub fn new(k1: f64, k2: f64, k3: f64, p1: f64, p2: f64) -> Result<Self> {
        let d = Self { k1, k2, k3, p1, p2 };
        if !d.is_finite() {
            return Err(Error::Domain(format!("non-finite distortion coefficients: {d:?}")));
        }
        Ok(d)
    }

    pub fn radial(k1: f64) -> Self {
        Self { k1, ..Self::ZERO }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    pub fn is_finite(&self) -> bool {
        [self.k1, self.k2, self.k3, self.p1, self.p2]
            .iter()
            .all(|c| c.is_finite())
    }

    pub fn get(&self, c: Coefficient) -> f64 {
        match c {
            Coefficient::K1 => self.k1,
            Coefficient::K2 => self.k2,
            Coefficient::K3 => self.k3,
            Coefficient::P1 => self.p1,
            Coefficient::P2 => self.p2,
        }
    }

    pub fn set(&mut self, c: Coefficient, value: f64) {
        *match c {
            Coefficient::K1 => &mut self.k1,
            Coefficient::K2 => &mut self.k2,
            Coefficient::K3 => &mut self.k3,
            Coefficient::P1 => &mut self.p1,
            Coefficient::P2 => &mut self.p2,
        } = value;
    }

    pub fn with(mut self, c: Coefficient, value: f64) -> Self {
        self.set(c, value);
        self
    }
}

/// Identifies one of the five distortion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficient {
    K1,
    K2,
    K3,
    P1,
    P2,
}

impl Coefficient {
    pub const ALL: [Coefficient; 5] = [
        Coefficient::K1,
        Coefficient::K2,
        Coefficient::K3,
        Coefficient::P1,
        Coefficient::P2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::K1 => "k1",
            Coefficient::K2 => "k2",
            Coefficient::K3 => "k3",
            Coefficient::P1 => "p1",
            Coefficient::P2 => "p2",
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
}

impl NormalizedPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn r2(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Max-norm distance.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl std::ops::Neg for NormalizedPoint {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Focal length in pixels for a horizontal field of view.
pub fn hfov_to_fx(hfov_deg: f64, width_px: u32) -> Result<f64> {
    if !(hfov_deg > 0.0 && hfov_deg < 180.0) {
        return Err(Error::Domain(format!(
            "horizontal field of view must lie in (0, 180) degrees, got {hfov_deg}"
        )));
    }
    if width_px == 0 {
        return Err(Error::Domain("image width must be positive".into()));
    }
    Ok((width_px as f64 / 2.0) / (hfov_deg.to_radians() / 2.0).tan())
}

/// Inverse of [`hfov_to_fx`].
pub fn fx_to_hfov(fx: f64, width_px: u32) -> f64 {
    2.0 * ((width_px as f64 / 2.0) / fx).atan().to_degrees()
}

pub fn pixel_to_normalized(p: PixelPoint, k: &Intrinsics) -> NormalizedPoint {
    let y = (p.v - k.cy) / k.fy;
    let x = (p.u - k.cx - k.skew * y) / k.fx;
    NormalizedPoint::new(x, y)
}

pub fn normalized_to_pixel(n: NormalizedPoint, k: &Intrinsics) -> PixelPoint {
    PixelPoint::new(k.fx * n.x + k.skew * n.y + k.cx, k.fy * n.y + k.cy)
}

#[inline]
fn radial_factor(r2: f64, d: &DistortionCoefficients) -> f64 {
    1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3))
}

#[inline]
fn tangential(n: NormalizedPoint, r2: f64, d: &DistortionCoefficients) -> (f64, f64) {
    let xy = n.x * n.y;
    (
        2.0 * d.p1 * xy + d.p2 * (r2 + 2.0 * n.x * n.x),
        d.p1 * (r2 + 2.0 * n.y * n.y) + 2.0 * d.p2 * xy,
    )
}

/// Maps ideal normalized coordinates to distorted ones.
pub fn distort(n: NormalizedPoint, d: &DistortionCoefficients) -> NormalizedPoint {
    let r2 = n.r2();
    let radial = radial_factor(r2, d);
    let (tx, ty) = tangential(n, r2, d);
    NormalizedPoint::new(n.x * radial + tx, n.y * radial + ty)
}

/// Jacobian of [`distort`], row-major `[[dxd/dx, dxd/dy], [dyd/dx, dyd/dy]]`.
pub fn distort_jacobian(n: NormalizedPoint, d: &DistortionCoefficients) -> [[f64; 2]; 2] {
    let (x, y) = (n.x, n.y);
    let r2 = n.r2();
    let radial = radial_factor(r2, d);
    let dradial = d.k1 + r2 * (2.0 * d.k2 + 3.0 * d.k3 * r2);
    let cross = 2.0 * x * y * dradial + 2.0 * d.p1 * x + 2.0 * d.p2 * y;
    [
        [
            radial + 2.0 * x * x * dradial + 2.0 * d.p1 * y + 6.0 * d.p2 * x,
            cross,
        ],
        [
            cross,
            radial + 2.0 * y * y * dradial + 6.0 * d.p1 * y + 2.0 * d.p2 * x,
        ],
    ]
}

/// Inverts [`distort`] to within `tol` (max-norm, normalized units).
///
/// Each iteration takes the better of a fixed-point step
/// `x <- (x_d - tangential(x)) / radial(x)` and a Newton step, halving the
/// fixed-point step when neither reduces the residual.
pub fn undistort(
    distorted: NormalizedPoint,
    d: &DistortionCoefficients,
    tol: f64,
    max_iter: usize,
) -> Result<NormalizedPoint, NonConvergence> {
    let residual_of = |p: NormalizedPoint| distort(p, d).max_abs_diff(&distorted);

    let mut current = distorted;
    let mut residual = residual_of(current);
    if residual <= tol {
        return Ok(current);
    }

    for iteration in 1..=max_iter {
        let r2 = current.r2();
        let radial = radial_factor(r2, d);
        let (tx, ty) = tangential(current, r2, d);
        let fixed_point =
            NormalizedPoint::new((distorted.x - tx) / radial, (distorted.y - ty) / radial);

        let mut best = (fixed_point, residual_of(fixed_point));
        if let Some(newton) = newton_step(current, distorted, d) {
            let r = residual_of(newton);
            if r < best.1 || !best.1.is_finite() {
                best = (newton, r);
            }
        }

        let mut damping = 0.5;
        while !(best.1 < residual) && damping > 1.0 / 1024.0 {
            let damped = NormalizedPoint::new(
                current.x + damping * (fixed_point.x - current.x),
                current.y + damping * (fixed_point.y - current.y),
            );
            let r = residual_of(damped);
            if r < best.1 || !best.1.is_finite() {
                best = (damped, r);
            }
            damping *= 0.5;
        }

        if best.1.is_finite() && best.1 < residual {
            current = best.0;
            residual = best.1;
        } else {
            return Err(NonConvergence {
                target: distorted,
                last: current,
                residual,
                iterations: iteration,
            });
        }
        if residual <= tol {
            return Ok(current);
        }
    }

    Err(NonConvergence {
        target: distorted,
        last: current,
        residual,
        iterations: max_iter,
    })
}

fn newton_step(
    current: NormalizedPoint,
    target: NormalizedPoint,
    d: &DistortionCoefficients,
) -> Option<NormalizedPoint> {
    let f = distort(current, d);
    let (ex, ey) = (f.x - target.x, f.y - target.y);
    let [[a, b], [c, e]] = distort_jacobian(current, d);
    let det = a * e - b * c;
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let step_x = (e * ex - b * ey) / det;
    let step_y = (a * ey - c * ex) / det;
    Some(NormalizedPoint::new(current.x - step_x, current.y - step_y))
}

/// [`undistort`] with the default tolerance and iteration cap.
pub fn undistort_default(
    distorted: NormalizedPoint,
    d: &DistortionCoefficients,
) -> Result<NormalizedPoint, NonConvergence> {
    undistort(distorted, d, DEFAULT_UNDISTORT_TOL, DEFAULT_UNDISTORT_MAX_ITER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn wide_camera() -> Intrinsics {
        Intrinsics::new(696.0, 696.0, 696.0, 256.0, ImageGeometry::new(1392, 512).unwrap()).unwrap()
    }

    #[test]
    fn hfov_examples() {
        assert_relative_eq!(hfov_to_fx(90.0, 1392).unwrap(), 696.0, max_relative = 1e-15);
        assert_relative_eq!(hfov_to_fx(90.0, 2).unwrap(), 1.0, max_relative = 1e-15);
        // 960 / tan(30°) evaluated at 40 digits
        assert_relative_eq!(
            hfov_to_fx(60.0, 1920).unwrap(),
            1662.768775266122201786,
            max_relative = 1e-14
        );
    }

    #[test]
    fn hfov_out_of_range() {
        for bad in [0.0, 180.0, -5.0, 200.0, f64::NAN] {
            assert!(matches!(hfov_to_fx(bad, 100), Err(Error::Domain(_))), "{bad}");
        }
    }

    #[test]
    fn hfov_round_trip() {
        for hfov in (1..180).map(f64::from) {
            let fx = hfov_to_fx(hfov, 1392).unwrap();
            assert_relative_eq!(fx_to_hfov(fx, 1392), hfov, max_relative = 1e-12);
        }
    }

    #[test]
    fn geometry_parse() {
        let g: ImageGeometry = "1392x512".parse().unwrap();
        assert_eq!((g.width_px, g.height_px), (1392, 512));
        assert!("0x5".parse::<ImageGeometry>().is_err());
        assert!("12".parse::<ImageGeometry>().is_err());
    }

    #[test]
    fn projection_examples() {
        let k = wide_camera();
        assert_eq!(
            pixel_to_normalized(PixelPoint::new(k.cx, k.cy), &k),
            NormalizedPoint::new(0.0, 0.0)
        );
        assert_eq!(
            pixel_to_normalized(PixelPoint::new(k.cx + k.fx, k.cy), &k),
            NormalizedPoint::new(1.0, 0.0)
        );
        let n = pixel_to_normalized(PixelPoint::new(0.0, 0.0), &k);
        assert_eq!(n.x, -1.0);
        assert_relative_eq!(n.y, -0.367_816_091_954_022_99, max_relative = 1e-15);

        let k2 = Intrinsics::new(100.0, 200.0, 10.0, 20.0, ImageGeometry::new(64, 64).unwrap()).unwrap();
        assert_eq!(
            normalized_to_pixel(NormalizedPoint::new(1.0, 1.0), &k2),
            PixelPoint::new(110.0, 220.0)
        );
        assert_eq!(
            normalized_to_pixel(NormalizedPoint::new(0.0, 0.0), &k2),
            PixelPoint::new(10.0, 20.0)
        );
    }

    #[test]
    fn distort_hand_cases() {
        let p = NormalizedPoint::new(0.5, 0.5);
        let out = distort(p, &DistortionCoefficients::radial(0.25));
        assert_relative_eq!(out.x, 0.5625, epsilon = 1e-12);
        assert_relative_eq!(out.y, 0.5625, epsilon = 1e-12);

        let tang = DistortionCoefficients {
            p1: 0.1,
            p2: 0.1,
            ..DistortionCoefficients::ZERO
        };
        let out = distort(p, &tang);
        assert_relative_eq!(out.x, 0.65, epsilon = 1e-12);
        assert_relative_eq!(out.y, 0.65, epsilon = 1e-12);
    }

    #[test]
    fn undistort_hand_case() {
        let d = DistortionCoefficients::radial(0.25);
        let out = undistort(NormalizedPoint::new(0.5625, 0.5625), &d, 1e-12, 50).unwrap();
        assert!(out.max_abs_diff(&NormalizedPoint::new(0.5, 0.5)) < 1e-11);
    }

    #[test]
    fn undistort_zero_is_immediate() {
        let p = NormalizedPoint::new(0.3, -1.7);
        assert_eq!(undistort(p, &DistortionCoefficients::ZERO, 1e-10, 1).unwrap(), p);
    }

    #[test]
    fn undistort_reports_non_convergence() {
        // Strong barrel: the forward map folds over at r² = 2/3, so points
        // beyond r ≈ 0.544 have no preimage.
        let d = DistortionCoefficients::radial(-0.5);
        let err = undistort(NormalizedPoint::new(1.0, 0.3), &d, 1e-10, 50).unwrap_err();
        assert!(err.residual > 1e-10);
        assert!(err.iterations <= 50);
        assert_eq!(err.target, NormalizedPoint::new(1.0, 0.3));
    }

    #[test]
    fn undistort_iteration_cap() {
        let d = DistortionCoefficients::radial(0.3);
        assert!(undistort(NormalizedPoint::new(0.9, 0.4), &d, 1e-14, 1).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = DistortionCoefficients::new(0.12, -0.05, 0.01, 0.003, -0.004).unwrap();
        let p = NormalizedPoint::new(0.4, -0.3);
        let j = distort_jacobian(p, &d);
        let h = 1e-6;
        let fd = |dx: f64, dy: f64| {
            let a = distort(NormalizedPoint::new(p.x + dx, p.y + dy), &d);
            let b = distort(NormalizedPoint::new(p.x - dx, p.y - dy), &d);
            ((a.x - b.x) / (2.0 * h), (a.y - b.y) / (2.0 * h))
        };
        let (dxx, dyx) = fd(h, 0.0);
        let (dxy, dyy) = fd(0.0, h);
        assert_relative_eq!(j[0][0], dxx, epsilon = 1e-8);
        assert_relative_eq!(j[1][0], dyx, epsilon = 1e-8);
        assert_relative_eq!(j[0][1], dxy, epsilon = 1e-8);
        assert_relative_eq!(j[1][1], dyy, epsilon = 1e-8);
    }

    fn coefficients() -> impl Strategy<Value = DistortionCoefficients> {
        (-0.2..0.2f64, -0.05..0.05f64, -0.02..0.02f64, -0.01..0.01f64, -0.01..0.01f64)
            .prop_map(|(k1, k2, k3, p1, p2)| DistortionCoefficients { k1, k2, k3, p1, p2 })
    }

    proptest! {
        #[test]
        fn zero_coefficients_are_identity(x in -10.0..10.0f64, y in -10.0..10.0f64) {
            let p = NormalizedPoint::new(x, y);
            prop_assert_eq!(distort(p, &DistortionCoefficients::ZERO), p);
            prop_assert_eq!(undistort(p, &DistortionCoefficients::ZERO, 1e-10, 1).unwrap(), p);
        }

        #[test]
        fn radial_symmetry(x in -1.0..1.0f64, y in -1.0..1.0f64, k1 in -0.5..0.5f64, k2 in -0.2..0.2f64, k3 in -0.1..0.1f64) {
            let d = DistortionCoefficients { k1, k2, k3, p1: 0.0, p2: 0.0 };
            let a = distort(NormalizedPoint::new(x, y), &d);
            let b = distort(NormalizedPoint::new(y, x), &d);
            prop_assert_eq!((a.x, a.y), (b.y, b.x));
            let neg = distort(NormalizedPoint::new(-x, -y), &d);
            prop_assert_eq!(neg, -a);
        }

        #[test]
        fn radial_displacement_monotone_in_k1(x in -1.0..1.0f64, y in -1.0..1.0f64, k1 in 0.0..1.0f64, extra in 0.0..1.0f64) {
            let p = NormalizedPoint::new(x, y);
            let disp = |k: f64| {
                let q = distort(p, &DistortionCoefficients::radial(k));
                (q.x - p.x).hypot(q.y - p.y)
            };
            prop_assert!(disp(k1 + extra) >= disp(k1));
        }

        #[test]
        fn undistort_inverts_distort(x in -0.7..0.7f64, y in -0.7..0.7f64, d in coefficients()) {
            // Inside this disk the forward map is injective for the strategy's coefficient ranges.
            let p = NormalizedPoint::new(x, y);
            let target = distort(p, &d);
            let back = undistort(target, &d, 1e-12, 50).unwrap();
            prop_assert!(distort(back, &d).max_abs_diff(&target) <= 1e-12);
            prop_assert!(back.max_abs_diff(&p) < 1e-8);
        }

        #[test]
        fn projection_round_trip(u in -2000.0..4000.0f64, v in -2000.0..4000.0f64, fx in 10.0..5000.0f64, fy in 10.0..5000.0f64) {
            let k = Intrinsics::new(fx, fy, 700.3, 251.9, ImageGeometry::new(1392, 512).unwrap()).unwrap();
            let p = PixelPoint::new(u, v);
            let back = normalized_to_pixel(pixel_to_normalized(p, &k), &k);
            prop_assert!(back.distance(&p) < 1e-9);
        }
    }
}
