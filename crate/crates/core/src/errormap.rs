//! Pixel-wise evaluation of predicted camera parameters.
//!
//! Every pixel of the frame is distorted with the true camera and then
//! undistorted with the predicted one; the error is the Euclidean distance
//! between the start and end positions divided by the image width. Maps are
//! averaged over a set of predictions, three rows (top, middle, bottom) are
//! pulled out of the mean map and summarized by their minimum and maximum.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{
    distort, hfov_to_fx, normalized_to_pixel, pixel_to_normalized, undistort,
    DistortionCoefficients, ImageGeometry, Intrinsics, PixelPoint, DEFAULT_UNDISTORT_MAX_ITER,
    DEFAULT_UNDISTORT_TOL,
};
use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// The eight regressed camera parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraParameterVector {
    pub hfov_deg: f64,
    pub cx: f64,
    pub cy: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CameraParameterVector {
    pub fn new(hfov_deg: f64, cx: f64, cy: f64, d: DistortionCoefficients) -> Self {
        Self {
            hfov_deg,
            cx,
            cy,
            k1: d.k1,
            k2: d.k2,
            k3: d.k3,
            p1: d.p1,
            p2: d.p2,
        }
    }

    /// Undistorted camera: centered principal point, zero coefficients.
    pub fn centered(hfov_deg: f64, geometry: ImageGeometry) -> Self {
        let (cx, cy) = geometry.center();
        Self::new(hfov_deg, cx, cy, DistortionCoefficients::ZERO)
    }

    pub fn from_camera(k: &Intrinsics, d: &DistortionCoefficients) -> Self {
        Self::new(k.hfov_deg(), k.cx, k.cy, *d)
    }

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.hfov_deg, self.cx, self.cy, self.k1, self.k2, self.k3, self.p1, self.p2,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(Error::Domain(format!(
                "hfov_deg must lie in (0, 180), got {}",
                self.hfov_deg
            )));
        }
        if self.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite camera parameters: {self:?}")));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> DistortionCoefficients {
        DistortionCoefficients {
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            p1: self.p1,
            p2: self.p2,
        }
    }

    /// Square-pixel, zero-skew intrinsics with `fx` from the field of view.
    pub fn intrinsics(&self, geometry: ImageGeometry) -> Result<Intrinsics> {
        self.validate()?;
        let fx = hfov_to_fx(self.hfov_deg, geometry.width_px)?;
        Intrinsics::new(fx, fx, self.cx, self.cy, geometry)
    }
}

/// Per-pixel errors, row-major, in units of image widths.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    geometry: ImageGeometry,
    values: Vec<f64>,
}

impl ErrorMap {
    pub fn new(geometry: ImageGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.pixel_count() {
            return Err(Error::Domain(format!(
                "{geometry} error map needs {} values, got {}",
                geometry.pixel_count(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("error map values must be finite and >= 0, got {v}")));
        }
        Ok(Self { geometry, values })
    }

    pub fn constant(geometry: ImageGeometry, value: f64) -> Result<Self> {
        Self::new(geometry, vec![value; geometry.pixel_count()])
    }

    pub fn geometry(&self) -> ImageGeometry {
        self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.geometry.width() + u]
    }

    pub fn row(&self, v: usize) -> &[f64] {
        let w = self.geometry.width();
        &self.values[v * w..(v + 1) * w]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Flat little-endian `f64` dump, row-major, no header.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: impl AsRef<Path>, geometry: ImageGeometry) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != geometry.pixel_count() * 8 {
            return Err(Error::GeometryMismatch {
                expected: format!("{} bytes for {geometry}", geometry.pixel_count() * 8),
                found: format!("{} bytes", bytes.len()),
            });
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::new(geometry, values)
    }

    /// One CSV line per image row, shortest round-trip formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for v in 0..self.geometry.height() {
            let line = self
                .row(v)
                .iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Heat rendering: black -> red -> yellow -> white, scaled to `scale_max`
    /// (the map maximum when `None`).
    pub fn to_heat_image(&self, scale_max: Option<f64>) -> RasterImage {
        let top = scale_max.unwrap_or_else(|| self.max());
        let mut pixels = Vec::with_capacity(self.values.len() * 3);
        for &v in &self.values {
            let t = if top > 0.0 { (v / top).clamp(0.0, 1.0) } else { 0.0 };
            let channel = |lo: f64| ((3.0 * t - lo).clamp(0.0, 1.0) * 255.0).round() as u8;
            pixels.extend_from_slice(&[channel(0.0), channel(1.0), channel(2.0)]);
        }
        RasterImage::new(self.geometry, 3, pixels).expect("sized buffer")
    }
}

/// Error map of one (true, predicted) pair over the full pixel grid.
///
/// Pixel `p` is normalized with the true intrinsics and distorted with the
/// true coefficients, then undistorted with the predicted coefficients and
/// projected with the predicted intrinsics. With zero distortion on both sides
/// this reduces to the affine chase `K_pred * K_true⁻¹ * p`.
pub fn pixel_error_map(
    truth: &CameraParameterVector,
    pred: &CameraParameterVector,
    geometry: ImageGeometry,
) -> Result<ErrorMap> {
    let true_k = truth.intrinsics(geometry)?;
    let pred_k = pred.intrinsics(geometry)?;
    let (true_d, pred_d) = (truth.coefficients(), pred.coefficients());
    let width = f64::from(geometry.width_px);

    let mut values = vec![0.0; geometry.pixel_count()];
    let rows: Vec<Result<()>> = values
        .par_chunks_mut(geometry.width())
        .enumerate()
        .map(|(v, row)| {
            for (u, slot) in row.iter_mut().enumerate() {
                let original = PixelPoint::new(u as f64, v as f64);
                let distorted = distort(pixel_to_normalized(original, &true_k), &true_d);
                let ideal = undistort(
                    distorted,
                    &pred_d,
                    DEFAULT_UNDISTORT_TOL,
                    DEFAULT_UNDISTORT_MAX_ITER,
                )
                .map_err(|source| Error::PixelNonConvergence { u, v, source })?;
                *slot = normalized_to_pixel(ideal, &pred_k).distance(&original) / width;
            }
            Ok(())
        })
        .collect();
    rows.into_iter().collect::<Result<Vec<()>>>()?;
    ErrorMap::new(geometry, values)
}

/// Running element-wise sum; maps are added in call order.
#[derive(Debug, Clone)]
pub struct MeanAccumulator {
    geometry: ImageGeometry,
    sum: Vec<f64>,
    count: usize,
}

impl MeanAccumulator {
    pub fn new(geometry: ImageGeometry) -> Self {
        Self {
            geometry,
            sum: vec![0.0; geometry.pixel_count()],
            count: 0,
        }
    }

    pub fn add(&mut self, map: &ErrorMap) -> Result<()> {
        if map.geometry != self.geometry {
            return Err(Error::GeometryMismatch {
                expected: self.geometry.to_string(),
                found: map.geometry.to_string(),
            });
        }
        for (s, v) in self.sum.iter_mut().zip(&map.values) {
            *s += v;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> Result<ErrorMap> {
        if self.count == 0 {
            return Err(Error::Empty("mean of zero error maps"));
        }
        let n = self.count as f64;
        ErrorMap::new(self.geometry, self.sum.into_iter().map(|s| s / n).collect())
    }
}

pub fn mean_error_map(maps: &[ErrorMap]) -> Result<ErrorMap> {
    let first = maps.first().ok_or(Error::Empty("mean of zero error maps"))?;
    let mut acc = MeanAccumulator::new(first.geometry);
    for map in maps {
        acc.add(map)?;
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinePosition {
    Top,
    Middle,
    Bottom,
}

impl LinePosition {
    pub const ALL: [LinePosition; 3] = [LinePosition::Top, LinePosition::Middle, LinePosition::Bottom];

    pub fn name(self) -> &'static str {
        match self {
            LinePosition::Top => "top",
            LinePosition::Middle => "middle",
            LinePosition::Bottom => "bottom",
        }
    }

    /// Row index for a frame of `height` rows: 0, ⌊H/2⌋, H-1.
    pub fn row_index(self, height: usize) -> usize {
        match self {
            LinePosition::Top => 0,
            LinePosition::Middle => height / 2,
            LinePosition::Bottom => height - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    pub position: LinePosition,
    pub row_index: usize,
    pub values: Vec<f64>,
}

pub fn extract_line_profiles(map: &ErrorMap) -> Result<[LineProfile; 3]> {
    let height = map.geometry.height();
    if height < 3 {
        return Err(Error::Domain(format!(
            "line profiles need at least 3 rows, got {}",
            map.geometry
        )));
    }
    Ok(LinePosition::ALL.map(|position| {
        let row_index = position.row_index(height);
        LineProfile {
            position,
            row_index,
            values: map.row(row_index).to_vec(),
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub position: LinePosition,
    pub min_error: f64,
    pub max_error: f64,
}

pub fn summarize(profiles: &[LineProfile]) -> Vec<SummaryRow> {
    profiles
        .iter()
        .map(|p| SummaryRow {
            position: p.position,
            min_error: p.values.iter().copied().fold(f64::INFINITY, f64::min),
            max_error: p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

/// Fixed `e-03` scaling with two decimals: 0.00584 -> `5.84e-03`,
/// 0.0412 -> `41.20e-03`.
pub fn format_milli(value: f64) -> String {
    format!("{:.2}e-03", value * 1e3)
}

/// `position,min,max` CSV with [`format_milli`] cells.
pub fn render_summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("position,min,max\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{}",
            r.position.name(),
            format_milli(r.min_error),
            format_milli(r.max_error)
        )
        .unwrap();
    }
    out
}

/// Parses [`render_summary_csv`] output back into rows (cells keep their
/// rounding).
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    let parse_cell = |cell: &str, line: usize| -> Result<f64> {
        cell.trim().parse::<f64>().map_err(|_| Error::Parse {
            path: "summary".into(),
            line,
            message: format!("bad number {cell:?}"),
        })
    };
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let bad = |message: String| Error::Parse {
            path: "summary".into(),
            line: i + 1,
            message,
        };
        let [pos, min, max] = cells.as_slice() else {
            return Err(bad(format!("expected 3 cells, got {}", cells.len())));
        };
        let position = LinePosition::ALL
            .into_iter()
            .find(|p| p.name() == pos.trim())
            .ok_or_else(|| bad(format!("unknown position {pos:?}")))?;
        rows.push(SummaryRow {
            position,
            min_error: parse_cell(min, i + 1)?,
            max_error: parse_cell(max, i + 1)?,
        });
    }
    Ok(rows)
}

/// Table with MIN/MAX columns per line, one row per method, cells joined by
/// ` & ` as in a LaTeX tabular.
pub fn render_table(methods: &[(String, Vec<SummaryRow>)]) -> String {
    let mut out = String::from("Method");
    for p in LinePosition::ALL {
        let name = p.name().to_uppercase();
        write!(out, " & {name} MIN ERROR & {name} MAX ERROR").unwrap();
    }
    out.push_str(" \\\\\n");
    for (label, rows) in methods {
        out.push_str(label);
        for p in LinePosition::ALL {
            match rows.iter().find(|r| r.position == p) {
                Some(r) => write!(out, " & {} & {}", format_milli(r.min_error), format_milli(r.max_error)),
                None => write!(out, " & - & -"),
            }
            .unwrap();
        }
        out.push_str(" \\\\\n");
    }
    out
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    pub width: u32,
    pub height: u32,
    #[serde(rename = "true")]
    pub truth: CameraParameterVector,
    pub pred: CameraParameterVector,
}

impl PredictionRecord {
    pub fn geometry(&self) -> Result<ImageGeometry> {
        ImageGeometry::new(self.width, self.height)
    }
}

/// Reads newline-delimited JSON prediction records. Blank lines are skipped;
/// the first malformed line aborts with its 1-based line number.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        record.geometry().map_err(|e| bad(e.to_string()))?;
        record.truth.validate().map_err(|e| bad(format!("true: {e}")))?;
        record.pred.validate().map_err(|e| bad(format!("pred: {e}")))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Indices of a seeded random subset of `n` items, in ascending order.
/// Returns all indices when `size >= n`.
pub fn subset_indices(n: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if size >= n {
        return idx;
    }
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(size);
    idx.sort_unstable();
    idx
}

/// Mean error map over `records`, evaluated on `geometry`. Every record must
/// carry that geometry.
pub fn evaluate_predictions(records: &[PredictionRecord], geometry: ImageGeometry) -> Result<ErrorMap> {
    let mut acc = MeanAccumulator::new(geometry);
    for r in records {
        if r.geometry()? != geometry {
            return Err(Error::GeometryMismatch {
                expected: geometry.to_string(),
                found: format!("{}x{} (record {})", r.width, r.height, r.id),
            });
        }
        acc.add(&pixel_error_map(&r.truth, &r.pred, geometry)?)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wide() -> ImageGeometry {
        ImageGeometry::new(1392, 512).unwrap()
    }

    fn small() -> ImageGeometry {
        ImageGeometry::new(64, 24).unwrap()
    }

    #[test]
    fn identical_parameters_give_zero_map() {
        let t = CameraParameterVector::new(
            80.0,
            30.0,
            13.0,
            DistortionCoefficients::new(-0.1, 0.02, -0.003, 0.001, -0.002).unwrap(),
        );
        let map = pixel_error_map(&t, &t, small()).unwrap();
        assert!(map.max() <= 1e-8, "{}", map.max());
    }

    #[test]
    fn principal_offset_is_flat() {
        let truth = CameraParameterVector::centered(90.0, wide());
        let pred = CameraParameterVector {
            cx: truth.cx + 7.0,
            ..truth
        };
        let map = pixel_error_map(&truth, &pred, wide()).unwrap();
        for &v in map.values() {
            assert!((v - 7.0 / 1392.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn focal_mismatch_matches_closed_form() {
        let g = small();
        let truth = CameraParameterVector::centered(60.0, g);
        let pred = CameraParameterVector {
            hfov_deg: 75.0,
            ..truth
        };
        let ratio = hfov_to_fx(75.0, 64).unwrap() / hfov_to_fx(60.0, 64).unwrap();
        let map = pixel_error_map(&truth, &pred, g).unwrap();
        for v in 0..24 {
            for u in 0..64 {
                let r = (u as f64 - truth.cx).hypot(v as f64 - truth.cy);
                assert_relative_eq!(map.get(u, v), (ratio - 1.0).abs() * r / 64.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mean_examples() {
        let g = small();
        let zero = ErrorMap::constant(g, 0.0).unwrap();
        let two = ErrorMap::constant(g, 2e-3).unwrap();
        assert_eq!(mean_error_map(std::slice::from_ref(&two)).unwrap(), two);
        let mean = mean_error_map(&[zero, two.clone()]).unwrap();
        assert!(mean.values().iter().all(|v| (v - 1e-3).abs() < 1e-18));
        let same = mean_error_map(&vec![two.clone(); 5]).unwrap();
        assert!(same.values().iter().zip(two.values()).all(|(a, b)| (a - b).abs() < 1e-18));
        assert!(matches!(mean_error_map(&[]), Err(Error::Empty(_))));
        let other = ErrorMap::constant(ImageGeometry::new(3, 3).unwrap(), 0.0).unwrap();
        assert!(matches!(
            mean_error_map(&[two, other]),
            Err(Error::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn profile_rows() {
        let map = ErrorMap::constant(wide(), 1e-3).unwrap();
        let profiles = extract_line_profiles(&map).unwrap();
        let rows: Vec<usize> = profiles.iter().map(|p| p.row_index).collect();
        assert_eq!(rows, vec![0, 256, 511]);
        assert!(profiles.iter().all(|p| p.values.len() == 1392));
        assert!(profiles.iter().all(|p| p.values == profiles[0].values));
        assert!(extract_line_profiles(&ErrorMap::constant(ImageGeometry::new(4, 2).unwrap(), 0.0).unwrap()).is_err());
    }

    #[test]
    fn summary_formatting() {
        let map = ErrorMap::constant(wide(), 1e-3).unwrap();
        let rows = summarize(&extract_line_profiles(&map).unwrap());
        assert!(rows.iter().all(|r| r.min_error <= r.max_error));
        assert_eq!(
            render_summary_csv(&rows),
            "position,min,max\ntop,1.00e-03,1.00e-03\nmiddle,1.00e-03,1.00e-03\nbottom,1.00e-03,1.00e-03\n"
        );
        assert_eq!(format_milli(5.84e-3), "5.84e-03");
        assert_eq!(format_milli(41.2e-3), "41.20e-03");
        assert_eq!(format_milli(0.09e-3), "0.09e-03");
        assert_eq!(parse_summary_csv(&render_summary_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn binary_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = ImageGeometry::new(5, 3).unwrap();
        let map = ErrorMap::new(g, (0..15).map(|i| f64::from(i) * 1.25e-4).collect()).unwrap();
        let path = dir.path().join("m.f64");
        map.write_binary(&path).unwrap();
        assert_eq!(ErrorMap::read_binary(&path, g).unwrap(), map);
        assert!(ErrorMap::read_binary(&path, ImageGeometry::new(4, 3).unwrap()).is_err());
        map.write_csv(dir.path().join("m.csv")).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn rejects_invalid_maps() {
        let g = ImageGeometry::new(2, 1).unwrap();
        assert!(ErrorMap::new(g, vec![0.0, -1.0]).is_err());
        assert!(ErrorMap::new(g, vec![0.0, f64::NAN]).is_err());
        assert!(ErrorMap::new(g, vec![0.0]).is_err());
    }

    #[test]
    fn subset_is_seeded() {
        assert_eq!(subset_indices(5, 10, 1), vec![0, 1, 2, 3, 4]);
        let a = subset_indices(100, 10, 3);
        assert_eq!(a, subset_indices(100, 10, 3));
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn predictions_parse_errors_carry_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let t = CameraParameterVector::centered(90.0, small());
        let good = PredictionRecord {
            id: "a".into(),
            width: 64,
            height: 24,
            truth: t,
            pred: t,
        };
        let mut text = serde_json::to_string(&good).unwrap();
        text.push_str("\n\n{\"id\": \"b\", \"width\": 64}\n");
        std::fs::write(&path, text).unwrap();
        match read_predictions(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        write_predictions(&path, &[good.clone()]).unwrap();
        assert_eq!(read_predictions(&path).unwrap(), vec![good]);
    }
}
