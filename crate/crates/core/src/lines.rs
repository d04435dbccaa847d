//! Straight-line checks on grid images: trace a dark horizontal line across
//! the frame and measure how far it is from straight.

use crate::raster::RasterImage;

const DARK: u8 = 128;

/// Sub-pixel `(u, v)` centerline samples of one traced line, ordered by `u`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineTrace {
    pub samples: Vec<(f64, f64)>,
}

fn intensity(img: &RasterImage, u: usize, v: usize) -> f64 {
    let px = img.pixel(u, v);
    px.iter().map(|&c| f64::from(c)).sum::<f64>() / px.len() as f64
}

/// Darkness-weighted centroids of the dark vertical runs in column `u`,
/// skipping runs longer than `max_run` (crossing vertical lines).
fn column_centroids(img: &RasterImage, u: usize, max_run: usize) -> Vec<f64> {
    let h = img.geometry().height();
    let mut out = Vec::new();
    let mut v = 0;
    while v < h {
        if intensity(img, u, v) >= f64::from(DARK) {
            v += 1;
            continue;
        }
        let start = v;
        while v < h && intensity(img, u, v) < f64::from(DARK) {
            v += 1;
        }
        let end = v;
        if end - start > max_run {
            continue;
        }
        let lo = start.saturating_sub(1);
        let hi = (end + 1).min(h);
        let (mut weight, mut moment) = (0.0, 0.0);
        for row in lo..hi {
            let w = 255.0 - intensity(img, u, row);
            weight += w;
            moment += w * row as f64;
        }
        if weight > 0.0 {
            out.push(moment / weight);
        }
    }
    out
}

/// Follows the horizontal line nearest to row `start_v` at the center column
/// outwards, column by column, accepting a centroid only when it is within
/// `max_step` rows of the previous one. Columns within `margin` of the left and
/// right edges are ignored.
pub fn trace_horizontal_line(
    img: &RasterImage,
    start_v: f64,
    max_run: usize,
    max_step: f64,
    margin: usize,
) -> LineTrace {
    let w = img.geometry().width();
    if w <= 2 * margin {
        return LineTrace::default();
    }
    let center = w / 2;
    let nearest = |u: usize, target: f64| {
        column_centroids(img, u, max_run)
            .into_iter()
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
    };

    // Seed at the column nearest the center that has a usable run.
    let seed = (0..w / 2 - margin).find_map(|offset| {
        [center - offset, center + offset]
            .into_iter()
            .filter(|u| *u >= margin && *u < w - margin)
            .find_map(|u| nearest(u, start_v).map(|c| (u, c)))
    });
    let Some((seed_u, seed)) = seed else {
        return LineTrace::default();
    };
    let mut samples = vec![(seed_u as f64, seed)];

    for direction in [-1i64, 1] {
        let mut previous = seed;
        let mut u = seed_u as i64 + direction;
        while u >= margin as i64 && u < (w - margin) as i64 {
            if let Some(c) = nearest(u as usize, previous) {
                if (c - previous).abs() <= max_step {
                    samples.push((u as f64, c));
                    previous = c;
                }
            }
            u += direction;
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    LineTrace { samples }
}

impl LineTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// RMS vertical residual of the least-squares line `v = a + b u`.
    pub fn collinearity_rms(&self) -> f64 {
        let n = self.samples.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean_u = self.samples.iter().map(|s| s.0).sum::<f64>() / n;
        let mean_v = self.samples.iter().map(|s| s.1).sum::<f64>() / n;
        let (mut suu, mut suv) = (0.0, 0.0);
        for &(u, v) in &self.samples {
            suu += (u - mean_u) * (u - mean_u);
            suv += (u - mean_u) * (v - mean_v);
        }
        let slope = if suu > 0.0 { suv / suu } else { 0.0 };
        let sse: f64 = self
            .samples
            .iter()
            .map(|&(u, v)| {
                let r = v - (mean_v + slope * (u - mean_u));
                r * r
            })
            .sum();
        (sse / n).sqrt()
    }

    /// Mean row of the outer `fraction` of samples at each end minus the row
    /// at the middle sample. Positive means the ends sit lower in the image
    /// (larger `v`) than the middle.
    pub fn end_sag(&self, fraction: f64) -> f64 {
        let n = self.samples.len();
        if n < 3 {
            return 0.0;
        }
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n / 2);
        let ends: f64 = self.samples[..k]
            .iter()
            .chain(&self.samples[n - k..])
            .map(|s| s.1)
            .sum::<f64>()
            / (2 * k) as f64;
        ends - self.samples[n / 2].1
    }
}
