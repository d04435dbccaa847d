//! Synthetic dataset generation, annotation records, train/val/test splits
//! and the normalized regression targets.
//!
//! On-disk layout of a dataset directory:
//!
//! ```text
//! manifest.json        header: geometry, seed, sampler config, sources
//! annotations.jsonl    one AnnotationRecord per line, ordered by index
//! images/000000.png    distorted renders
//! ```
//!
//! Paths inside records are relative to the directory holding the header.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{hfov_to_fx, DistortionCoefficients, ImageGeometry, Intrinsics};
use crate::errormap::CameraParameterVector;
use crate::error::{Error, Result};
use crate::raster::RasterImage;
use crate::sampler::{camera_rng, poi_displacement, sample_camera, SampledCamera, SamplerConfig};
use crate::warp::distort_with_camera;

pub const FORMAT: &str = "lenswarp-dataset/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const IMAGES_DIR: &str = "images";

/// Ground truth for one generated image.
///
/// `hfov_deg`, `cx` and `cy` describe the camera of the distorted image (after
/// focal scaling and principal-point shift). The source camera is recovered as
/// a centered camera with focal length `fx / focal_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub id: String,
    pub image_path: String,
    pub width_px: u32,
    pub height_px: u32,
    pub hfov_deg: f64,
    pub cx: f64,
    pub cy: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
    pub focal_scale: f64,
    pub source_image: String,
    pub seed_index: u64,
}

impl AnnotationRecord {
    pub fn geometry(&self) -> Result<ImageGeometry> {
        ImageGeometry::new(self.width_px, self.height_px)
    }

    pub fn parameters(&self) -> CameraParameterVector {
        CameraParameterVector {
            hfov_deg: self.hfov_deg,
            cx: self.cx,
            cy: self.cy,
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            p1: self.p1,
            p2: self.p2,
        }
    }

    pub fn coefficients(&self) -> DistortionCoefficients {
        self.parameters().coefficients()
    }

    pub fn intrinsics(&self) -> Result<Intrinsics> {
        self.parameters().intrinsics(self.geometry()?)
    }

    pub fn source_intrinsics(&self) -> Result<Intrinsics> {
        let geometry = self.geometry()?;
        let fx = hfov_to_fx(self.hfov_deg, geometry.width_px)? / self.focal_scale;
        let (cx, cy) = geometry.center();
        Intrinsics::new(fx, fx, cx, cy, geometry)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.parameters().validate()?;
        if !(self.focal_scale >= 1.0 && self.focal_scale.is_finite()) {
            return Err(Error::Domain(format!(
                "focal_scale must be >= 1, got {}",
                self.focal_scale
            )));
        }
        Ok(())
    }

    fn from_camera(index: usize, seed_index: u64, source_image: &str, cam: &SampledCamera) -> Self {
        let k = &cam.intrinsics;
        let d = &cam.coefficients;
        Self {
            id: format!("{index:06}"),
            image_path: format!("{IMAGES_DIR}/{index:06}.png"),
            width_px: k.geometry.width_px,
            height_px: k.geometry.height_px,
            hfov_deg: cam.effective_hfov_deg(),
            cx: k.cx,
            cy: k.cy,
            k1: d.k1,
            k2: d.k2,
            k3: d.k3,
            p1: d.p1,
            p2: d.p2,
            focal_scale: cam.focal_scale,
            source_image: source_image.to_owned(),
            seed_index,
        }
    }
}

/// Regression targets: `hfov/180, cx/W, cy/H, k1, k2, k3, p1, p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEncoding(pub [f64; 8]);

pub const HFOV_SCALE_DEG: f64 = 180.0;

pub fn encode_parameters(p: &CameraParameterVector, geometry: ImageGeometry) -> TargetEncoding {
    TargetEncoding([
        p.hfov_deg / HFOV_SCALE_DEG,
        p.cx / f64::from(geometry.width_px),
        p.cy / f64::from(geometry.height_px),
        p.k1,
        p.k2,
        p.k3,
        p.p1,
        p.p2,
    ])
}

pub fn encode_targets(rec: &AnnotationRecord) -> Result<TargetEncoding> {
    Ok(encode_parameters(&rec.parameters(), rec.geometry()?))
}

pub fn decode_targets(enc: &TargetEncoding, geometry: ImageGeometry) -> CameraParameterVector {
    let [h, cx, cy, k1, k2, k3, p1, p2] = enc.0;
    CameraParameterVector {
        hfov_deg: h * HFOV_SCALE_DEG,
        cx: cx * f64::from(geometry.width_px),
        cy: cy * f64::from(geometry.height_px),
        k1,
        k2,
        k3,
        p1,
        p2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub format: String,
    pub geometry: ImageGeometry,
    pub count: usize,
    pub seed: u64,
    /// Sampler config in `key = value` form.
    pub sampler: String,
    pub parameter_sets: Option<usize>,
    pub source_dir: String,
    pub sources: Vec<String>,
    pub annotations: String,
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<AnnotationRecord>,
}

impl Manifest {
    /// Writes `header_name` (pretty JSON) and the annotation file it names
    /// into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, header_name: &str) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let header_path = dir.join(header_name);
        let mut text = serde_json::to_string_pretty(&self.header)?;
        text.push('\n');
        fs::write(&header_path, text).map_err(|e| Error::io(&header_path, e))?;

        let ann_path = dir.join(&self.header.annotations);
        let file = File::create(&ann_path).map_err(|e| Error::io(&ann_path, e))?;
        let mut out = BufWriter::new(file);
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(|e| Error::io(&ann_path, e))?;
        }
        out.flush().map_err(|e| Error::io(&ann_path, e))?;
        Ok(header_path)
    }

    /// Loads a header file, or `manifest.json` when given a directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path = path.join(MANIFEST_FILE);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let header: ManifestHeader = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let ann_path = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&header.annotations);
        let records = read_annotations(&ann_path)?;
        if records.len() != header.count {
            return Err(Error::Parse {
                path: ann_path,
                line: records.len(),
                message: format!("header announces {} records, found {}", header.count, records.len()),
            });
        }
        Ok(Self { header, records })
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        SamplerConfig::from_kv_str(&self.header.sampler)
    }
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
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
        let rec: AnnotationRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        rec.validate().map_err(|e| bad(e.to_string()))?;
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub geometry: ImageGeometry,
    pub count: usize,
    pub sampler: SamplerConfig,
    /// When set, image `i` reuses camera stream `i % n`, giving `n` distinct
    /// parameter sets shared across the dataset.
    pub parameter_sets: Option<usize>,
}

/// Source images in `dir` (`.png`, `.pgm`, `.ppm`), sorted by file name.
pub fn list_sources(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("png" | "pgm" | "ppm")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Renders `cfg.count` distorted images from the sources in `source_dir`
/// (used round-robin) into `out_dir` and writes the manifest.
///
/// Image `i` uses camera stream `i` (or `i % parameter_sets`), so the output
/// does not depend on how the work is scheduled.
pub fn generate_dataset(
    source_dir: impl AsRef<Path>,
    cfg: &DatasetConfig,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    let source_dir = source_dir.as_ref();
    let out_dir = out_dir.as_ref();
    cfg.sampler.validate_for(cfg.geometry)?;
    if cfg.parameter_sets == Some(0) {
        return Err(Error::Config("parameter_sets must be at least 1".into()));
    }

    let paths = list_sources(source_dir)?;
    if paths.is_empty() {
        return Err(Error::Empty("no .png/.pgm/.ppm source images found"));
    }
    let sources = paths
        .iter()
        .map(|p| {
            let img = RasterImage::load(p)?;
            if img.geometry() != cfg.geometry {
                return Err(Error::GeometryMismatch {
                    expected: cfg.geometry.to_string(),
                    found: format!("{} ({})", img.geometry(), p.display()),
                });
            }
            Ok(img)
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().expect("listed file").to_string_lossy().into_owned())
        .collect();

    let images_dir = out_dir.join(IMAGES_DIR);
    fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;

    let records = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let stream = cfg.parameter_sets.map_or(i, |n| i % n) as u64;
            let camera = sample_camera(
                cfg.geometry,
                &cfg.sampler,
                &mut camera_rng(cfg.sampler.seed, stream),
            )?;
            let which = i % sources.len();
            let rendered = distort_with_camera(&sources[which], &camera)?;
            let record = AnnotationRecord::from_camera(i, stream, &names[which], &camera);
            rendered.save(out_dir.join(&record.image_path))?;
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        header: ManifestHeader {
            format: FORMAT.to_owned(),
            geometry: cfg.geometry,
            count: records.len(),
            seed: cfg.sampler.seed,
            sampler: cfg.sampler.to_kv_string(),
            parameter_sets: cfg.parameter_sets,
            source_dir: source_dir.to_string_lossy().into_owned(),
            sources: names,
            annotations: ANNOTATIONS_FILE.to_owned(),
            split: None,
        },
        records,
    };
    manifest.save(out_dir, MANIFEST_FILE)?;
    Ok(manifest)
}

/// Re-checks every record's POI displacement against `budget_px + tol_px`
/// with the forward model. Returns the offending record ids.
pub fn revalidate_budget(records: &[AnnotationRecord], budget_px: f64, tol_px: f64) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for r in records {
        if poi_displacement(&r.coefficients(), &r.source_intrinsics()?) > budget_px + tol_px {
            bad.push(r.id.clone());
        }
    }
    Ok(bad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<AnnotationRecord>,
    pub val: Vec<AnnotationRecord>,
    pub test: Vec<AnnotationRecord>,
}

/// Seeded 70/15/15 partition: `⌊0.7n⌋` train, `⌊0.15n⌋` validation, the rest
/// test. Each part keeps the manifest order.
pub fn split_dataset(records: &[AnnotationRecord], seed: u64) -> Result<Split> {
    if records.is_empty() {
        return Err(Error::Empty("cannot split an empty manifest"));
    }
    let n = records.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 7 / 10;
    let n_val = n * 15 / 100;
    let take = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| records[i].clone()).collect::<Vec<_>>()
    };
    Ok(Split {
        train: take(&order[..n_train]),
        val: take(&order[n_train..n_train + n_val]),
        test: take(&order[n_train + n_val..]),
    })
}

/// Writes `train.json`/`.jsonl`, `val.*` and `test.*` next to each other in
/// `dir`, each header derived from `manifest`.
pub fn write_split(manifest: &Manifest, split: &Split, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    [("train", &split.train), ("val", &split.val), ("test", &split.test)]
        .into_iter()
        .map(|(name, records)| {
            let part = Manifest {
                header: ManifestHeader {
                    count: records.len(),
                    annotations: format!("{name}.jsonl"),
                    split: Some(name.to_owned()),
                    ..manifest.header.clone()
                },
                records: records.clone(),
            };
            part.save(dir, &format!("{name}.json"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::fx_to_hfov;
    use approx::assert_relative_eq;

    fn record(i: usize) -> AnnotationRecord {
        AnnotationRecord {
            id: format!("{i:06}"),
            image_path: format!("images/{i:06}.png"),
            width_px: 1392,
            height_px: 512,
            hfov_deg: 90.0,
            cx: 696.0,
            cy: 256.0,
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            p1: 0.0,
            p2: 0.0,
            focal_scale: 1.0,
            source_image: "a.png".into(),
            seed_index: i as u64,
        }
    }

    #[test]
    fn encode_examples() {
        let enc = encode_targets(&record(0)).unwrap();
        assert_eq!(enc.0, [0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let dec = decode_targets(&enc, ImageGeometry::new(1392, 512).unwrap());
        assert_eq!((dec.hfov_deg, dec.cx, dec.cy), (90.0, 696.0, 256.0));
        assert_eq!(dec.coefficients(), DistortionCoefficients::ZERO);
    }

    #[test]
    fn encode_round_trip() {
        let mut r = record(3);
        r.hfov_deg = 47.123_456_789;
        r.cx = 711.25;
        r.cy = 249.875;
        r.k1 = -0.0123;
        r.p2 = 0.000_45;
        let g = r.geometry().unwrap();
        let back = decode_targets(&encode_targets(&r).unwrap(), g);
        for (a, b) in back.as_array().iter().zip(r.parameters().as_array()) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn split_sizes() {
        let records: Vec<_> = (0..20).map(record).collect();
        let s = split_dataset(&records, 5).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (14, 3, 3));
        let mut ids: Vec<String> = s.train.iter().chain(&s.val).chain(&s.test).map(|r| r.id.clone()).collect();
        ids.sort();
        assert_eq!(ids, records.iter().map(|r| r.id.clone()).collect::<Vec<_>>());
        assert_eq!(split_dataset(&records, 5).unwrap(), s);
        assert_ne!(split_dataset(&records, 6).unwrap(), s);
        assert!(split_dataset(&[], 1).is_err());
    }

    #[test]
    fn split_proportions_within_one() {
        for n in 1..200 {
            let records: Vec<_> = (0..n).map(record).collect();
            let s = split_dataset(&records, n as u64).unwrap();
            let nf = n as f64;
            assert!((s.train.len() as f64 - 0.7 * nf).abs() <= 1.0);
            assert!((s.val.len() as f64 - 0.15 * nf).abs() <= 1.0);
            assert_eq!(s.train.len() + s.val.len() + s.test.len(), n);
        }
    }

    #[test]
    fn source_intrinsics_undo_focal_scale() {
        let mut r = record(0);
        r.focal_scale = 1.25;
        r.hfov_deg = fx_to_hfov(696.0 * 1.25, 1392);
        let src = r.source_intrinsics().unwrap();
        assert_relative_eq!(src.fx, 696.0, max_relative = 1e-12);
        assert_eq!((src.cx, src.cy), (696.0, 256.0));
    }

    #[test]
    fn annotation_validation() {
        let mut r = record(0);
        r.focal_scale = 0.5;
        assert!(r.validate().is_err());
        let mut r = record(0);
        r.hfov_deg = 180.0;
        assert!(r.validate().is_err());
    }
}
