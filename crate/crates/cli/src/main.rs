use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use lenswarp::dataset::{self, DatasetConfig, Manifest};
use lenswarp::errormap::{
    self, evaluate_predictions, extract_line_profiles, read_predictions, render_summary_csv,
    render_table, subset_indices, summarize,
};
use lenswarp::warp::{apply_distortion_with_stats, undistort_with_stats};
use lenswarp::{
    camera_rng, generate_grid_image, sample_camera, CameraParameterVector, Error, ImageGeometry,
    Intrinsics, RasterImage, SamplerConfig,
};

/// Brown-Conrady lens distortion toolkit.
#[derive(Parser)]
#[command(name = "lenswarp", version)]
struct Cli {
    /// Worker threads (also read from THREADS). Output does not depend on it.
    #[arg(long, global = true, env = "THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw displacement-bounded cameras as JSON lines.
    SampleParams {
        #[arg(long)]
        geometry: ImageGeometry,
        #[arg(long)]
        count: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the distorted view of an undistorted image.
    Distort(WarpArgs),
    /// Remove distortion from an image.
    Undistort(WarpArgs),
    /// Write a black-on-white line grid.
    GenGrid {
        #[arg(long)]
        geometry: ImageGeometry,
        #[arg(long, default_value_t = 32)]
        spacing: u32,
        #[arg(long, default_value_t = 1)]
        line_width: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a synthetic dataset from a directory of undistorted images.
    GenDataset {
        /// Directory of .png/.pgm/.ppm source images, used round-robin.
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        geometry: ImageGeometry,
        #[arg(long)]
        count: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Reuse this many camera parameter sets across the dataset.
        #[arg(long)]
        parameter_sets: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a manifest 70/15/15 into train, val and test manifests.
    Split {
        /// Manifest header file or dataset directory.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean pixel error map of a predictions file.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "1392x512")]
        geometry: ImageGeometry,
        /// Evaluate a seeded random subset of this many records.
        #[arg(long)]
        subset: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the map dumps and summary; summary CSV to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render summary CSVs as a min/max table, one row per `NAME=FILE`.
    Report {
        #[arg(required = true)]
        summaries: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SamplerArgs {
    /// `key = value` sampler config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Displacement budget of the top-left pixel, in pixels.
    #[arg(long)]
    budget: Option<f64>,
}

impl SamplerArgs {
    fn load(&self) -> anyhow::Result<SamplerConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                SamplerConfig::from_kv_str(&text)?
            }
            None => SamplerConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(budget) = self.budget {
            cfg.max_displacement_px = budget;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct WarpArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON camera parameters of the distorted image (hfov_deg, cx, cy,
    /// k1, k2, k3, p1, p2) plus an optional focal_scale (default 1).
    #[arg(long)]
    params: PathBuf,
}

/// Camera pair described by a parameter file: the distorted camera as given,
/// and the centered source camera with focal length divided by `focal_scale`.
fn read_params(path: &Path, geometry: ImageGeometry) -> anyhow::Result<(CameraParameterVector, Intrinsics, Intrinsics)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let focal_scale = match value.as_object_mut().and_then(|o| o.remove("focal_scale")) {
        None => 1.0,
        Some(v) => v
            .as_f64()
            .filter(|s| *s > 0.0 && s.is_finite())
            .with_context(|| format!("{}: focal_scale must be a positive number", path.display()))?,
    };
    let params: CameraParameterVector =
        serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
    params.validate()?;
    let distorted = params.intrinsics(geometry)?;
    let (cx, cy) = geometry.center();
    let fx = distorted.fx / focal_scale;
    let source = Intrinsics::new(fx, fx, cx, cy, geometry)?;
    Ok((params, source, distorted))
}

/// Writes to `out`, or stdout when it is `None`.
fn with_output(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }

    match cli.command {
        Command::SampleParams {
            geometry,
            count,
            sampler,
            out,
        } => {
            let cfg = sampler.load()?;
            cfg.validate_for(geometry)?;
            let cameras = (0..count)
                .into_par_iter()
                .map(|i| sample_camera(geometry, &cfg, &mut camera_rng(cfg.seed, i as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            with_output(out.as_deref(), |w| {
                for cam in &cameras {
                    serde_json::to_writer(&mut *w, cam)?;
                    writeln!(w)?;
                }
                Ok(())
            })?;
        }
        Command::Distort(args) => {
            let img = RasterImage::load(&args.input)?;
            let (params, source, distorted) = read_params(&args.params, img.geometry())?;
            let (d_img, stats) = apply_distortion_with_stats(&img, &source, &distorted, &params.coefficients())?;
            if stats.black_filled > 0 {
                eprintln!("warning: {} pixels had no source sample", stats.black_filled);
            }
            d_img.save(&args.out)?;
        }
        Command::Undistort(args) => {
            let img = RasterImage::load(&args.input)?;
            let (params, source, distorted) = read_params(&args.params, img.geometry())?;
            let (u_img, stats) = undistort_with_stats(&img, &distorted, &source, &params.coefficients())?;
            if stats.black_filled > 0 {
                eprintln!("warning: {} pixels had no source sample", stats.black_filled);
            }
            u_img.save(&args.out)?;
        }
        Command::GenGrid {
            geometry,
            spacing,
            line_width,
            out,
        } => generate_grid_image(geometry, spacing, line_width)?.save(&out)?,
        Command::GenDataset {
            sources,
            geometry,
            count,
            sampler,
            parameter_sets,
            out,
        } => {
            let cfg = DatasetConfig {
                geometry,
                count,
                sampler: sampler.load()?,
                parameter_sets,
            };
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let manifest = dataset::generate_dataset(&sources, &cfg, &out)?;
            eprintln!("wrote {} images to {}", manifest.records.len(), out.display());
        }
        Command::Split { manifest, seed, out } => {
            let m = Manifest::load(&manifest)?;
            let split = dataset::split_dataset(&m.records, seed)?;
            let dir = match out {
                Some(dir) => dir,
                None if manifest.is_dir() => manifest,
                None => manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            for path in dataset::write_split(&m, &split, &dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Eval {
            predictions,
            geometry,
            subset,
            seed,
            out,
        } => {
            let mut records = read_predictions(&predictions)?;
            if records.is_empty() {
                bail!("{}: no prediction records", predictions.display());
            }
            if let Some(size) = subset {
                let keep = subset_indices(records.len(), size, seed);
                records = keep.into_iter().map(|i| records[i].clone()).collect();
            }
            let map = evaluate_predictions(&records, geometry)?;
            let rows = summarize(&extract_line_profiles(&map)?);
            let csv = render_summary_csv(&rows);
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                    map.write_binary(dir.join("mean_error.f64"))?;
                    map.write_csv(dir.join("mean_error.csv"))?;
                    map.to_heat_image(None).save(dir.join("mean_error.png"))?;
                    let path = dir.join("summary.csv");
                    fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("evaluated {} records into {}", records.len(), dir.display());
                }
                None => with_output(None, |w| Ok(w.write_all(csv.as_bytes())?))?,
            }
        }
        Command::Report { summaries, out } => {
            let mut methods = Vec::new();
            for spec in &summaries {
                let (name, path) = match spec.split_once('=') {
                    Some((name, path)) => (name.to_owned(), PathBuf::from(path)),
                    None => {
                        let path = PathBuf::from(spec);
                        let stem = path
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_else(|| spec.clone());
                        (stem, path)
                    }
                };
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let rows = errormap::parse_summary_csv(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                methods.push((name, rows));
            }
            let table = render_table(&methods);
            with_output(out.as_deref(), |w| Ok(w.write_all(table.as_bytes())?))?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .filter_map(|e| e.downcast_ref::<Error>())
        .any(Error::is_numeric);
    if numeric {
        3
    } else {
        2
    }
}

/// The error chain joined by `: `, skipping causes already quoted by an
/// outer message.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if msg.contains(&text) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&text);
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
