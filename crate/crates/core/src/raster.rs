//! 8-bit grayscale/RGB rasters and their PNG / binary PNM codecs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::camera::ImageGeometry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    geometry: ImageGeometry,
    channels: u8,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(geometry: ImageGeometry, channels: u8, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Domain(format!("only 1 or 3 channels are supported, got {channels}")));
        }
        let expected = geometry.pixel_count() * usize::from(channels);
        if pixels.len() != expected {
            return Err(Error::Domain(format!(
                "{geometry} x {channels} needs {expected} samples, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            geometry,
            channels,
            pixels,
        })
    }

    pub fn filled(geometry: ImageGeometry, channels: u8, value: u8) -> Result<Self> {
        Self::new(
            geometry,
            channels,
            vec![value; geometry.pixel_count() * usize::from(channels)],
        )
    }

    /// Grayscale image from a per-pixel function of `(u, v)`.
    pub fn from_fn(geometry: ImageGeometry, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(geometry.pixel_count());
        for v in 0..geometry.height() {
            for u in 0..geometry.width() {
                pixels.push(f(u, v));
            }
        }
        Self {
            geometry,
            channels: 1,
            pixels,
        }
    }

    pub fn geometry(&self) -> ImageGeometry {
        self.geometry
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn row_len(&self) -> usize {
        self.geometry.width() * usize::from(self.channels)
    }

    /// Samples of pixel `(u, v)`.
    pub fn pixel(&self, u: usize, v: usize) -> &[u8] {
        let c = usize::from(self.channels);
        let start = (v * self.geometry.width() + u) * c;
        &self.pixels[start..start + c]
    }

    /// Bilinear sample at a location already known to lie in the frame
    /// (clamped to it otherwise). Writes one value per channel.
    pub fn sample_bilinear(&self, u: f64, v: f64, out: &mut [u8]) {
        let max_u = self.geometry.width() - 1;
        let max_v = self.geometry.height() - 1;
        let u = u.clamp(0.0, max_u as f64);
        let v = v.clamp(0.0, max_v as f64);
        let u0 = (u.floor() as usize).min(max_u);
        let v0 = (v.floor() as usize).min(max_v);
        let u1 = (u0 + 1).min(max_u);
        let v1 = (v0 + 1).min(max_v);
        let (au, av) = (u - u0 as f64, v - v0 as f64);

        let (p00, p10) = (self.pixel(u0, v0), self.pixel(u1, v0));
        let (p01, p11) = (self.pixel(u0, v1), self.pixel(u1, v1));
        for (c, slot) in out.iter_mut().enumerate() {
            let top = f64::from(p00[c]) + au * (f64::from(p10[c]) - f64::from(p00[c]));
            let bottom = f64::from(p01[c]) + au * (f64::from(p11[c]) - f64::from(p01[c]));
            *slot = (top + av * (bottom - top)).round().clamp(0.0, 255.0) as u8;
        }
    }

    /// Reads PNG, PGM or PPM. Images with color are loaded as RGB, anything
    /// else as grayscale; alpha is dropped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let geometry = ImageGeometry::new(img.width(), img.height())?;
        if img.color().has_color() {
            Self::new(geometry, 3, img.into_rgb8().into_raw())
        } else {
            Self::new(geometry, 1, img.into_luma8().into_raw())
        }
    }

    /// Writes according to the extension: `.png`, `.pgm` (gray only) or
    /// `.ppm` (RGB only). PNM output is binary.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let format = ImageFormat::from_path(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default()
            .to_ascii_lowercase();
        match (format, ext.as_str(), self.channels) {
            (ImageFormat::Png, _, _) | (ImageFormat::Pnm, "pgm", 1) | (ImageFormat::Pnm, "ppm", 3) => {}
            _ => {
                return Err(Error::Domain(format!(
                    "cannot write a {}-channel image as {}",
                    self.channels,
                    path.display()
                )))
            }
        }
        let color = if self.channels == 1 {
            ExtendedColorType::L8
        } else {
            ExtendedColorType::Rgb8
        };
        let (w, h) = (self.geometry.width_px, self.geometry.height_px);
        let image_err = |source| Error::Image {
            path: path.to_path_buf(),
            source,
        };
        if format == ImageFormat::Png {
            return image::save_buffer_with_format(path, &self.pixels, w, h, color, format)
                .map_err(image_err);
        }
        let subtype = if self.channels == 1 {
            PnmSubtype::Graymap(SampleEncoding::Binary)
        } else {
            PnmSubtype::Pixmap(SampleEncoding::Binary)
        };
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        PnmEncoder::new(&mut writer)
            .with_subtype(subtype)
            .write_image(&self.pixels, w, h, color)
            .map_err(image_err)?;
        writer.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        let (w, h) = (self.geometry.width_px, self.geometry.height_px);
        if self.channels == 1 {
            DynamicImage::ImageLuma8(
                image::GrayImage::from_raw(w, h, self.pixels.clone()).expect("sized buffer"),
            )
        } else {
            DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(w, h, self.pixels.clone()).expect("sized buffer"),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient() -> RasterImage {
        RasterImage::from_fn(ImageGeometry::new(7, 5).unwrap(), |u, v| (u * 30 + v * 7) as u8)
    }

    #[test]
    fn rejects_bad_buffers() {
        let g = ImageGeometry::new(2, 2).unwrap();
        assert!(RasterImage::new(g, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(g, 1, vec![0; 3]).is_err());
        assert!(RasterImage::new(g, 3, vec![0; 12]).is_ok());
    }

    #[test]
    fn bilinear_is_exact_on_grid_points() {
        let img = gradient();
        let mut out = [0u8];
        for v in 0..5 {
            for u in 0..7 {
                img.sample_bilinear(u as f64, v as f64, &mut out);
                assert_eq!(out[0], img.pixel(u, v)[0]);
            }
        }
    }

    #[test]
    fn bilinear_interpolates() {
        let img = RasterImage::new(ImageGeometry::new(2, 2).unwrap(), 1, vec![0, 100, 200, 40]).unwrap();
        let mut out = [0u8];
        img.sample_bilinear(0.5, 0.0, &mut out);
        assert_eq!(out[0], 50);
        img.sample_bilinear(0.5, 0.5, &mut out);
        assert_eq!(out[0], 85);
        img.sample_bilinear(1.0, 1.0, &mut out);
        assert_eq!(out[0], 40);
    }

    #[test]
    fn codecs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let gray = gradient();
        let rgb = RasterImage::new(
            ImageGeometry::new(3, 2).unwrap(),
            3,
            (0..18).map(|i| (i * 13) as u8).collect(),
        )
        .unwrap();
        for (img, name) in [(&gray, "a.png"), (&gray, "a.pgm"), (&rgb, "b.png"), (&rgb, "b.ppm")] {
            let path = dir.path().join(name);
            img.save(&path).unwrap();
            assert_eq!(&RasterImage::load(&path).unwrap(), img, "{name}");
        }
        assert!(rgb.save(dir.path().join("c.pgm")).is_err());
        assert!(gray.save(dir.path().join("c.ppm")).is_err());
        assert!(RasterImage::load(dir.path().join("missing.png")).is_err());
    }

    #[test]
    fn pgm_is_binary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pgm");
        gradient().save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5"));
    }
}
