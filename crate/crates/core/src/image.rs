//! Single-channel intensity rasters and PNG I/O.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};

use crate::error::{Error, Result};

/// Row-major single-channel image with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TactileImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl TactileImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::Config(format!(
                "{}x{} image needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(Error::Domain(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    /// Builds an image from a closure over `(column, row)`. Values are
    /// clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row).clamp(0.0, 1.0));
            }
        }
        Self { width, height, data }
    }

    /// Takes a buffer produced by internal arithmetic that already respects
    /// the `[0, 1]` range.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(width * height, data.len());
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn same_shape(&self, other: &TactileImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }

    /// Averages the colour channels of a decoded image into one intensity
    /// channel normalised to `[0, 1]`.
    pub fn from_dynamic(img: &DynamicImage) -> Self {
        let (width, height) = (img.width() as usize, img.height() as usize);
        let data = match img {
            DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
            DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
            other => {
                let rgb = other.to_rgb32f();
                rgb.pixels()
                    .map(|p| ((p.0[0] + p.0[1] + p.0[2]) as f64 / 3.0).clamp(0.0, 1.0))
                    .collect()
            }
        };
        Self { width, height, data }
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        Ok(Self::from_dynamic(&img))
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::decode_png(&bytes)
    }

    /// Encodes as a 16-bit grayscale PNG.
    pub fn encode_png16(&self) -> Result<Vec<u8>> {
        let pixels: Vec<u16> = self.data.iter().map(|v| (v * 65535.0).round() as u16).collect();
        let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, pixels)
                .ok_or_else(|| Error::Domain("image dimensions overflow".into()))?;
        let mut out = Vec::new();
        DynamicImage::ImageLuma16(buf).write_to(&mut Cursor::new(&mut out), ImageFormat::Png)?;
        Ok(out)
    }

    /// Encodes as an 8-bit grayscale PNG.
    pub fn encode_png8(&self) -> Result<Vec<u8>> {
        let pixels: Vec<u8> = self.data.iter().map(|v| (v * 255.0).round() as u8).collect();
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, pixels)
                .ok_or_else(|| Error::Domain("image dimensions overflow".into()))?;
        let mut out = Vec::new();
        DynamicImage::ImageLuma8(buf).write_to(&mut Cursor::new(&mut out), ImageFormat::Png)?;
        Ok(out)
    }

    pub fn save_png16(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode_png16()?)?;
        Ok(())
    }
}
