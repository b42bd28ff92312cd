//! Contact detection by image subtraction.
//!
//! A contact frame is compared against a reference frame taken just before
//! the touch:
//!
//! 1. absolute per-pixel difference,
//! 2. `k x k` box mean with edge replication,
//! 3. pixels below a fraction of the peak (or of full scale) are zeroed,
//! 4. 8-connected regions of the surviving pixels are labelled,
//! 5. regions whose area is outside a band of the total image area are dropped,
//! 6. each region's intensity-weighted centroid is computed and the centroids
//!    are fused by a weighted mean.
//!
//! The fused pixel is mapped onto the membrane with
//! [`back_project`](crate::geometry::back_project).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{back_project, CameraIntrinsics, PixelCoord, SensorGeometry, SurfacePoint};
use crate::image::TactileImage;

/// Base of the brightness threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Fraction of the filtered image's maximum.
    #[default]
    PerImageMax,
    /// Fraction of full scale (1.0).
    Absolute,
}

/// How region centroids are weighted when fused into one prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionWeight {
    #[default]
    Area,
    MeanIntensity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub kernel_size: usize,
    pub threshold_fraction: f64,
    pub min_area_fraction: f64,
    pub max_area_fraction: f64,
    pub threshold_mode: ThresholdMode,
    pub fusion_weight: FusionWeight,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kernel_size: 15,
            threshold_fraction: 0.60,
            min_area_fraction: 0.00012,
            max_area_fraction: 0.0004,
            threshold_mode: ThresholdMode::PerImageMax,
            fusion_weight: FusionWeight::Area,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "kernel_size must be odd and >= 1, got {}",
                self.kernel_size
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold_fraction) {
            return Err(Error::Config(format!(
                "threshold_fraction must be in [0, 1], got {}",
                self.threshold_fraction
            )));
        }
        let (lo, hi) = (self.min_area_fraction, self.max_area_fraction);
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Config(format!(
                "area fractions must satisfy 0 < min < max < 1, got {lo} and {hi}"
            )));
        }
        Ok(())
    }
}

/// `|contact - reference|` per pixel.
pub fn abs_difference(reference: &TactileImage, contact: &TactileImage) -> Result<TactileImage> {
    reference.same_shape(contact)?;
    let data = reference
        .data()
        .iter()
        .zip(contact.data())
        .map(|(a, b)| (b - a).abs())
        .collect();
    Ok(TactileImage::from_raw(reference.width(), reference.height(), data))
}

/// Box mean over a `kernel_size x kernel_size` window, replicating edge
/// pixels outside the image.
pub fn mean_filter(img: &TactileImage, kernel_size: usize) -> Result<TactileImage> {
    if kernel_size == 0 || kernel_size.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "kernel_size must be odd and >= 1, got {kernel_size}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    if kernel_size == 1 || img.is_empty() {
        return Ok(img.clone());
    }
    let half = (kernel_size / 2) as isize;
    let src = img.data();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0.0; w * h];
    horizontal.par_chunks_mut(w).enumerate().for_each(|(row, out)| {
        let line = &src[row * w..(row + 1) * w];
        for (col, o) in out.iter_mut().enumerate() {
            let c = col as isize;
            *o = (c - half..=c + half).map(|i| line[clamp(i, w)]).sum();
        }
    });

    let norm = (kernel_size * kernel_size) as f64;
    let (lo, hi) = src
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(row, out_row)| {
        let r = row as isize;
        for (col, o) in out_row.iter_mut().enumerate() {
            let sum: f64 = (r - half..=r + half).map(|i| horizontal[clamp(i, h) * w + col]).sum();
            // rounding can push a mean one ulp past the input range
            *o = (sum / norm).clamp(lo, hi);
        }
    });
    Ok(TactileImage::from_raw(w, h, out))
}

/// Pixels that survived thresholding, with their retained intensities.
/// Zero means "not in the mask".
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdMask {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ThresholdMask {
    /// A mask from booleans, with unit intensity on every set pixel.
    pub fn from_bools(width: usize, height: usize, set: &[bool]) -> Result<Self> {
        if set.len() != width * height {
            return Err(Error::Config("mask length does not match its dimensions".into()));
        }
        let values = set.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Ok(Self { width, height, values })
    }

    /// A mask whose intensities are taken from `img` (nonzero pixels are set).
    pub fn from_image(img: &TactileImage) -> Self {
        Self { width: img.width(), height: img.height(), values: img.data().to_vec() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn is_set(&self, col: usize, row: usize) -> bool {
        self.value(col, row) > 0.0
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Zeroes pixels below the configured brightness threshold.
pub fn threshold(img: &TactileImage, cfg: &PipelineConfig) -> ThresholdMask {
    let level = match cfg.threshold_mode {
        ThresholdMode::PerImageMax => cfg.threshold_fraction * img.max(),
        ThresholdMode::Absolute => cfg.threshold_fraction,
    };
    let values = img
        .data()
        .iter()
        .map(|&v| if v > 0.0 && v >= level { v } else { 0.0 })
        .collect();
    ThresholdMask { width: img.width(), height: img.height(), values }
}

/// `(column, row)` of a pixel.
pub type Pixel = (usize, usize);

/// A maximal 8-connected set of mask pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactRegion {
    /// Member pixels in discovery order; the first is the region's top-left
    /// pixel in row-major order.
    pub pixels: Vec<Pixel>,
    pub area: usize,
    pub centroid: PixelCoord,
    pub mean_intensity: f64,
    /// `[min_col, min_row, max_col, max_row]`, inclusive.
    pub bbox: [usize; 4],
}

/// Labels the 8-connected components of a mask, ordered by each component's
/// first pixel in row-major order.
pub fn connected_components(mask: &ThresholdMask) -> Vec<ContactRegion> {
    let (w, h) = (mask.width, mask.height);
    let mut visited = vec![false; w * h];
    let mut regions = Vec::new();
    let mut stack = Vec::new();

    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            if visited[idx] || !mask.is_set(col, row) {
                continue;
            }
            visited[idx] = true;
            stack.push((col, row));
            let mut pixels = Vec::new();
            while let Some((c, r)) = stack.pop() {
                pixels.push((c, r));
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (nc, nr) = (c as isize + dc, r as isize + dr);
                        if nc < 0 || nr < 0 || nc >= w as isize || nr >= h as isize {
                            continue;
                        }
                        let (nc, nr) = (nc as usize, nr as usize);
                        let n = nr * w + nc;
                        if !visited[n] && mask.is_set(nc, nr) {
                            visited[n] = true;
                            stack.push((nc, nr));
                        }
                    }
                }
            }
            regions.push(build_region(pixels, mask));
        }
    }
    regions
}

fn build_region(pixels: Vec<Pixel>, mask: &ThresholdMask) -> ContactRegion {
    let mut bbox = [usize::MAX, usize::MAX, 0, 0];
    let mut total = 0.0;
    for &(c, r) in &pixels {
        bbox[0] = bbox[0].min(c);
        bbox[1] = bbox[1].min(r);
        bbox[2] = bbox[2].max(c);
        bbox[3] = bbox[3].max(r);
        total += mask.value(c, r);
    }
    let area = pixels.len();
    // every member pixel has positive intensity, so this cannot fail
    let centroid = region_centroid(&pixels, mask).expect("nonempty region with positive weights");
    ContactRegion {
        pixels,
        area,
        centroid,
        mean_intensity: total / area as f64,
        bbox,
    }
}

/// Keeps regions with `min * total_area <= area <= max * total_area`.
pub fn filter_by_area(regions: Vec<ContactRegion>, cfg: &PipelineConfig, total_area: usize) -> Vec<ContactRegion> {
    let lo = cfg.min_area_fraction * total_area as f64;
    let hi = cfg.max_area_fraction * total_area as f64;
    regions
        .into_iter()
        .filter(|r| {
            let a = r.area as f64;
            lo <= a && a <= hi
        })
        .collect()
}

/// Intensity-weighted first moment of a set of pixels.
pub fn region_centroid(pixels: &[Pixel], intensities: &ThresholdMask) -> Result<PixelCoord> {
    if pixels.is_empty() {
        return Err(Error::Domain("centroid of an empty region".into()));
    }
    let (mut sw, mut su, mut sv) = (0.0, 0.0, 0.0);
    for &(c, r) in pixels {
        let wgt = intensities.value(c, r);
        sw += wgt;
        su += wgt * c as f64;
        sv += wgt * r as f64;
    }
    if sw.is_nan() || sw <= 0.0 {
        return Err(Error::Domain("region has no positive intensity".into()));
    }
    Ok(PixelCoord::new(su / sw, sv / sw))
}

/// Weighted mean of region centroids; `None` when there are no regions.
pub fn fuse_prediction(regions: &[ContactRegion], weight: FusionWeight) -> Option<PixelCoord> {
    let (mut sw, mut su, mut sv) = (0.0, 0.0, 0.0);
    for r in regions {
        let wgt = match weight {
            FusionWeight::Area => r.area as f64,
            FusionWeight::MeanIntensity => r.mean_intensity,
        };
        sw += wgt;
        su += wgt * r.centroid.u;
        sv += wgt * r.centroid.v;
    }
    (sw > 0.0).then(|| PixelCoord::new(su / sw, sv / sw))
}

/// Pixel-space outcome of the detector.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelDetection {
    pub pixel: PixelCoord,
    pub regions: Vec<ContactRegion>,
}

/// Runs the full detector; `Ok(None)` means no region survived the area gate.
pub fn detect_contact(
    reference: &TactileImage,
    contact: &TactileImage,
    cfg: &PipelineConfig,
) -> Result<Option<PixelDetection>> {
    cfg.validate()?;
    let diff = abs_difference(reference, contact)?;
    let filtered = mean_filter(&diff, cfg.kernel_size)?;
    let mask = threshold(&filtered, cfg);
    let regions = filter_by_area(connected_components(&mask), cfg, diff.len());
    Ok(fuse_prediction(&regions, cfg.fusion_weight).map(|pixel| PixelDetection { pixel, regions }))
}

/// Maps a detected pixel onto the membrane.
pub fn localize_contact(pixel: &PixelCoord, k: &CameraIntrinsics, g: &SensorGeometry) -> Result<SurfacePoint> {
    back_project(pixel, k, g)
}

/// A detection localized on the membrane.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactPrediction {
    pub pixel: PixelCoord,
    pub surface_point: SurfacePoint,
    pub regions: Vec<ContactRegion>,
}

impl ContactPrediction {
    pub fn localize(det: PixelDetection, k: &CameraIntrinsics, g: &SensorGeometry) -> Result<Self> {
        let surface_point = localize_contact(&det.pixel, k, g)?;
        Ok(Self { pixel: det.pixel, surface_point, regions: det.regions })
    }
}

/// [`detect_contact`] followed by [`localize_contact`].
pub fn predict_contact(
    reference: &TactileImage,
    contact: &TactileImage,
    cfg: &PipelineConfig,
    k: &CameraIntrinsics,
    g: &SensorGeometry,
) -> Result<Option<ContactPrediction>> {
    detect_contact(reference, contact, cfg)?
        .map(|det| ContactPrediction::localize(det, k, g))
        .transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> TactileImage {
        TactileImage::from_fn(w, h, f)
    }

    fn mask(w: usize, h: usize, set: &[Pixel]) -> ThresholdMask {
        let mut b = vec![false; w * h];
        for &(c, r) in set {
            b[r * w + c] = true;
        }
        ThresholdMask::from_bools(w, h, &b).unwrap()
    }

    #[test]
    fn abs_difference_examples() {
        let a = img(4, 3, |c, r| (c + r) as f64 / 10.0);
        assert!(abs_difference(&a, &a).unwrap().data().iter().all(|v| *v == 0.0));

        let lo = TactileImage::filled(3, 3, 0.2);
        let hi = TactileImage::filled(3, 3, 0.5);
        let d = abs_difference(&lo, &hi).unwrap();
        assert!(d.data().iter().all(|v| (v - 0.3).abs() < 1e-15));
        assert_eq!(d, abs_difference(&hi, &lo).unwrap());
    }

    #[test]
    fn abs_difference_shape_mismatch() {
        let err = abs_difference(&TactileImage::zeros(3, 3), &TactileImage::zeros(3, 4)).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn mean_filter_constant_and_identity() {
        let c = TactileImage::filled(20, 17, 0.37);
        assert_eq!(mean_filter(&c, 15).unwrap(), c);
        let noisy = img(9, 8, |c, r| ((c * 31 + r * 17) % 13) as f64 / 13.0);
        assert_eq!(mean_filter(&noisy, 1).unwrap(), noisy);
    }

    #[test]
    fn mean_filter_impulse_spreads_to_plateau() {
        let (w, h) = (41, 39);
        let impulse = img(w, h, |c, r| if (c, r) == (20, 19) { 1.0 } else { 0.0 });
        let f = mean_filter(&impulse, 15).unwrap();
        for r in 0..h {
            for c in 0..w {
                let inside = (13..=27).contains(&c) && (12..=26).contains(&r);
                let expected = if inside { 1.0 / 225.0 } else { 0.0 };
                assert!((f.get(c, r) - expected).abs() < 1e-15, "({c},{r})");
            }
        }
        let mass: f64 = f.data().iter().sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_filter_replicates_edges() {
        // a bright left column stays bright at the border instead of fading
        let edge = img(10, 10, |c, _| if c == 0 { 1.0 } else { 0.0 });
        let f = mean_filter(&edge, 3).unwrap();
        assert!((f.get(0, 5) - 2.0 / 3.0).abs() < 1e-15);
        assert!((f.get(1, 5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mean_filter_rejects_even_kernels() {
        assert!(matches!(mean_filter(&TactileImage::zeros(4, 4), 4), Err(Error::Config(_))));
        assert!(matches!(mean_filter(&TactileImage::zeros(4, 4), 0), Err(Error::Config(_))));
    }

    #[test]
    fn threshold_examples() {
        let cfg = PipelineConfig::default();
        assert_eq!(threshold(&TactileImage::zeros(5, 5), &cfg).count(), 0);

        let ramp = img(6, 1, |c, _| c as f64 * 0.1); // 0.0 .. 0.5
        let m = threshold(&ramp, &cfg);
        // level 0.3: 0.3 (within rounding), 0.4 and 0.5 survive
        let kept: Vec<_> = (0..6).filter(|&c| m.is_set(c, 0)).collect();
        assert!(kept.ends_with(&[4, 5]));
        assert!(!kept.contains(&2));

        let two = img(4, 1, |c, _| if c % 2 == 0 { 0.1 } else { 0.9 });
        let abs = PipelineConfig { threshold_mode: ThresholdMode::Absolute, ..cfg };
        let m = threshold(&two, &abs);
        assert_eq!((0..4).filter(|&c| m.is_set(c, 0)).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(m.value(1, 0), 0.9);
    }

    #[test]
    fn components_examples() {
        assert!(connected_components(&mask(5, 5, &[])).is_empty());

        let diag = connected_components(&mask(5, 5, &[(1, 1), (2, 2)]));
        assert_eq!(diag.len(), 1);
        assert_eq!(diag[0].area, 2);

        let split = connected_components(&mask(5, 5, &[(0, 0), (1, 0), (0, 2), (3, 2)]));
        assert_eq!(split.len(), 3);
        assert_eq!(split[0].pixels[0], (0, 0));
        assert_eq!(split[0].area, 2);
        assert_eq!(split[1].pixels[0], (0, 2));
        assert_eq!(split[2].pixels[0], (3, 2));
    }

    #[test]
    fn component_bbox_and_centroid() {
        let set: Vec<Pixel> = (118..=122).flat_map(|c| (78..=82).map(move |r| (c, r))).collect();
        let regions = connected_components(&mask(200, 160, &set));
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].bbox, [118, 78, 122, 82]);
        assert_eq!(regions[0].centroid, PixelCoord::new(120.0, 80.0));
        assert_eq!(regions[0].mean_intensity, 1.0);
    }

    fn region_of_area(area: usize) -> ContactRegion {
        ContactRegion {
            pixels: vec![(0, 0); area],
            area,
            centroid: PixelCoord::new(0.0, 0.0),
            mean_intensity: 1.0,
            bbox: [0; 4],
        }
    }

    #[test]
    fn area_gate_at_640x480() {
        let cfg = PipelineConfig::default();
        let total = 640 * 480;
        let kept: Vec<usize> = filter_by_area(
            [36, 37, 122, 123].into_iter().map(region_of_area).collect(),
            &cfg,
            total,
        )
        .iter()
        .map(|r| r.area)
        .collect();
        assert_eq!(kept, vec![37, 122]);
        assert!(filter_by_area(Vec::new(), &cfg, total).is_empty());
    }

    #[test]
    fn centroid_single_pixel_and_empty() {
        let m = mask(20, 20, &[(7, 9)]);
        assert_eq!(region_centroid(&[(7, 9)], &m).unwrap(), PixelCoord::new(7.0, 9.0));
        assert!(region_centroid(&[], &m).is_err());
    }

    #[test]
    fn centroid_of_bell_blob_is_near_its_centre() {
        let (cu, cv) = (50.5, 60.5);
        let bell = img(120, 120, |c, r| {
            let d2 = (c as f64 - cu).powi(2) + (r as f64 - cv).powi(2);
            (-d2 / (2.0 * 4.0f64.powi(2))).exp()
        });
        let m = ThresholdMask::from_image(&bell);
        let pixels: Vec<Pixel> = (0..120).flat_map(|c| (0..120).map(move |r| (c, r))).collect();
        let got = region_centroid(&pixels, &m).unwrap();
        assert!(got.distance(&PixelCoord::new(cu, cv)) < 0.5, "{got:?}");
    }

    #[test]
    fn fusion_examples() {
        let at = |u, v, area| ContactRegion {
            centroid: PixelCoord::new(u, v),
            ..region_of_area(area)
        };
        assert_eq!(fuse_prediction(&[], FusionWeight::Area), None);
        assert_eq!(
            fuse_prediction(&[at(3.0, 4.0, 10)], FusionWeight::Area),
            Some(PixelCoord::new(3.0, 4.0))
        );
        assert_eq!(
            fuse_prediction(&[at(50.0, 50.0, 20), at(150.0, 150.0, 20)], FusionWeight::Area),
            Some(PixelCoord::new(100.0, 100.0))
        );
        assert_eq!(
            fuse_prediction(&[at(0.0, 0.0, 100), at(40.0, 0.0, 300)], FusionWeight::Area),
            Some(PixelCoord::new(30.0, 0.0))
        );
    }

    #[test]
    fn identical_frames_yield_no_contact() {
        let frame = img(64, 48, |c, r| ((c * r) % 7) as f64 / 7.0);
        let cfg = PipelineConfig::default();
        assert_eq!(detect_contact(&frame, &frame, &cfg).unwrap(), None);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let even = PipelineConfig { kernel_size: 14, ..Default::default() };
        assert!(even.validate().is_err());
        let swapped = PipelineConfig {
            min_area_fraction: 0.01,
            max_area_fraction: 0.001,
            ..Default::default()
        };
        assert!(swapped.validate().is_err());
    }
}
