//! Synthetic imprints in the difference domain.
//!
//! A solid is placed against the membrane with a rigid pose and pushed in by
//! an indentation depth. Every pixel is back-projected onto the membrane and
//! its intensity is the depth at which that surface point lies inside the
//! solid, normalised to `[0, 1]`. There is no membrane mechanics: the
//! imprint is the rigid overlap of solid and finger.

pub mod sdf;

use nalgebra::{Rotation3, Unit, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{back_project, PixelCoord, SensorModel, SurfacePoint};
use crate::image::TactileImage;
pub use sdf::SolidSpec;

/// Rigid placement of a solid in the camera frame.
///
/// The rotation maps the solid's frame into the camera frame and
/// `translation` is where the solid's top lands before indentation. The
/// solid is then pushed `indentation_depth` further along its own `+z`
/// (toward the sensor axis, for poses built by [`ContactPose::facing`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactPose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
    pub indentation_depth: f64,
}

impl ContactPose {
    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>, indentation_depth: f64) -> Result<Self> {
        if !(indentation_depth.is_finite() && indentation_depth >= 0.0) {
            return Err(Error::Config(format!(
                "indentation depth must be >= 0, got {indentation_depth}"
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("pose translation must be finite".into()));
        }
        Ok(Self { rotation, translation, indentation_depth })
    }

    /// A pose whose top touches `contact` with the solid's up axis pointing
    /// against the outward membrane normal. The solid's `y` axis is kept
    /// aligned with the camera `y` axis whenever the normal allows it.
    pub fn facing(contact: Vector3<f64>, outward_normal: Vector3<f64>, indentation_depth: f64) -> Result<Self> {
        let n = outward_normal
            .try_normalize(1e-12)
            .ok_or_else(|| Error::Config("zero contact normal".into()))?;
        let ez = -n;
        let hint = if n.y.abs() < 0.9 { Vector3::y() } else { Vector3::x() };
        let ey = (hint - ez * hint.dot(&ez)).normalize();
        let ex = ey.cross(&ez);
        let rotation = Rotation3::from_basis_unchecked(&[ex, ey, ez]);
        Self::new(rotation, contact, indentation_depth)
    }

    pub fn from_axis_angle(axis_angle: [f64; 3], translation: [f64; 3], indentation_depth: f64) -> Result<Self> {
        let rotation = Rotation3::new(Vector3::from(axis_angle));
        Self::new(rotation, Vector3::from(translation), indentation_depth)
    }

    pub fn axis_angle(&self) -> [f64; 3] {
        self.rotation.scaled_axis().into()
    }

    /// Where the solid's origin ends up after indentation.
    pub fn effective_translation(&self) -> Vector3<f64> {
        self.translation + self.rotation * Vector3::z() * self.indentation_depth
    }

    /// Camera-frame point to solid frame.
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (p - self.effective_translation())
    }

    /// Solid-frame point to camera frame.
    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.effective_translation()
    }

    /// The same pose turned by `angle` about the camera's optical axis.
    pub fn rotated_about_optical_axis(&self, angle: f64) -> Self {
        let spin = Rotation3::from_axis_angle(&Unit::new_unchecked(Vector3::z()), angle);
        Self {
            rotation: spin * self.rotation,
            translation: spin * self.translation,
            indentation_depth: self.indentation_depth,
        }
    }
}

/// Penetration depth of a camera-frame point into a posed solid.
pub fn penetration(solid: &SolidSpec, pose: &ContactPose, p: &Vector3<f64>) -> f64 {
    (-solid.sdf(&pose.to_local(p))).max(0.0)
}

/// How rendered depths are mapped to intensities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Normalization {
    /// Divide by the deepest penetration in the image.
    #[default]
    PerImage,
    /// Divide by a fixed depth in mm, saturating above it.
    Fixed { depth_mm: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    /// Standard deviation of the Gaussian noise added to rendered frames
    /// (reference and contact alike).
    pub noise_sigma: f64,
    pub normalization: Normalization,
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if let Normalization::Fixed { depth_mm } = self.normalization {
            if !(depth_mm.is_finite() && depth_mm > 0.0) {
                return Err(Error::Config(format!("normalization depth must be positive, got {depth_mm}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImprintRender {
    pub image: TactileImage,
    /// Deepest-penetrating membrane point; `None` when nothing penetrates.
    pub ground_truth: Option<SurfacePoint>,
    /// Image location of the ground truth.
    pub ground_truth_pixel: Option<PixelCoord>,
    pub max_penetration: f64,
}

impl ImprintRender {
    pub fn has_contact(&self) -> bool {
        self.ground_truth.is_some()
    }
}

/// Renders the imprint of `solid` at `pose` as seen by the sensor camera.
pub fn render_imprint(
    solid: &SolidSpec,
    pose: &ContactPose,
    model: &SensorModel,
    width: usize,
    height: usize,
    normalization: Normalization,
) -> Result<ImprintRender> {
    solid.validate()?;
    if width == 0 || height == 0 {
        return Err(Error::Config("render resolution must be positive".into()));
    }
    if let Normalization::Fixed { depth_mm } = normalization {
        if !(depth_mm.is_finite() && depth_mm > 0.0) {
            return Err(Error::Config(format!("normalization depth must be positive, got {depth_mm}")));
        }
    }
    let (local_centre, bound) = solid.bounding_sphere();
    let centre = pose.to_world(&local_centre);
    if solid.sdf(&pose.to_local(&Vector3::zeros())) <= 0.0 {
        return Err(Error::Config("the solid swallows the camera focal point".into()));
    }

    let depth_at = |u: f64, v: f64| -> f64 {
        match back_project(&PixelCoord::new(u, v), &model.intrinsics, &model.geometry) {
            Ok(s) => {
                let p = s.position();
                if (p - centre).norm() > bound {
                    0.0
                } else {
                    penetration(solid, pose, &p)
                }
            }
            Err(_) => 0.0,
        }
    };

    let mut depths = vec![0.0; width * height];
    depths.par_chunks_mut(width).enumerate().for_each(|(row, out)| {
        for (col, o) in out.iter_mut().enumerate() {
            *o = depth_at(col as f64, row as f64);
        }
    });

    let max_penetration = depths.iter().copied().fold(0.0, f64::max);
    if max_penetration <= 0.0 {
        return Ok(ImprintRender {
            image: TactileImage::zeros(width, height),
            ground_truth: None,
            ground_truth_pixel: None,
            max_penetration: 0.0,
        });
    }

    let scale = match normalization {
        Normalization::PerImage => max_penetration,
        Normalization::Fixed { depth_mm } => depth_mm,
    };
    let data = depths.iter().map(|d| (d / scale).min(1.0)).collect();
    let image = TactileImage::from_raw(width, height, data);

    let tie_tol = 1e-9 * model.geometry.r;
    let (start, tie_centre) = seed_pixel(&depths, width, max_penetration, tie_tol);
    let start_depth = depth_at(start.u, start.v);
    let (mut pixel, depth) = refine_deepest(start, start_depth, model.geometry.r, depth_at);
    if pixel == start {
        pixel = slide_along_plateau(start, tie_centre, start_depth - tie_tol, depth_at);
    }
    let ground_truth = back_project(&pixel, &model.intrinsics, &model.geometry)?;
    Ok(ImprintRender {
        image,
        ground_truth: Some(ground_truth),
        ground_truth_pixel: Some(pixel),
        max_penetration: depth.max(max_penetration),
    })
}

/// The deepest pixel and the centroid of all pixels tied with it. When
/// several pixels tie for the maximum (flat faces pressed along a straight
/// generator, rims), the tied pixel closest to that centroid wins.
fn seed_pixel(depths: &[f64], width: usize, max: f64, tie_tol: f64) -> (PixelCoord, PixelCoord) {
    let tied: Vec<(f64, f64)> = depths
        .iter()
        .enumerate()
        .filter(|(_, d)| **d >= max - tie_tol)
        .map(|(i, _)| ((i % width) as f64, (i / width) as f64))
        .collect();
    let n = tied.len() as f64;
    let (mu, mv) = tied.iter().fold((0.0, 0.0), |(a, b), (u, v)| (a + u / n, b + v / n));
    let mut best = tied[0];
    let mut best_d = f64::INFINITY;
    for &(u, v) in &tied {
        let d = (u - mu).hypot(v - mv);
        if d < best_d {
            best_d = d;
            best = (u, v);
        }
    }
    (PixelCoord::new(best.0, best.1), PixelCoord::new(mu, mv))
}

/// Moves from `start` toward `target` for as long as the depth stays at or
/// above `floor`, so a plateau resolves to the point nearest its centre
/// rather than to a pixel centre.
fn slide_along_plateau(
    start: PixelCoord,
    target: PixelCoord,
    floor: f64,
    depth_at: impl Fn(f64, f64) -> f64,
) -> PixelCoord {
    let at = |t: f64| PixelCoord::new(start.u + t * (target.u - start.u), start.v + t * (target.v - start.v));
    let on = |t: f64| {
        let p = at(t);
        depth_at(p.u, p.v) >= floor
    };
    if on(1.0) {
        return target;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if on(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// Half-width (px) of the window searched around the seed pixel.
const REFINE_HALF_WIDTH: f64 = 12.0;
/// Coarse sampling step (px) before the bracketing search.
const REFINE_GRID: f64 = 0.25;

/// Maximum of `f` over `[centre - REFINE_HALF_WIDTH, centre + REFINE_HALF_WIDTH]`:
/// a coarse scan outward from `centre` (so ties keep the sample nearest the
/// centre) followed by ternary search around the best sample. Ternary search
/// copes with the kinks at sharp edges, where gradient steps stall.
fn line_max(f: impl Fn(f64) -> f64, centre: f64, gain: f64) -> (f64, f64) {
    let mut best_t = centre;
    let mut best = f(centre);
    let steps = (REFINE_HALF_WIDTH / REFINE_GRID).round() as i32;
    for k in 1..=steps {
        for t in [centre - k as f64 * REFINE_GRID, centre + k as f64 * REFINE_GRID] {
            let val = f(t);
            if val > best + gain {
                (best_t, best) = (t, val);
            }
        }
    }
    let (mut lo, mut hi) = (best_t - REFINE_GRID, best_t + REFINE_GRID);
    while hi - lo > 1e-9 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let (f1, f2) = (f(m1), f(m2));
        if f1 > f2 + gain {
            hi = m2;
        } else if f2 > f1 + gain {
            lo = m1;
        } else {
            (lo, hi) = (m1, m2);
        }
    }
    let t = 0.5 * (lo + hi);
    let val = f(t);
    if val > best + gain {
        (t, val)
    } else {
        (best_t, best)
    }
}

/// Deepest penetration near `start`, in continuous pixel coordinates.
///
/// Column by column, the best row is found by [`line_max`]; the outer search
/// then maximizes that profile over columns. Slanted ridges, which defeat
/// pixel sampling and compass moves alike, are followed exactly this way.
/// Only strict improvements move away from the seed, so plateaus keep it.
fn refine_deepest(
    start: PixelCoord,
    start_depth: f64,
    r: f64,
    depth_at: impl Fn(f64, f64) -> f64,
) -> (PixelCoord, f64) {
    let gain = 1e-12 * r;
    let column_best = |u: f64| line_max(|v| depth_at(u, v), start.v, gain);
    let (u, _) = line_max(|u| column_best(u).1, start.u, gain);
    let (v, depth) = column_best(u);
    if depth > start_depth + gain {
        (PixelCoord::new(u, v), depth)
    } else {
        (start, start_depth)
    }
}

/// Adds clamped Gaussian pixel noise, deterministic for a given seed.
pub fn add_noise(img: &TactileImage, sigma: f64, seed: u64) -> Result<TactileImage> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    Ok(TactileImage::from_raw(img.width(), img.height(), data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{surface_contains, CameraIntrinsics, SensorGeometry};

    fn small_model() -> (SensorModel, usize, usize) {
        let model = SensorModel::new(
            SensorGeometry::default(),
            CameraIntrinsics { alpha: 200.0, cx: 160.0, cy: 120.0 },
        )
        .unwrap();
        (model, 320, 240)
    }

    fn apex_pose(model: &SensorModel, depth: f64) -> ContactPose {
        let g = model.geometry;
        ContactPose::facing(Vector3::new(0.0, 0.0, g.d + g.r), Vector3::z(), depth).unwrap()
    }

    #[test]
    fn facing_pose_is_orthonormal_and_points_inward() {
        let pose = ContactPose::facing(Vector3::new(7.5, 0.0, 20.0), Vector3::x(), 0.2).unwrap();
        let m = pose.rotation.matrix();
        assert!((m.transpose() * m - nalgebra::Matrix3::identity()).norm() < 1e-12);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
        assert!((pose.rotation * Vector3::z() + Vector3::x()).norm() < 1e-12);
        assert!((pose.rotation * Vector3::y() - Vector3::y()).norm() < 1e-12);
        // the solid's top sits 0.2 mm inside the wall
        assert!((pose.to_world(&Vector3::zeros()) - Vector3::new(7.3, 0.0, 20.0)).norm() < 1e-12);
    }

    #[test]
    fn axis_angle_round_trip() {
        let pose = ContactPose::from_axis_angle([0.1, -0.4, 0.3], [1.0, 2.0, 3.0], 0.5).unwrap();
        let again = ContactPose::from_axis_angle(pose.axis_angle(), [1.0, 2.0, 3.0], 0.5).unwrap();
        assert!((pose.rotation.matrix() - again.rotation.matrix()).norm() < 1e-12);
        assert!(ContactPose::from_axis_angle([0.0; 3], [0.0; 3], -1.0).is_err());
    }

    #[test]
    fn distant_solid_renders_blank() {
        let (model, w, h) = small_model();
        let g = model.geometry;
        let pose = ContactPose::facing(Vector3::new(0.0, 0.0, g.d + g.r + 10.0), Vector3::z(), 0.0).unwrap();
        let out = render_imprint(&SolidSpec::Sphere { radius: 3.0 }, &pose, &model, w, h, Normalization::PerImage)
            .unwrap();
        assert!(!out.has_contact());
        assert_eq!(out.max_penetration, 0.0);
        assert!(out.image.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn axial_sphere_imprint_is_centred() {
        let (model, w, h) = small_model();
        let pose = apex_pose(&model, 0.05);
        let out = render_imprint(&SolidSpec::Sphere { radius: 3.0 }, &pose, &model, w, h, Normalization::PerImage)
            .unwrap();
        let img = &out.image;
        let (mut s, mut su, mut sv) = (0.0, 0.0, 0.0);
        for r in 0..h {
            for c in 0..w {
                let v = img.get(c, r);
                s += v;
                su += v * c as f64;
                sv += v * r as f64;
            }
        }
        assert!(s > 0.0);
        let centroid = PixelCoord::new(su / s, sv / s);
        assert!(centroid.distance(&model.intrinsics.principal_point()) < 0.5, "{centroid:?}");
        let gt = out.ground_truth.unwrap();
        assert!((gt.position() - Vector3::new(0.0, 0.0, 37.5)).norm() < 1e-6, "{gt:?}");
        assert!((out.max_penetration - 0.05).abs() < 1e-9);
    }

    #[test]
    fn nonzero_pixels_penetrate_and_truth_is_on_surface() {
        let (model, w, h) = small_model();
        let g = model.geometry;
        let solid = SolidSpec::Cone { base_radius: 3.0, height: 3.0 };
        let pose = ContactPose::facing(Vector3::new(g.r, 0.0, g.d - 5.0), Vector3::x(), 0.1).unwrap();
        let out = render_imprint(&solid, &pose, &model, w, h, Normalization::PerImage).unwrap();
        let mut lit = 0;
        for r in 0..h {
            for c in 0..w {
                if out.image.get(c, r) > 0.0 {
                    lit += 1;
                    let s = model.back_project(&PixelCoord::new(c as f64, r as f64)).unwrap();
                    assert!(solid.sdf(&pose.to_local(&s.position())) < 0.0);
                }
            }
        }
        assert!(lit > 0);
        let gt = out.ground_truth.unwrap();
        assert!(surface_contains(&gt.position(), &g, 1e-9 * g.r).is_some());
        // symmetric about the contact: the tip lands on the commanded point
        assert!((gt.position() - Vector3::new(g.r, 0.0, g.d - 5.0)).norm() < 1e-3 * g.r, "{gt:?}");
    }

    #[test]
    fn fixed_normalization_saturates() {
        let (model, w, h) = small_model();
        let out = render_imprint(
            &SolidSpec::Sphere { radius: 3.0 },
            &apex_pose(&model, 0.05),
            &model,
            w,
            h,
            Normalization::Fixed { depth_mm: 0.01 },
        )
        .unwrap();
        assert_eq!(out.image.max(), 1.0);
        assert!(render_imprint(
            &SolidSpec::Sphere { radius: 3.0 },
            &apex_pose(&model, 0.05),
            &model,
            w,
            h,
            Normalization::Fixed { depth_mm: 0.0 },
        )
        .is_err());
    }

    #[test]
    fn noise_is_seeded_and_optional() {
        let img = TactileImage::filled(32, 32, 0.5);
        assert_eq!(add_noise(&img, 0.0, 7).unwrap(), img);
        assert_eq!(add_noise(&img, 0.1, 7).unwrap(), add_noise(&img, 0.1, 7).unwrap());
        assert_ne!(add_noise(&img, 0.1, 7).unwrap(), add_noise(&img, 0.1, 8).unwrap());
        assert!(add_noise(&img, -0.1, 7).is_err());
    }

    #[test]
    fn noise_on_blank_image_has_small_mean() {
        let blank = TactileImage::zeros(640, 480);
        let noisy = add_noise(&blank, 0.05, 42).unwrap();
        let mean = noisy.data().iter().sum::<f64>() / noisy.len() as f64;
        // clamping keeps only the positive half: E = sigma / sqrt(2 pi)
        let expected = 0.05 / (2.0 * std::f64::consts::PI).sqrt();
        let sd = 0.05 * (0.5 - 1.0 / (2.0 * std::f64::consts::PI)).sqrt();
        assert!(mean.abs() < 0.05);
        assert!((mean - expected).abs() < 3.0 * sd / (noisy.len() as f64).sqrt());
    }
}
