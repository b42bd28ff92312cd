//! Sensor surface model and the pixel/surface mappings.
//!
//! The membrane is a hemispherical dome of radius `r` centred at `(0, 0, d)`
//! joined to an open cylinder of the same radius whose axis is the optical
//! axis. The camera is an ideal square-pixel pinhole at the origin looking
//! along `+z`, so a pixel `(u, v)` spans the ray
//!
//! ```text
//! x = (u - cx) / alpha * z,    y = (v - cy) / alpha * z
//! ```
//!
//! and [`back_project`] intersects that ray with the membrane in closed form.
//! [`ray_march_oracle`] computes the same intersection by brute force and is
//! kept as an independent check.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band around the junction radius that is tagged
/// [`SurfaceRegion::Junction`].
const JUNCTION_REL_TOL: f64 = 1e-12;

/// Radius and length of the membrane, in millimetres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    /// Radius shared by the cylinder and the hemispherical tip.
    pub r: f64,
    /// Distance from the focal point to the centre of the hemisphere.
    pub d: f64,
}

impl SensorGeometry {
    pub fn new(r: f64, d: f64) -> Result<Self> {
        let g = Self { r, d };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {}", self.r)));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::Config(format!("length d must be positive, got {}", self.d)));
        }
        Ok(())
    }

    /// Radius of the junction circle in the image, `r * alpha / d`.
    pub fn junction_radius_px(&self, k: &CameraIntrinsics) -> f64 {
        self.r * k.alpha / self.d
    }

    /// Signed distance-like residual of the membrane: negative inside the
    /// finger, zero on the membrane, positive outside. Continuous across the
    /// junction plane.
    pub fn residual(&self, p: &Vector3<f64>) -> f64 {
        let lateral = p.x.hypot(p.y);
        if p.z > self.d {
            lateral.hypot(p.z - self.d) - self.r
        } else {
            lateral - self.r
        }
    }
}

impl Default for SensorGeometry {
    /// A 15 mm diameter tube with the dome centre 30 mm above the lens.
    fn default() -> Self {
        Self { r: 7.5, d: 30.0 }
    }
}

/// Square-pixel pinhole intrinsics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length times pixel density, in pixels.
    pub alpha: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(alpha: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { alpha, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::Config("principal point must be finite".into()));
        }
        Ok(())
    }

    pub fn principal_point(&self) -> PixelCoord {
        PixelCoord::new(self.cx, self.cy)
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self { alpha: 1000.0, cx: 640.0, cy: 360.0 }
    }
}

/// Which part of the membrane a point lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceRegion {
    Sphere,
    Cylinder,
    Junction,
}

impl SurfaceRegion {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurfaceRegion::Sphere => "sphere",
            SurfaceRegion::Cylinder => "cylinder",
            SurfaceRegion::Junction => "junction",
        }
    }
}

/// A point on the membrane, in the camera frame (mm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub region: SurfaceRegion,
}

impl SurfacePoint {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn distance(&self, other: &SurfacePoint) -> f64 {
        (self.position() - other.position()).norm()
    }
}

/// Continuous image coordinates; pixel `(i, j)` has its centre at `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &PixelCoord) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Membership test for the membrane surface.
///
/// Returns the region the point lies on when it is within `tol` of the dome
/// (`z > d`) or of the cylinder (`z <= d`), and `None` otherwise. Points on
/// the junction circle are reported as [`SurfaceRegion::Junction`].
pub fn surface_contains(p: &Vector3<f64>, g: &SensorGeometry, tol: f64) -> Option<SurfaceRegion> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return None;
    }
    let lateral = p.x.hypot(p.y);
    if (p.z - g.d).abs() <= tol && (lateral - g.r).abs() <= tol {
        return Some(SurfaceRegion::Junction);
    }
    if p.z > g.d {
        (lateral.hypot(p.z - g.d) - g.r).abs().le(&tol).then_some(SurfaceRegion::Sphere)
    } else {
        (lateral - g.r).abs().le(&tol).then_some(SurfaceRegion::Cylinder)
    }
}

/// Pinhole projection of a camera-frame point onto the image.
pub fn project(p: &Vector3<f64>, k: &CameraIntrinsics) -> Result<PixelCoord> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(Error::Domain("non-finite point".into()));
    }
    if p.z <= 0.0 {
        return Err(Error::Domain(format!(
            "point at z = {} is not in front of the focal plane",
            p.z
        )));
    }
    Ok(PixelCoord::new(k.alpha * p.x / p.z + k.cx, k.alpha * p.y / p.z + k.cy))
}

/// Maps a pixel to the camera-facing point of the membrane along its ray.
///
/// Rays with `rho = |(u, v) - (cx, cy)| < r * alpha / d` leave the tube
/// through the dome, where `z` is the larger root of
/// `(rho^2 + alpha^2) z^2 - 2 d alpha^2 z + (d^2 - r^2) alpha^2 = 0`; all
/// others meet the cylinder wall at `z = r * alpha / rho`.
pub fn back_project(px: &PixelCoord, k: &CameraIntrinsics, g: &SensorGeometry) -> Result<SurfacePoint> {
    let du = px.u - k.cx;
    let dv = px.v - k.cy;
    if !(du.is_finite() && dv.is_finite()) {
        return Err(Error::NoIntersection);
    }
    let rho = du.hypot(dv);
    let rho_junction = g.junction_radius_px(k);

    let (z, region) = if (rho - rho_junction).abs() <= JUNCTION_REL_TOL * rho_junction {
        (g.r * k.alpha / rho, SurfaceRegion::Junction)
    } else if rho > rho_junction {
        (g.r * k.alpha / rho, SurfaceRegion::Cylinder)
    } else {
        let a = k.alpha;
        // Quarter discriminant divided by alpha^2; positive whenever
        // rho < r * alpha / d.
        let disc = (g.r * a).powi(2) + (g.r * g.r - g.d * g.d) * rho * rho;
        if disc < 0.0 {
            return Err(Error::NoIntersection);
        }
        let z = a * (g.d * a + disc.sqrt()) / (rho * rho + a * a);
        (z, SurfaceRegion::Sphere)
    };
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NoIntersection);
    }
    Ok(SurfacePoint {
        x: du / k.alpha * z,
        y: dv / k.alpha * z,
        z,
        region,
    })
}

/// Brute-force intersection of a pixel ray with the membrane.
///
/// Walks `z` upward from the focal point in increments of `step`, stops at the
/// first sign change of [`SensorGeometry::residual`] and bisects the bracket
/// to machine precision.
pub fn ray_march_oracle(
    px: &PixelCoord,
    k: &CameraIntrinsics,
    g: &SensorGeometry,
    step: f64,
) -> Result<SurfacePoint> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let a = (px.u - k.cx) / k.alpha;
    let b = (px.v - k.cy) / k.alpha;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NoIntersection);
    }
    let at = |z: f64| Vector3::new(a * z, b * z, z);
    let f = |z: f64| g.residual(&at(z));

    let z_max = 2.0 * (g.d + g.r);
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    if f_lo >= 0.0 {
        return Err(Error::NoIntersection);
    }
    let mut bracket = None;
    let mut i = 1u64;
    loop {
        let z = (i as f64 * step).min(z_max);
        let fz = f(z);
        if fz >= 0.0 {
            bracket = Some((lo, z));
            break;
        }
        lo = z;
        f_lo = fz;
        if z >= z_max {
            break;
        }
        i += 1;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoIntersection)?;
    debug_assert!(f_lo < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    let region = if z > g.d { SurfaceRegion::Sphere } else { SurfaceRegion::Cylinder };
    Ok(SurfacePoint { x: a * z, y: b * z, z, region })
}

/// Result of fitting `alpha` to a single pixel/point correspondence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// Root-mean-square lateral residual (mm) of the fitted ray equations.
    pub residual_mm: f64,
}

/// Fits `alpha` from one annotated pixel `px` and its known surface point `p`,
/// given the principal point.
///
/// Minimises `(alpha x - (u - cx) z)^2 + (alpha y - (v - cy) z)^2`, which
/// reduces to the single-equation solve when one lateral component is zero.
pub fn calibrate_alpha(px: &PixelCoord, p: &Vector3<f64>, cx: f64, cy: f64) -> Result<AlphaFit> {
    if !(p.z.is_finite() && p.z > 0.0) {
        return Err(Error::Domain(format!("calibration point must have z > 0, got {}", p.z)));
    }
    let lateral2 = p.x * p.x + p.y * p.y;
    if lateral2 == 0.0 || !lateral2.is_finite() {
        return Err(Error::Unidentifiable(
            "point on the optical axis carries no scale information".into(),
        ));
    }
    let du = px.u - cx;
    let dv = px.v - cy;
    let alpha = p.z * (du * p.x + dv * p.y) / lateral2;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Unidentifiable(format!(
            "pixel and point lie on opposite sides of the principal point (alpha = {alpha})"
        )));
    }
    let rx = p.x - du / alpha * p.z;
    let ry = p.y - dv / alpha * p.z;
    Ok(AlphaFit {
        alpha,
        residual_mm: (0.5 * (rx * rx + ry * ry)).sqrt(),
    })
}

/// Geometry and intrinsics bundled together.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub geometry: SensorGeometry,
    pub intrinsics: CameraIntrinsics,
}

impl SensorModel {
    pub fn new(geometry: SensorGeometry, intrinsics: CameraIntrinsics) -> Result<Self> {
        geometry.validate()?;
        intrinsics.validate()?;
        Ok(Self { geometry, intrinsics })
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<PixelCoord> {
        project(p, &self.intrinsics)
    }

    pub fn back_project(&self, px: &PixelCoord) -> Result<SurfacePoint> {
        back_project(px, &self.intrinsics, &self.geometry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> (CameraIntrinsics, SensorGeometry) {
        (
            CameraIntrinsics { alpha: 100.0, cx: 0.0, cy: 0.0 },
            SensorGeometry { r: 1.0, d: 2.0 },
        )
    }

    #[test]
    fn contains_apex_rim_and_rejects_origin() {
        let (_, g) = unit();
        assert_eq!(
            surface_contains(&Vector3::new(0.0, 0.0, 3.0), &g, 1e-9),
            Some(SurfaceRegion::Sphere)
        );
        assert_eq!(
            surface_contains(&Vector3::new(1.0, 0.0, 0.0), &g, 1e-9),
            Some(SurfaceRegion::Cylinder)
        );
        assert_eq!(surface_contains(&Vector3::zeros(), &g, 1e-9), None);
        assert_eq!(
            surface_contains(&Vector3::new(0.0, 1.0, 2.0), &g, 1e-9),
            Some(SurfaceRegion::Junction)
        );
        // inside the dome's sphere but below its equator: not on the surface
        assert_eq!(surface_contains(&Vector3::new(0.5, 0.0, 1.5), &g, 1e-9), None);
    }

    #[test]
    fn project_examples() {
        let (k, _) = unit();
        let p = project(&Vector3::new(0.0, 0.0, 3.0), &k).unwrap();
        assert_eq!((p.u, p.v), (0.0, 0.0));
        let p = project(&Vector3::new(1.0, 0.0, 1.0), &k).unwrap();
        assert_eq!((p.u, p.v), (100.0, 0.0));
        let p = project(&Vector3::new(0.7856, 0.0, 2.6187), &k).unwrap();
        assert!((p.u - 30.0).abs() < 0.01, "{p:?}");
    }

    #[test]
    fn project_rejects_points_behind_focal_plane() {
        let (k, _) = unit();
        assert!(matches!(project(&Vector3::new(1.0, 0.0, 0.0), &k), Err(Error::Domain(_))));
        assert!(matches!(project(&Vector3::new(1.0, 0.0, -2.0), &k), Err(Error::Domain(_))));
    }

    #[test]
    fn back_project_examples() {
        let (k, g) = unit();
        let apex = back_project(&PixelCoord::new(0.0, 0.0), &k, &g).unwrap();
        assert_eq!((apex.x, apex.y, apex.z), (0.0, 0.0, 3.0));
        assert_eq!(apex.region, SurfaceRegion::Sphere);

        let side = back_project(&PixelCoord::new(100.0, 0.0), &k, &g).unwrap();
        assert!((side.x - 1.0).abs() < 1e-15 && side.y == 0.0 && (side.z - 1.0).abs() < 1e-15);
        assert_eq!(side.region, SurfaceRegion::Cylinder);

        // larger root of 10900 z^2 - 40000 z + 30000 = 0, i.e. (200 + sqrt 7300) / 109
        let dome = back_project(&PixelCoord::new(30.0, 0.0), &k, &g).unwrap();
        let z_expected = (200.0 + 7300f64.sqrt()) / 109.0;
        assert!((dome.z - z_expected).abs() < 1e-12);
        assert!((dome.z - 2.6187).abs() < 1e-4);
        assert!((dome.x - 0.7856).abs() < 1e-4);
        assert_eq!(dome.region, SurfaceRegion::Sphere);

        let junction = back_project(&PixelCoord::new(50.0, 0.0), &k, &g).unwrap();
        assert_eq!((junction.x, junction.y, junction.z), (1.0, 0.0, 2.0));
        assert_eq!(junction.region, SurfaceRegion::Junction);
    }

    #[test]
    fn back_project_rejects_non_finite_pixels() {
        let (k, g) = unit();
        assert!(matches!(
            back_project(&PixelCoord::new(f64::NAN, 0.0), &k, &g),
            Err(Error::NoIntersection)
        ));
    }

    #[test]
    fn oracle_examples() {
        let (k, g) = unit();
        let step = 1e-4;
        let apex = ray_march_oracle(&PixelCoord::new(0.0, 0.0), &k, &g, step).unwrap();
        assert!((apex.z - 3.0).abs() <= step && apex.x.abs() <= step);
        let side = ray_march_oracle(&PixelCoord::new(100.0, 0.0), &k, &g, step).unwrap();
        assert!((side.z - 1.0).abs() <= step && (side.x - 1.0).abs() <= step);
        let dome = ray_march_oracle(&PixelCoord::new(30.0, 0.0), &k, &g, step).unwrap();
        let closed = back_project(&PixelCoord::new(30.0, 0.0), &k, &g).unwrap();
        assert!(dome.distance(&closed) < 1e-3);
        assert!(ray_march_oracle(&PixelCoord::new(0.0, 0.0), &k, &g, 0.0).is_err());
    }

    #[test]
    fn calibration_examples() {
        let fit = calibrate_alpha(&PixelCoord::new(100.0, 0.0), &Vector3::new(1.0, 0.0, 1.0), 0.0, 0.0)
            .unwrap();
        assert_eq!(fit.alpha, 100.0);
        assert_eq!(fit.residual_mm, 0.0);
        let fit = calibrate_alpha(&PixelCoord::new(50.0, 0.0), &Vector3::new(1.0, 0.0, 2.0), 0.0, 0.0)
            .unwrap();
        assert_eq!(fit.alpha, 100.0);
        assert!(matches!(
            calibrate_alpha(&PixelCoord::new(0.0, 0.0), &Vector3::new(0.0, 0.0, 3.0), 0.0, 0.0),
            Err(Error::Unidentifiable(_))
        ));
    }

    #[test]
    fn calibration_least_squares_over_both_axes() {
        // inconsistent pair: x says alpha = 100, y says alpha = 200
        let fit = calibrate_alpha(&PixelCoord::new(100.0, 200.0), &Vector3::new(1.0, 1.0, 1.0), 0.0, 0.0)
            .unwrap();
        assert!((fit.alpha - 150.0).abs() < 1e-12);
        assert!(fit.residual_mm > 0.0);
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(SensorGeometry::new(0.0, 1.0).is_err());
        assert!(SensorGeometry::new(1.0, -1.0).is_err());
        assert!(CameraIntrinsics::new(0.0, 0.0, 0.0).is_err());
    }
}
