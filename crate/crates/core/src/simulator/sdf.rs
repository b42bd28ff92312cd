//! Signed distance functions for the contact objects.
//!
//! Every solid is described in its own frame with its top (the part that
//! touches the membrane first) at the origin, its body extending toward
//! `-z`, and its "up" axis along `+z`.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cross-section of the irregular prism on the unit scale, counter-clockwise.
/// The origin lies inside the polygon but away from its centroid.
pub const IRREGULAR_PENTAGON: [[f64; 2]; 5] = [
    [-0.6, -0.5],
    [0.7, -0.7],
    [1.0, 0.3],
    [0.1, 0.9],
    [-0.8, 0.4],
];

/// Contact object shapes; all lengths in millimetres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolidSpec {
    /// Upright cone with its apex at the origin.
    Cone { base_radius: f64, height: f64 },
    /// Ball resting with its top at the origin.
    Sphere { radius: f64 },
    /// Upright prism over [`IRREGULAR_PENTAGON`] scaled by `scale`.
    IrregularPrism { scale: f64, height: f64 },
    /// Upright rod with a flat circular top.
    Cylinder { radius: f64, height: f64 },
    /// Triangular wedge whose ridge runs along `y`.
    Edge { base_half_width: f64, height: f64, half_length: f64 },
    /// Upright hollow rod with an annular top.
    Tube { inner_radius: f64, outer_radius: f64, height: f64 },
    /// Box with a flat rectangular top face.
    Slab { half_width: f64, half_length: f64, half_thickness: f64 },
}

impl SolidSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SolidSpec::Cone { .. } => "cone",
            SolidSpec::Sphere { .. } => "sphere",
            SolidSpec::IrregularPrism { .. } => "irregular-prism",
            SolidSpec::Cylinder { .. } => "cylinder",
            SolidSpec::Edge { .. } => "edge",
            SolidSpec::Tube { .. } => "tube",
            SolidSpec::Slab { .. } => "slab",
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            SolidSpec::Cone { base_radius, height } => vec![base_radius, height],
            SolidSpec::Sphere { radius } => vec![radius],
            SolidSpec::IrregularPrism { scale, height } => vec![scale, height],
            SolidSpec::Cylinder { radius, height } => vec![radius, height],
            SolidSpec::Edge { base_half_width, height, half_length } => {
                vec![base_half_width, height, half_length]
            }
            SolidSpec::Tube { inner_radius, outer_radius, height } => {
                vec![inner_radius, outer_radius, height]
            }
            SolidSpec::Slab { half_width, half_length, half_thickness } => {
                vec![half_width, half_length, half_thickness]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self.params().into_iter().find(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("{} size parameters must be positive, got {bad}", self.kind())));
        }
        if let SolidSpec::Tube { inner_radius, outer_radius, .. } = *self {
            if inner_radius >= outer_radius {
                return Err(Error::Config("tube inner radius must be below its outer radius".into()));
            }
        }
        Ok(())
    }

    /// Centre and radius of a sphere enclosing the solid, in its own frame.
    pub fn bounding_sphere(&self) -> (Vector3<f64>, f64) {
        let (half_height, lateral) = match *self {
            SolidSpec::Cone { base_radius, height } => (0.5 * height, base_radius),
            SolidSpec::Sphere { radius } => return (Vector3::new(0.0, 0.0, -radius), radius),
            SolidSpec::IrregularPrism { scale, height } => {
                let reach = IRREGULAR_PENTAGON
                    .iter()
                    .map(|v| v[0].hypot(v[1]))
                    .fold(0.0, f64::max);
                (0.5 * height, scale * reach)
            }
            SolidSpec::Cylinder { radius, height } => (0.5 * height, radius),
            SolidSpec::Edge { base_half_width, height, half_length } => {
                (0.5 * height, base_half_width.hypot(half_length))
            }
            SolidSpec::Tube { outer_radius, height, .. } => (0.5 * height, outer_radius),
            SolidSpec::Slab { half_width, half_length, half_thickness } => {
                (half_thickness, half_width.hypot(half_length))
            }
        };
        (Vector3::new(0.0, 0.0, -half_height), half_height.hypot(lateral))
    }

    /// Signed distance from `p` (solid frame) to the solid's boundary:
    /// negative inside, positive outside.
    pub fn sdf(&self, p: &Vector3<f64>) -> f64 {
        match *self {
            SolidSpec::Cone { base_radius, height } => {
                let profile = [
                    Vector2::new(0.0, 0.0),
                    Vector2::new(-base_radius, -height),
                    Vector2::new(base_radius, -height),
                ];
                sd_polygon(&Vector2::new(p.x.hypot(p.y), p.z), &profile)
            }
            SolidSpec::Sphere { radius } => (p - Vector3::new(0.0, 0.0, -radius)).norm() - radius,
            SolidSpec::IrregularPrism { scale, height } => {
                let poly: Vec<Vector2<f64>> = IRREGULAR_PENTAGON
                    .iter()
                    .map(|v| Vector2::new(v[0] * scale, v[1] * scale))
                    .collect();
                let d2 = sd_polygon(&Vector2::new(p.x, p.y), &poly);
                extrude(d2, (p.z + 0.5 * height).abs() - 0.5 * height)
            }
            SolidSpec::Cylinder { radius, height } => {
                let radial = p.x.hypot(p.y) - radius;
                extrude(radial, (p.z + 0.5 * height).abs() - 0.5 * height)
            }
            SolidSpec::Edge { base_half_width, height, half_length } => {
                let profile = [
                    Vector2::new(0.0, 0.0),
                    Vector2::new(-base_half_width, -height),
                    Vector2::new(base_half_width, -height),
                ];
                let d2 = sd_polygon(&Vector2::new(p.x, p.z), &profile);
                extrude(d2, p.y.abs() - half_length)
            }
            SolidSpec::Tube { inner_radius, outer_radius, height } => {
                let mid = 0.5 * (inner_radius + outer_radius);
                let half_wall = 0.5 * (outer_radius - inner_radius);
                let radial = (p.x.hypot(p.y) - mid).abs() - half_wall;
                extrude(radial, (p.z + 0.5 * height).abs() - 0.5 * height)
            }
            SolidSpec::Slab { half_width, half_length, half_thickness } => {
                let q = Vector3::new(
                    p.x.abs() - half_width,
                    p.y.abs() - half_length,
                    (p.z + half_thickness).abs() - half_thickness,
                );
                let outside = Vector3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
                outside + q.x.max(q.y).max(q.z).min(0.0)
            }
        }
    }
}

/// Combines an in-plane signed distance with a signed distance along the
/// extrusion axis.
fn extrude(d_plane: f64, d_axis: f64) -> f64 {
    d_plane.max(d_axis).min(0.0) + d_plane.max(0.0).hypot(d_axis.max(0.0))
}

/// Exact signed distance to a simple polygon (any winding).
pub fn sd_polygon(p: &Vector2<f64>, verts: &[Vector2<f64>]) -> f64 {
    let n = verts.len();
    let mut best = (p - verts[0]).norm_squared();
    let mut sign = 1.0;
    let mut j = n - 1;
    for i in 0..n {
        let e = verts[j] - verts[i];
        let w = p - verts[i];
        let t = (w.dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
        best = best.min((w - e * t).norm_squared());
        let c0 = p.y >= verts[i].y;
        let c1 = p.y < verts[j].y;
        let c2 = e.x * w.y > e.y * w.x;
        if (c0 && c1 && c2) || (!c0 && !c1 && !c2) {
            sign = -sign;
        }
        j = i;
    }
    sign * best.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<SolidSpec> {
        vec![
            SolidSpec::Cone { base_radius: 2.0, height: 3.0 },
            SolidSpec::Sphere { radius: 3.0 },
            SolidSpec::IrregularPrism { scale: 1.5, height: 2.0 },
            SolidSpec::Cylinder { radius: 1.0, height: 4.0 },
            SolidSpec::Edge { base_half_width: 1.0, height: 2.0, half_length: 3.0 },
            SolidSpec::Tube { inner_radius: 0.5, outer_radius: 1.0, height: 2.0 },
            SolidSpec::Slab { half_width: 2.0, half_length: 3.0, half_thickness: 0.5 },
        ]
    }

    #[test]
    fn sphere_examples() {
        let s = SolidSpec::Sphere { radius: 3.0 };
        assert_eq!(s.sdf(&Vector3::new(0.0, 0.0, -3.0)), -3.0);
        assert!((s.sdf(&Vector3::new(5.0, 0.0, -3.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn slab_face_is_zero() {
        let s = SolidSpec::Slab { half_width: 2.0, half_length: 3.0, half_thickness: 0.5 };
        assert_eq!(s.sdf(&Vector3::new(0.3, -1.0, 0.0)), 0.0);
        assert_eq!(s.sdf(&Vector3::new(0.0, 0.0, -0.5)), -0.5);
        assert!((s.sdf(&Vector3::new(0.0, 0.0, 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tops_touch_the_origin() {
        for s in all() {
            if matches!(s, SolidSpec::Tube { .. }) {
                // hollow: the rim is at z = 0 but the axis is empty
                assert!(s.sdf(&Vector3::new(0.75, 0.0, 0.0)).abs() < 1e-12);
                assert!(s.sdf(&Vector3::new(0.0, 0.0, -0.1)) > 0.0);
                continue;
            }
            assert!(s.sdf(&Vector3::zeros()).abs() < 1e-12, "{s:?}");
            assert!(s.sdf(&Vector3::new(0.0, 0.0, 0.1)) > 0.0, "{s:?}");
            assert!(s.sdf(&Vector3::new(0.0, 0.0, -0.1)) < 0.0, "{s:?}");
        }
    }

    #[test]
    fn cone_interior_distance() {
        // apex half-angle 45 degrees: a point h below the apex is h / sqrt 2 from the wall
        let c = SolidSpec::Cone { base_radius: 3.0, height: 3.0 };
        let d = c.sdf(&Vector3::new(0.0, 0.0, -1.0));
        assert!((d + 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn polygon_sign_is_winding_independent() {
        let ccw: Vec<_> = IRREGULAR_PENTAGON.iter().map(|v| Vector2::new(v[0], v[1])).collect();
        let cw: Vec<_> = ccw.iter().rev().copied().collect();
        for p in [Vector2::new(0.0, 0.0), Vector2::new(2.0, 2.0), Vector2::new(0.9, 0.2)] {
            assert!((sd_polygon(&p, &ccw) - sd_polygon(&p, &cw)).abs() < 1e-12);
        }
        assert!(sd_polygon(&Vector2::zeros(), &ccw) < 0.0);
    }

    #[test]
    fn bounding_spheres_enclose_the_solids() {
        for s in all() {
            let (c, rad) = s.bounding_sphere();
            for i in 0..2000 {
                let t = i as f64 * 0.618_033_988_75;
                let p = c + Vector3::new(t.sin(), (1.7 * t).cos(), (2.3 * t).sin()).normalize() * rad * 1.0001;
                assert!(s.sdf(&p) > 0.0, "{s:?} at {p:?}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(SolidSpec::Sphere { radius: 0.0 }.validate().is_err());
        assert!(SolidSpec::Tube { inner_radius: 1.0, outer_radius: 0.5, height: 1.0 }.validate().is_err());
        for s in all() {
            assert!(s.validate().is_ok());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point() -> impl Strategy<Value = Vector3<f64>> {
            (-6.0..6.0f64, -6.0..6.0f64, -8.0..3.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
        }

        proptest! {
            #[test]
            fn sdfs_are_one_lipschitz(a in point(), b in point()) {
                for s in all() {
                    let lhs = (s.sdf(&a) - s.sdf(&b)).abs();
                    prop_assert!(lhs <= (a - b).norm() * (1.0 + 1e-6) + 1e-12, "{:?}", s);
                }
            }
        }
    }
}
