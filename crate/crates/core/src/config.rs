//! TOML configuration, scene and correspondence files.
//!
//! The sensor parameters live at the top level of the config file:
//!
//! ```toml
//! r_mm = 7.5
//! d_mm = 30.0
//! alpha_px = 1000.0
//! cx_px = 640.0
//! cy_px = 360.0
//! image_width = 1280
//! image_height = 720
//! seed = 0
//!
//! [pipeline]
//! kernel_size = 15
//!
//! [simulator]
//! noise_sigma = 0.0
//!
//! [harness]
//! indentation_mm = 0.1
//! ```
//!
//! Every key is optional and falls back to the defaults shown.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, PixelCoord, SensorGeometry, SensorModel};
use crate::harness::{Experiment, HarnessConfig};
use crate::pipeline::PipelineConfig;
use crate::simulator::{ContactPose, SimulatorConfig, SolidSpec};
use nalgebra::Vector3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub r_mm: f64,
    pub d_mm: f64,
    pub alpha_px: f64,
    pub cx_px: f64,
    pub cy_px: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub simulator: SimulatorConfig,
    pub harness: HarnessConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = SensorGeometry::default();
        let k = CameraIntrinsics::default();
        Self {
            r_mm: g.r,
            d_mm: g.d,
            alpha_px: k.alpha,
            cx_px: k.cx,
            cy_px: k.cy,
            image_width: 1280,
            image_height: 720,
            seed: 0,
            pipeline: PipelineConfig::default(),
            simulator: SimulatorConfig::default(),
            harness: HarnessConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn geometry(&self) -> SensorGeometry {
        SensorGeometry { r: self.r_mm, d: self.d_mm }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics { alpha: self.alpha_px, cx: self.cx_px, cy: self.cy_px }
    }

    pub fn model(&self) -> Result<SensorModel> {
        SensorModel::new(self.geometry(), self.intrinsics())
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::Config("image_width and image_height must be positive".into()));
        }
        let inside = |c: f64, n: usize| (0.0..n as f64).contains(&c);
        if !inside(self.cx_px, self.image_width) || !inside(self.cy_px, self.image_height) {
            return Err(Error::Config(format!(
                "principal point ({}, {}) lies outside the {}x{} image",
                self.cx_px, self.cy_px, self.image_width, self.image_height
            )));
        }
        self.pipeline.validate()?;
        self.simulator.validate()?;
        if !(self.harness.indentation_mm.is_finite() && self.harness.indentation_mm >= 0.0) {
            return Err(Error::Config("indentation_mm must be >= 0".into()));
        }
        for o in &self.harness.objects {
            o.solid.validate()?;
        }
        Ok(())
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.validate()?;
        Ok(Experiment {
            model: self.model()?,
            width: self.image_width,
            height: self.image_height,
            pipeline: self.pipeline,
            simulator: self.simulator,
            harness: self.harness.clone(),
            seed: self.seed,
        })
    }
}

/// Pose of a scene file: rotation vector (radians), translation of the
/// solid's top (mm) and the extra push along the solid's up axis (mm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub axis_angle: [f64; 3],
    pub translation_mm: [f64; 3],
    #[serde(default)]
    pub indentation_mm: f64,
}

impl PoseSpec {
    pub fn to_pose(&self) -> Result<ContactPose> {
        ContactPose::from_axis_angle(self.axis_angle, self.translation_mm, self.indentation_mm)
    }

    pub fn from_pose(pose: &ContactPose) -> Self {
        Self {
            axis_angle: pose.axis_angle(),
            translation_mm: pose.translation.into(),
            indentation_mm: pose.indentation_depth,
        }
    }
}

/// A solid and where it presses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub solid: SolidSpec,
    pub pose: PoseSpec,
}

impl Scene {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scene: Scene = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        scene.solid.validate()?;
        scene.pose.to_pose()?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scene {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// One annotated pixel with its known membrane point, plus the annotated
/// principal point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correspondence {
    pub cx_px: f64,
    pub cy_px: f64,
    pub pixel: [f64; 2],
    pub point_mm: [f64; 3],
}

impl Correspondence {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read correspondence {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn pixel(&self) -> PixelCoord {
        PixelCoord::new(self.pixel[0], self.pixel[1])
    }

    pub fn point(&self) -> Vector3<f64> {
        Vector3::from(self.point_mm)
    }
}
