//! Geometric model, contact detection and imprint simulation for a
//! finger-shaped optical tactile sensor.
//!
//! The sensor is a transparent tube capped by a hemisphere, coated with an
//! opaque elastomer and watched from its base by a single camera. This crate
//! provides:
//!
//! - [`geometry`] – the membrane model and the closed-form mapping between
//!   image pixels and membrane points, plus a ray-marching oracle and the
//!   single-pair focal scale calibration.
//! - [`pipeline`] – image-subtraction contact detection and localization.
//! - [`simulator`] – signed-distance solids pressed into the membrane and
//!   rendered through the sensor camera.
//! - [`harness`] – the eight-position tapping protocol, error aggregation and
//!   report tables.
//! - [`cli`] – the `fingertact` command-line tool.
//!
//! Lengths are in millimetres and image coordinates in pixels.

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod json;
pub mod output;
pub mod pipeline;
pub mod simulator;

pub use error::{Error, Result};
pub use geometry::{
    back_project, calibrate_alpha, project, ray_march_oracle, surface_contains, CameraIntrinsics, PixelCoord,
    SensorGeometry, SensorModel, SurfacePoint, SurfaceRegion,
};
pub use image::TactileImage;
pub use pipeline::{detect_contact, localize_contact, predict_contact, ContactPrediction, PipelineConfig};
pub use simulator::{render_imprint, ContactPose, ImprintRender, SolidSpec};
