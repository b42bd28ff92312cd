use thiserror::Error;

/// Errors produced by the geometric model, the detection pipeline, the
/// simulator and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (e.g. a point at or
    /// behind the focal plane).
    #[error("domain error: {0}")]
    Domain(String),

    /// The viewing ray through a pixel never meets the sensor surface.
    #[error("no intersection between the viewing ray and the sensor surface")]
    NoIntersection,

    /// A calibration pair carries no scale information.
    #[error("unidentifiable calibration: {0}")]
    Unidentifiable(String),

    #[error("shape mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    Shape {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
