//! C ABI for the `fingertact` library.
//!
//! Every function returns an [`FtStatus`]; on failure a human-readable
//! message is available from [`ft_last_error_message`] on the same thread.
//! Sensors are opaque handles created by `ft_sensor_new` or
//! `ft_sensor_from_config_file` and released with `ft_sensor_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fingertact::config::{RunConfig, Scene};
use fingertact::geometry::{self, PixelCoord, SurfacePoint, SurfaceRegion};
use fingertact::image::TactileImage;
use fingertact::pipeline::predict_contact;
use fingertact::simulator::render_imprint;
use fingertact::Error;
use nalgebra::Vector3;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    NoIntersection = 3,
    Unidentifiable = 4,
    ShapeMismatch = 5,
    Config = 6,
    Io = 7,
    Image = 8,
    Internal = 9,
    Panic = 10,
}

/// Which part of the membrane a point lies on.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FtRegion {
    #[default]
    Sphere = 0,
    Cylinder = 1,
    Junction = 2,
}

/// A point on the membrane, in millimetres.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FtSurfacePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub region: FtRegion,
}

/// Outcome of contact detection. `found` is 0 when no region passed the
/// detector, in which case the other fields are zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FtContact {
    pub found: u8,
    pub u: f64,
    pub v: f64,
    pub point: FtSurfacePoint,
    pub region_count: usize,
}

/// Opaque sensor handle: geometry, camera, image size and detector settings.
pub struct FtSensor {
    config: RunConfig,
}

impl From<SurfaceRegion> for FtRegion {
    fn from(r: SurfaceRegion) -> Self {
        match r {
            SurfaceRegion::Sphere => FtRegion::Sphere,
            SurfaceRegion::Cylinder => FtRegion::Cylinder,
            SurfaceRegion::Junction => FtRegion::Junction,
        }
    }
}

impl From<SurfacePoint> for FtSurfacePoint {
    fn from(p: SurfacePoint) -> Self {
        Self { x: p.x, y: p.y, z: p.z, region: p.region.into() }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> FtStatus {
    match err {
        Error::Domain(_) => FtStatus::Domain,
        Error::NoIntersection => FtStatus::NoIntersection,
        Error::Unidentifiable(_) => FtStatus::Unidentifiable,
        Error::Shape { .. } => FtStatus::ShapeMismatch,
        Error::Config(_) | Error::Usage(_) => FtStatus::Config,
        Error::Io(_) => FtStatus::Io,
        Error::Image(_) => FtStatus::Image,
        Error::Internal(_) => FtStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            FtStatus::Ok
        }
        Ok(Err(FfiError::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            FtStatus::NullPointer
        }
        Ok(Err(FfiError::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("panic inside fingertact");
            FtStatus::Panic
        }
    }
}

enum FfiError {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for FfiError {
    fn from(e: Error) -> Self {
        FfiError::Lib(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, FfiError> {
    p.as_mut().ok_or(FfiError::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| FfiError::Lib(Error::Config(format!("{what} is not UTF-8: {e}"))))
}

unsafe fn image_from(sensor: &FtSensor, data: *const f64, len: usize, what: &'static str) -> Result<TactileImage, FfiError> {
    if data.is_null() {
        return Err(FfiError::Null(what));
    }
    let pixels = std::slice::from_raw_parts(data, len).to_vec();
    Ok(TactileImage::new(sensor.config.image_width, sensor.config.image_height, pixels)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next fingertact call on this thread.
#[no_mangle]
pub extern "C" fn ft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a sensor with default detector settings.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ft_sensor_new(
    r_mm: f64,
    d_mm: f64,
    alpha_px: f64,
    cx_px: f64,
    cy_px: f64,
    image_width: usize,
    image_height: usize,
    out: *mut *mut FtSensor,
) -> FtStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let config = RunConfig {
            r_mm,
            d_mm,
            alpha_px,
            cx_px,
            cy_px,
            image_width,
            image_height,
            ..RunConfig::default()
        };
        config.validate()?;
        *out = Box::into_raw(Box::new(FtSensor { config }));
        Ok(())
    })
}

/// Creates a sensor from a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_sensor_from_config_file(path: *const c_char, out: *mut *mut FtSensor) -> FtStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let out = deref_mut(out, "out")?;
        let config = RunConfig::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(FtSensor { config }));
        Ok(())
    })
}

/// Releases a sensor. Passing null is a no-op.
///
/// # Safety
/// `sensor` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ft_sensor_free(sensor: *mut FtSensor) {
    if !sensor.is_null() {
        drop(Box::from_raw(sensor));
    }
}

/// Image size the sensor expects, in pixels.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_sensor_image_size(
    sensor: *const FtSensor,
    out_width: *mut usize,
    out_height: *mut usize,
) -> FtStatus {
    guard(|| {
        let s = deref(sensor, "sensor")?;
        *deref_mut(out_width, "out_width")? = s.config.image_width;
        *deref_mut(out_height, "out_height")? = s.config.image_height;
        Ok(())
    })
}

/// Projects a camera-frame point (mm) to pixel coordinates.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_project(
    sensor: *const FtSensor,
    x: f64,
    y: f64,
    z: f64,
    out_u: *mut f64,
    out_v: *mut f64,
) -> FtStatus {
    guard(|| {
        let s = deref(sensor, "sensor")?;
        let px = geometry::project(&Vector3::new(x, y, z), &s.config.intrinsics())?;
        *deref_mut(out_u, "out_u")? = px.u;
        *deref_mut(out_v, "out_v")? = px.v;
        Ok(())
    })
}

/// Maps a pixel to the membrane point it images.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_back_project(
    sensor: *const FtSensor,
    u: f64,
    v: f64,
    out: *mut FtSurfacePoint,
) -> FtStatus {
    guard(|| {
        let s = deref(sensor, "sensor")?;
        let p = geometry::back_project(&PixelCoord::new(u, v), &s.config.intrinsics(), &s.config.geometry())?;
        *deref_mut(out, "out")? = p.into();
        Ok(())
    })
}

/// Fits the focal scale from one pixel and its known membrane point.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_calibrate_alpha(
    u: f64,
    v: f64,
    x: f64,
    y: f64,
    z: f64,
    cx: f64,
    cy: f64,
    out_alpha: *mut f64,
    out_residual_mm: *mut f64,
) -> FtStatus {
    guard(|| {
        let fit = geometry::calibrate_alpha(&PixelCoord::new(u, v), &Vector3::new(x, y, z), cx, cy)?;
        *deref_mut(out_alpha, "out_alpha")? = fit.alpha;
        *deref_mut(out_residual_mm, "out_residual_mm")? = fit.residual_mm;
        Ok(())
    })
}

/// Detects and localizes a contact from two row-major intensity images in
/// [0, 1], each `len` = width × height values.
///
/// # Safety
/// `reference` and `contact` must point to `len` readable values; `out` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_detect_contact(
    sensor: *const FtSensor,
    reference: *const f64,
    contact: *const f64,
    len: usize,
    out: *mut FtContact,
) -> FtStatus {
    guard(|| {
        let s = deref(sensor, "sensor")?;
        let out = deref_mut(out, "out")?;
        let reference = image_from(s, reference, len, "reference")?;
        let contact = image_from(s, contact, len, "contact")?;
        let cfg = &s.config;
        let pred = predict_contact(&reference, &contact, &cfg.pipeline, &cfg.intrinsics(), &cfg.geometry())?;
        *out = match pred {
            None => FtContact::default(),
            Some(p) => FtContact {
                found: 1,
                u: p.pixel.u,
                v: p.pixel.v,
                point: p.surface_point.into(),
                region_count: p.regions.len(),
            },
        };
        Ok(())
    })
}

/// Renders the noise-free imprint of a TOML scene (solid and pose) into
/// `out_image` (`len` = width × height values). `out_found` is set to 0 when
/// the solid does not touch the membrane, in which case `out_truth` is left
/// untouched.
///
/// # Safety
/// `scene_toml` must be NUL-terminated; `out_image` must hold `len` values;
/// the other output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_render_scene(
    sensor: *const FtSensor,
    scene_toml: *const c_char,
    out_image: *mut f64,
    len: usize,
    out_found: *mut u8,
    out_truth: *mut FtSurfacePoint,
) -> FtStatus {
    guard(|| {
        let s = deref(sensor, "sensor")?;
        let scene = Scene::from_toml(c_str(scene_toml, "scene_toml")?)?;
        let found = deref_mut(out_found, "out_found")?;
        let truth = deref_mut(out_truth, "out_truth")?;
        if out_image.is_null() {
            return Err(FfiError::Null("out_image"));
        }
        let cfg = &s.config;
        let expected = cfg.image_width * cfg.image_height;
        if len != expected {
            return Err(Error::Shape {
                left_w: len,
                left_h: 1,
                right_w: cfg.image_width,
                right_h: cfg.image_height,
            }
            .into());
        }
        let render = render_imprint(
            &scene.solid,
            &scene.pose.to_pose()?,
            &cfg.model()?,
            cfg.image_width,
            cfg.image_height,
            cfg.simulator.normalization,
        )?;
        std::slice::from_raw_parts_mut(out_image, len).copy_from_slice(render.image.data());
        *found = u8::from(render.ground_truth.is_some());
        if let Some(p) = render.ground_truth {
            *truth = p.into();
        }
        Ok(())
    })
}
