#ifndef FINGERTACT_H
#define FINGERTACT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_DOMAIN = 2,
  FT_STATUS_NO_INTERSECTION = 3,
  FT_STATUS_UNIDENTIFIABLE = 4,
  FT_STATUS_SHAPE_MISMATCH = 5,
  FT_STATUS_CONFIG = 6,
  FT_STATUS_IO = 7,
  FT_STATUS_IMAGE = 8,
  FT_STATUS_INTERNAL = 9,
  FT_STATUS_PANIC = 10,
} FtStatus;

/**
 * Which part of the membrane a point lies on.
 */
typedef enum FtRegion {
  FT_REGION_SPHERE = 0,
  FT_REGION_CYLINDER = 1,
  FT_REGION_JUNCTION = 2,
} FtRegion;

/**
 * Opaque sensor handle: geometry, camera, image size and detector settings.
 */
typedef struct FtSensor FtSensor;

/**
 * A point on the membrane, in millimetres.
 */
typedef struct FtSurfacePoint {
  double x;
  double y;
  double z;
  enum FtRegion region;
} FtSurfacePoint;

/**
 * Outcome of contact detection. `found` is 0 when no region passed the
 * detector, in which case the other fields are zero.
 */
typedef struct FtContact {
  uint8_t found;
  double u;
  double v;
  struct FtSurfacePoint point;
  size_t region_count;
} FtContact;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ft_version(void);

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next fingertact call on this thread.
 */
const char *ft_last_error_message(void);

/**
 * Creates a sensor with default detector settings.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum FtStatus ft_sensor_new(double r_mm,
                            double d_mm,
                            double alpha_px,
                            double cx_px,
                            double cy_px,
                            size_t image_width,
                            size_t image_height,
                            struct FtSensor **out);

/**
 * Creates a sensor from a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FtStatus ft_sensor_from_config_file(const char *path, struct FtSensor **out);

/**
 * Releases a sensor. Passing null is a no-op.
 *
 * # Safety
 * `sensor` must come from this library and not be used afterwards.
 */
void ft_sensor_free(struct FtSensor *sensor);

/**
 * Image size the sensor expects, in pixels.
 *
 * # Safety
 * All pointers must be valid.
 */
enum FtStatus ft_sensor_image_size(const struct FtSensor *sensor,
                                   size_t *out_width,
                                   size_t *out_height);

/**
 * Projects a camera-frame point (mm) to pixel coordinates.
 *
 * # Safety
 * All pointers must be valid.
 */
enum FtStatus ft_project(const struct FtSensor *sensor,
                         double x,
                         double y,
                         double z,
                         double *out_u,
                         double *out_v);

/**
 * Maps a pixel to the membrane point it images.
 *
 * # Safety
 * All pointers must be valid.
 */
enum FtStatus ft_back_project(const struct FtSensor *sensor,
                              double u,
                              double v,
                              struct FtSurfacePoint *out);

/**
 * Fits the focal scale from one pixel and its known membrane point.
 *
 * # Safety
 * Output pointers must be valid.
 */
enum FtStatus ft_calibrate_alpha(double u,
                                 double v,
                                 double x,
                                 double y,
                                 double z,
                                 double cx,
                                 double cy,
                                 double *out_alpha,
                                 double *out_residual_mm);

/**
 * Detects and localizes a contact from two row-major intensity images in
 * [0, 1], each `len` = width × height values.
 *
 * # Safety
 * `reference` and `contact` must point to `len` readable values; `out` must
 * be valid.
 */
enum FtStatus ft_detect_contact(const struct FtSensor *sensor,
                                const double *reference,
                                const double *contact,
                                size_t len,
                                struct FtContact *out);

/**
 * Renders the noise-free imprint of a TOML scene (solid and pose) into
 * `out_image` (`len` = width × height values). `out_found` is set to 0 when
 * the solid does not touch the membrane, in which case `out_truth` is left
 * untouched.
 *
 * # Safety
 * `scene_toml` must be NUL-terminated; `out_image` must hold `len` values;
 * the other output pointers must be valid.
 */
enum FtStatus ft_render_scene(const struct FtSensor *sensor,
                              const char *scene_toml,
                              double *out_image,
                              size_t len,
                              uint8_t *out_found,
                              struct FtSurfacePoint *out_truth);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FINGERTACT_H */
