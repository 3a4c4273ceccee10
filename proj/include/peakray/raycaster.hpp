#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "peakray/kernels.hpp"
#include "peakray/math.hpp"
#include "peakray/transfer_function.hpp"
#include "peakray/volume.hpp"

namespace peakray {

struct Camera {
  Vec3 eye{0, 0, 100};
  Vec3 look_at{0, 0, 0};
  Vec3 up{0, 1, 0};
  double vertical_fov = 0.7;  // radians
  int width = 256;
  int height = 256;
};

/// Throws std::invalid_argument.
void validate(const Camera& camera);

/// Camera on the +z axis framing a volume of the given extent.
Camera default_camera(Vec3 extent, int width, int height);

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  Vec3 at(double t) const { return origin + direction * t; }
};

/// Pinhole ray through the center of pixel (px, py); (0,0) is top-left.
Ray camera_ray(const Camera& camera, int px, int py);

/// Rigid volume placement: world = rotation * local + translation. Rotation
/// is about the volume center.
struct VolumeTransform {
  Mat3 rotation = Mat3::identity();
  Vec3 translation{0, 0, 0};

  Vec3 to_local_point(Vec3 world) const { return rotation.transposed() * (world - translation); }
  Vec3 to_local_direction(Vec3 world) const { return rotation.transposed() * world; }
  Ray to_local(const Ray& r) const { return {to_local_point(r.origin), to_local_direction(r.direction)}; }
  friend bool operator==(const VolumeTransform&, const VolumeTransform&) = default;
};

/// Half-space cut in volume-local space. Points with dot(normal, p) <= offset
/// are kept; the normal points into the removed side.
struct ClipPlane {
  Vec3 normal{0, 0, 1};
  double offset = 0.0;
  bool enabled = false;

  bool keeps(Vec3 local) const { return !enabled || dot(normal, local) <= offset; }
  friend bool operator==(const ClipPlane&, const ClipPlane&) = default;
};

struct RenderSettings {
  double step_size = 0.5;
  /// 1.0 disables early ray termination.
  double early_termination_alpha = 0.99;
  double reference_step = 1.0;
  Rgba background{0, 0, 0, 1};
  /// Worker threads for render_frame; 0 = hardware concurrency.
  int threads = 0;
  kernels::KernelKind kernel = kernels::KernelKind::Auto;

  /// step = 0.5 * min spacing, reference = min spacing.
  static RenderSettings defaults_for(const VolumeMeta& meta);
};

void validate(const RenderSettings& settings);

struct Interval {
  double t_near = 0.0;
  double t_far = 0.0;
  double length() const { return t_far - t_near; }
};

/// Parametric range of a world ray inside the transformed volume box, cut by
/// the clip plane when enabled. Empty when there is no overlap; t_near >= 0.
std::optional<Interval> clip_interval(const Ray& world_ray, Vec3 extent, const VolumeTransform& transform,
                                      const ClipPlane& plane);

/// 1 - (1 - alpha)^(step / reference_step).
double opacity_correct(double alpha, double step, double reference_step);

struct RayComposite {
  Rgba accumulated;   // premultiplied, before background
  Rgba final_color;   // straight alpha, after background
};

/// Front-to-back compositing along one ray given in volume-local space.
RayComposite composite_ray(const Ray& local_ray, const Interval& interval, const Volume& volume,
                           const LookupTable& lut, const RenderSettings& settings);

/// RGBA8, row-major, top-left origin, straight alpha.
struct FrameBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  FrameBuffer() = default;
  FrameBuffer(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 4, 0) {}

  const std::uint8_t* pixel(int x, int y) const { return &pixels[(static_cast<std::size_t>(y) * width + x) * 4]; }
  std::uint8_t* pixel(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 4]; }
  friend bool operator==(const FrameBuffer&, const FrameBuffer&) = default;
};

/// Round-half-up quantization of [0,1] to 0..255.
std::uint8_t quantize_channel(double v);

FrameBuffer render_frame(const Volume& volume, const TransferFunction& tf, const Camera& camera,
                         const VolumeTransform& transform, const ClipPlane& plane, const RenderSettings& settings);

/// Same as render_frame with a prebuilt LUT.
FrameBuffer render_frame_lut(const Volume& volume, const LookupTable& lut, const Camera& camera,
                             const VolumeTransform& transform, const ClipPlane& plane,
                             const RenderSettings& settings);

}  // namespace peakray
