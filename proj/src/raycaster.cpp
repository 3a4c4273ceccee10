#include "peakray/raycaster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace peakray {

namespace {

constexpr int kTileSize = 32;

kernels::MarchLut make_march_lut(const LookupTable& lut, const RenderSettings& s) {
  kernels::MarchLut m;
  for (int k = 0; k < LookupTable::kSize; ++k) {
    const Rgba& e = lut.entries[k];
    const double a = opacity_correct(e.a, s.step_size, s.reference_step);
    m.r[k] = static_cast<float>(e.r * a);
    m.g[k] = static_cast<float>(e.g * a);
    m.b[k] = static_cast<float>(e.b * a);
    m.a[k] = static_cast<float>(a);
  }
  return m;
}

kernels::VolumeView make_view(const Volume& volume) {
  const auto& m = volume.meta();
  kernels::VolumeView v;
  v.data = volume.values().data();
  v.dims = m.dims;
  v.stride_y = m.dims[0];
  v.stride_z = m.dims[0] * m.dims[1];
  const int strides[3] = {1, v.stride_y, v.stride_z};
  for (int a = 0; a < 3; ++a) {
    v.upper[a] = static_cast<float>(m.dims[a] - 1);
    v.max_cell[a] = std::max(m.dims[a] - 2, 0);
    v.neighbor[a] = m.dims[a] > 1 ? strides[a] : 0;
  }
  return v;
}

kernels::RaySetup make_setup(const Ray& local, const Interval& iv, const VolumeMeta& m, double step) {
  kernels::RaySetup s;
  const Vec3 half = m.extent() * 0.5;
  const Vec3 entry = local.at(iv.t_near);
  for (int a = 0; a < 3; ++a) {
    s.entry[a] = static_cast<float>((entry[a] + half[a]) / m.spacing[a] - 0.5);
    s.direction[a] = static_cast<float>(local.direction[a] / m.spacing[a]);
  }
  s.step = static_cast<float>(step);
  s.steps = static_cast<int>(std::floor(iv.length() / step + 0.5));
  return s;
}

RayComposite finish(const kernels::RayAccum& acc, const Rgba& bg) {
  RayComposite out;
  out.accumulated = {acc.r, acc.g, acc.b, acc.a};
  const double rest = 1.0 - static_cast<double>(acc.a);
  double a = acc.a + rest * bg.a;
  double r = acc.r + rest * bg.r * bg.a;
  double g = acc.g + rest * bg.g * bg.a;
  double b = acc.b + rest * bg.b * bg.a;
  if (a > 0.0) {
    r /= a;
    g /= a;
    b /= a;
  }
  auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  out.final_color = {unit(r), unit(g), unit(b), unit(a)};
  return out;
}

}  // namespace

void validate(const Camera& c) {
  if (length(c.look_at - c.eye) <= 0.0) throw std::invalid_argument("camera eye and look_at coincide");
  if (!(c.vertical_fov > 0.0 && c.vertical_fov < std::numbers::pi))
    throw std::invalid_argument("camera vertical_fov must be in (0, pi)");
  if (c.width < 1 || c.height < 1) throw std::invalid_argument("camera image size must be at least 1x1");
  if (length(cross(c.look_at - c.eye, c.up)) <= 0.0) throw std::invalid_argument("camera up is parallel to view");
}

Camera default_camera(Vec3 extent, int width, int height) {
  Camera c;
  const double radius = 0.5 * length(extent);
  c.vertical_fov = 0.7;
  c.eye = {0, 0, 1.15 * radius / std::tan(c.vertical_fov / 2)};
  c.width = width;
  c.height = height;
  return c;
}

Ray camera_ray(const Camera& c, int px, int py) {
  const Vec3 forward = normalize(c.look_at - c.eye);
  const Vec3 right = normalize(cross(forward, c.up));
  const Vec3 up = cross(right, forward);
  const double tan_half = std::tan(c.vertical_fov / 2);
  const double aspect = static_cast<double>(c.width) / c.height;
  const double sx = (2.0 * (px + 0.5) / c.width - 1.0) * tan_half * aspect;
  const double sy = (1.0 - 2.0 * (py + 0.5) / c.height) * tan_half;
  return {c.eye, normalize(forward + right * sx + up * sy)};
}

RenderSettings RenderSettings::defaults_for(const VolumeMeta& meta) {
  RenderSettings s;
  s.step_size = 0.5 * meta.min_spacing();
  s.reference_step = meta.min_spacing();
  return s;
}

void validate(const RenderSettings& s) {
  if (!(s.step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (!(s.reference_step > 0.0)) throw std::invalid_argument("reference_step must be positive");
  if (!(s.early_termination_alpha > 0.0 && s.early_termination_alpha <= 1.0))
    throw std::invalid_argument("early_termination_alpha must be in (0, 1]");
  if (s.threads < 0) throw std::invalid_argument("threads must be >= 0");
}

std::optional<Interval> clip_interval(const Ray& world_ray, Vec3 extent, const VolumeTransform& transform,
                                      const ClipPlane& plane) {
  const Ray r = transform.to_local(world_ray);
  const Vec3 half = extent * 0.5;
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (r.direction[a] == 0.0) {
      if (std::abs(r.origin[a]) > half[a]) return std::nullopt;
      continue;
    }
    double ta = (-half[a] - r.origin[a]) / r.direction[a];
    double tb = (half[a] - r.origin[a]) / r.direction[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (plane.enabled) {
    const double denom = dot(plane.normal, r.direction);
    const double num = plane.offset - dot(plane.normal, r.origin);
    if (denom == 0.0) {
      if (num < 0.0) return std::nullopt;
    } else if (denom > 0.0) {
      t1 = std::min(t1, num / denom);
    } else {
      t0 = std::max(t0, num / denom);
    }
  }
  if (!(t1 > t0)) return std::nullopt;
  return Interval{t0, t1};
}

double opacity_correct(double alpha, double step, double reference_step) {
  if (alpha <= 0.0) return 0.0;
  if (alpha >= 1.0) return 1.0;
  return 1.0 - std::pow(1.0 - alpha, step / reference_step);
}

RayComposite composite_ray(const Ray& local_ray, const Interval& interval, const Volume& volume,
                           const LookupTable& lut, const RenderSettings& settings) {
  validate(settings);
  const auto march_lut = make_march_lut(lut, settings);
  const auto view = make_view(volume);
  const kernels::RaySetup setup = make_setup(local_ray, interval, volume.meta(), settings.step_size);
  kernels::RayAccum acc;
  kernels::select(settings.kernel)(view, march_lut, static_cast<float>(settings.early_termination_alpha),
                                   std::span(&setup, 1), std::span(&acc, 1));
  return finish(acc, settings.background);
}

std::uint8_t quantize_channel(double v) {
  const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::min(q, 255.0));
}

FrameBuffer render_frame(const Volume& volume, const TransferFunction& tf, const Camera& camera,
                         const VolumeTransform& transform, const ClipPlane& plane, const RenderSettings& settings) {
  return render_frame_lut(volume, build_lut(tf), camera, transform, plane, settings);
}

FrameBuffer render_frame_lut(const Volume& volume, const LookupTable& lut, const Camera& camera,
                             const VolumeTransform& transform, const ClipPlane& plane,
                             const RenderSettings& settings) {
  validate(camera);
  validate(settings);
  const kernels::MarchFn march = kernels::select(settings.kernel);
  const auto march_lut = make_march_lut(lut, settings);
  const auto view = make_view(volume);
  const VolumeMeta& meta = volume.meta();
  const Vec3 extent = meta.extent();
  const float termination = static_cast<float>(settings.early_termination_alpha);

  FrameBuffer frame(camera.width, camera.height);
  const int tiles_x = (camera.width + kTileSize - 1) / kTileSize;
  const int tiles_y = (camera.height + kTileSize - 1) / kTileSize;
  const int tile_count = tiles_x * tiles_y;

  auto render_tile = [&](int tile) {
    const int x0 = (tile % tiles_x) * kTileSize;
    const int y0 = (tile / tiles_x) * kTileSize;
    const int x1 = std::min(x0 + kTileSize, camera.width);
    const int y1 = std::min(y0 + kTileSize, camera.height);
    std::array<kernels::RaySetup, kTileSize> rays;
    std::array<kernels::RayAccum, kTileSize> accum;
    const int n = x1 - x0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const Ray world = camera_ray(camera, x, y);
        const auto iv = clip_interval(world, extent, transform, plane);
        rays[x - x0] = iv ? make_setup(transform.to_local(world), *iv, meta, settings.step_size) : kernels::RaySetup{};
      }
      march(view, march_lut, termination, std::span(rays.data(), n), std::span(accum.data(), n));
      for (int x = x0; x < x1; ++x) {
        const Rgba c = finish(accum[x - x0], settings.background).final_color;
        std::uint8_t* px = frame.pixel(x, y);
        px[0] = quantize_channel(c.r);
        px[1] = quantize_channel(c.g);
        px[2] = quantize_channel(c.b);
        px[3] = quantize_channel(c.a);
      }
    }
  };

  int workers = settings.threads > 0 ? settings.threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, tile_count);
  if (workers == 1) {
    for (int t = 0; t < tile_count; ++t) render_tile(t);
    return frame;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int t = next.fetch_add(1); t < tile_count; t = next.fetch_add(1)) render_tile(t);
    });
  }
  pool.clear();
  return frame;
}

}  // namespace peakray
