#pragma once

// Ray-marching inner loops. The scalar kernel is the reference; SIMD variants
// must reproduce it bit for bit (same float operation sequence, no FMA).

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace peakray::kernels {

/// Opacity-corrected, premultiplied LUT in structure-of-arrays layout.
struct MarchLut {
  static constexpr int kSize = 256;
  alignas(32) std::array<float, kSize> r{};
  alignas(32) std::array<float, kSize> g{};
  alignas(32) std::array<float, kSize> b{};
  alignas(32) std::array<float, kSize> a{};
};

/// Flat view of a volume in voxel-coordinate space.
struct VolumeView {
  const float* data = nullptr;
  std::array<int, 3> dims{1, 1, 1};
  /// Upper clamp per axis, dims - 1.
  std::array<float, 3> upper{0, 0, 0};
  /// Largest lower cell index per axis, max(dims - 2, 0).
  std::array<int, 3> max_cell{0, 0, 0};
  /// Element offset of the +1 neighbor per axis (0 on single-voxel axes).
  std::array<int, 3> neighbor{0, 0, 0};
  int stride_y = 0;
  int stride_z = 0;
};

/// One ray in voxel coordinates: sample i sits at entry + (i + 0.5) * step * direction.
struct RaySetup {
  std::array<float, 3> entry{0, 0, 0};
  std::array<float, 3> direction{0, 0, 0};
  float step = 0.0f;
  int steps = 0;
};

/// Premultiplied accumulation before the background is applied.
struct RayAccum {
  float r = 0, g = 0, b = 0, a = 0;
  friend bool operator==(const RayAccum&, const RayAccum&) = default;
};

using MarchFn = void (*)(const VolumeView& volume, const MarchLut& lut, float termination_alpha,
                         std::span<const RaySetup> rays, std::span<RayAccum> out);

void march_scalar(const VolumeView& volume, const MarchLut& lut, float termination_alpha,
                  std::span<const RaySetup> rays, std::span<RayAccum> out);

#if defined(PEAKRAY_HAVE_AVX2)
/// Eight rays per packet; the tail goes through the scalar kernel.
void march_avx2(const VolumeView& volume, const MarchLut& lut, float termination_alpha,
                std::span<const RaySetup> rays, std::span<RayAccum> out);
#endif

enum class KernelKind { Auto, Scalar, Avx2 };

/// True when the AVX2 kernel was compiled in and the CPU supports it.
bool avx2_available();
/// Resolves Auto to the best available kernel. Throws std::invalid_argument
/// if an explicitly requested kernel is unavailable.
KernelKind resolve(KernelKind requested);
MarchFn select(KernelKind requested);
std::string_view name(KernelKind kind);

}  // namespace peakray::kernels
