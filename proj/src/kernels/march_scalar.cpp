#include "peakray/kernels.hpp"

#include <cmath>

namespace peakray::kernels {

namespace {

// Mirrors _mm256_max_ps / _mm256_min_ps, including NaN handling (second
// operand wins).
inline float max_like_simd(float a, float b) { return a > b ? a : b; }
inline float min_like_simd(float a, float b) { return a < b ? a : b; }

inline int min_int(int a, int b) { return a < b ? a : b; }

}  // namespace

void march_scalar(const VolumeView& vol, const MarchLut& lut, float termination_alpha,
                  std::span<const RaySetup> rays, std::span<RayAccum> out) {
  const float* data = vol.data;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const RaySetup& ray = rays[r];
    float acc_r = 0.0f, acc_g = 0.0f, acc_b = 0.0f, acc_a = 0.0f;

    for (int i = 0; i < ray.steps; ++i) {
      if (!(acc_a < termination_alpha)) break;
      const float t = (static_cast<float>(i) + 0.5f) * ray.step;

      int cell[3];
      float frac[3];
      for (int a = 0; a < 3; ++a) {
        float u = ray.entry[a] + t * ray.direction[a];
        u = max_like_simd(u, 0.0f);
        u = min_like_simd(u, vol.upper[a]);
        const float fl = std::floor(u);
        cell[a] = min_int(static_cast<int>(fl), vol.max_cell[a]);
        frac[a] = u - static_cast<float>(cell[a]);
      }

      const int base = cell[0] + cell[1] * vol.stride_y + cell[2] * vol.stride_z;
      const int ox = vol.neighbor[0], oy = vol.neighbor[1], oz = vol.neighbor[2];
      const float v000 = data[base];
      const float v100 = data[base + ox];
      const float v010 = data[base + oy];
      const float v110 = data[base + ox + oy];
      const float v001 = data[base + oz];
      const float v101 = data[base + ox + oz];
      const float v011 = data[base + oy + oz];
      const float v111 = data[base + ox + oy + oz];

      const float c00 = v000 + (v100 - v000) * frac[0];
      const float c10 = v010 + (v110 - v010) * frac[0];
      const float c01 = v001 + (v101 - v001) * frac[0];
      const float c11 = v011 + (v111 - v011) * frac[0];
      const float c0 = c00 + (c10 - c00) * frac[1];
      const float c1 = c01 + (c11 - c01) * frac[1];
      const float value = c0 + (c1 - c0) * frac[2];

      const int k = min_int(static_cast<int>(value * 256.0f), MarchLut::kSize - 1);
      const float w = 1.0f - acc_a;
      acc_r = acc_r + w * lut.r[k];
      acc_g = acc_g + w * lut.g[k];
      acc_b = acc_b + w * lut.b[k];
      acc_a = acc_a + w * lut.a[k];
    }
    out[r] = {acc_r, acc_g, acc_b, acc_a};
  }
}

}  // namespace peakray::kernels
