#include "peakray/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace peakray::kernels {

namespace {

constexpr int kLanes = 8;

struct Packet {
  __m256 entry[3];
  __m256 dir[3];
  __m256 step;
  __m256i steps;
  int max_steps;
};

Packet load_packet(std::span<const RaySetup> rays) {
  alignas(32) float entry[3][kLanes], dir[3][kLanes], step[kLanes];
  alignas(32) int steps[kLanes];
  Packet p;
  p.max_steps = 0;
  for (int l = 0; l < kLanes; ++l) {
    const RaySetup& r = rays[l];
    for (int a = 0; a < 3; ++a) {
      entry[a][l] = r.entry[a];
      dir[a][l] = r.direction[a];
    }
    step[l] = r.step;
    steps[l] = r.steps;
    p.max_steps = std::max(p.max_steps, r.steps);
  }
  for (int a = 0; a < 3; ++a) {
    p.entry[a] = _mm256_load_ps(entry[a]);
    p.dir[a] = _mm256_load_ps(dir[a]);
  }
  p.step = _mm256_load_ps(step);
  p.steps = _mm256_load_si256(reinterpret_cast<const __m256i*>(steps));
  return p;
}

void march_packet(const VolumeView& vol, const MarchLut& lut, __m256 termination, const Packet& p,
                  RayAccum* out) {
  const float* data = vol.data;
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 lut_scale = _mm256_set1_ps(256.0f);
  const __m256i lut_max = _mm256_set1_epi32(MarchLut::kSize - 1);

  __m256 upper[3];
  __m256i max_cell[3];
  for (int a = 0; a < 3; ++a) {
    upper[a] = _mm256_set1_ps(vol.upper[a]);
    max_cell[a] = _mm256_set1_epi32(vol.max_cell[a]);
  }
  const __m256i stride_y = _mm256_set1_epi32(vol.stride_y);
  const __m256i stride_z = _mm256_set1_epi32(vol.stride_z);
  const __m256i ox = _mm256_set1_epi32(vol.neighbor[0]);
  const __m256i oy = _mm256_set1_epi32(vol.neighbor[1]);
  const __m256i oz = _mm256_set1_epi32(vol.neighbor[2]);
  const __m256i oxy = _mm256_add_epi32(ox, oy);
  const __m256i oxz = _mm256_add_epi32(ox, oz);
  const __m256i oyz = _mm256_add_epi32(oy, oz);
  const __m256i oxyz = _mm256_add_epi32(oxy, oz);

  __m256 acc_r = zero, acc_g = zero, acc_b = zero, acc_a = zero;

  for (int i = 0; i < p.max_steps; ++i) {
    const __m256i idx = _mm256_set1_epi32(i);
    const __m256 in_range = _mm256_castsi256_ps(_mm256_cmpgt_epi32(p.steps, idx));
    const __m256 open = _mm256_cmp_ps(acc_a, termination, _CMP_LT_OQ);
    const __m256 active = _mm256_and_ps(in_range, open);
    if (_mm256_testz_ps(active, active)) break;

    const __m256 t = _mm256_mul_ps(_mm256_add_ps(_mm256_cvtepi32_ps(idx), half), p.step);

    __m256i cell[3];
    __m256 frac[3];
    for (int a = 0; a < 3; ++a) {
      __m256 u = _mm256_add_ps(p.entry[a], _mm256_mul_ps(t, p.dir[a]));
      u = _mm256_max_ps(u, zero);
      u = _mm256_min_ps(u, upper[a]);
      const __m256 fl = _mm256_floor_ps(u);
      cell[a] = _mm256_min_epi32(_mm256_cvttps_epi32(fl), max_cell[a]);
      frac[a] = _mm256_sub_ps(u, _mm256_cvtepi32_ps(cell[a]));
    }

    const __m256i base = _mm256_add_epi32(
        cell[0], _mm256_add_epi32(_mm256_mullo_epi32(cell[1], stride_y), _mm256_mullo_epi32(cell[2], stride_z)));

    const __m256 v000 = _mm256_i32gather_ps(data, base, 4);
    const __m256 v100 = _mm256_i32gather_ps(data, _mm256_add_epi32(base, ox), 4);
    const __m256 v010 = _mm256_i32gather_ps(data, _mm256_add_epi32(base, oy), 4);
    const __m256 v110 = _mm256_i32gather_ps(data, _mm256_add_epi32(base, oxy), 4);
    const __m256 v001 = _mm256_i32gather_ps(data, _mm256_add_epi32(base, oz), 4);
    const __m256 v101 = _mm256_i32gather_ps(data, _mm256_add_epi32(base, oxz), 4);
    const __m256 v011 = _mm256_i32gather_ps(data, _mm256_add_epi32(base, oyz), 4);
    const __m256 v111 = _mm256_i32gather_ps(data, _mm256_add_epi32(base, oxyz), 4);

    const __m256 c00 = _mm256_add_ps(v000, _mm256_mul_ps(_mm256_sub_ps(v100, v000), frac[0]));
    const __m256 c10 = _mm256_add_ps(v010, _mm256_mul_ps(_mm256_sub_ps(v110, v010), frac[0]));
    const __m256 c01 = _mm256_add_ps(v001, _mm256_mul_ps(_mm256_sub_ps(v101, v001), frac[0]));
    const __m256 c11 = _mm256_add_ps(v011, _mm256_mul_ps(_mm256_sub_ps(v111, v011), frac[0]));
    const __m256 c0 = _mm256_add_ps(c00, _mm256_mul_ps(_mm256_sub_ps(c10, c00), frac[1]));
    const __m256 c1 = _mm256_add_ps(c01, _mm256_mul_ps(_mm256_sub_ps(c11, c01), frac[1]));
    const __m256 value = _mm256_add_ps(c0, _mm256_mul_ps(_mm256_sub_ps(c1, c0), frac[2]));

    const __m256i k = _mm256_min_epi32(_mm256_cvttps_epi32(_mm256_mul_ps(value, lut_scale)), lut_max);
    const __m256 w = _mm256_sub_ps(one, acc_a);
    const __m256 lr = _mm256_i32gather_ps(lut.r.data(), k, 4);
    const __m256 lg = _mm256_i32gather_ps(lut.g.data(), k, 4);
    const __m256 lb = _mm256_i32gather_ps(lut.b.data(), k, 4);
    const __m256 la = _mm256_i32gather_ps(lut.a.data(), k, 4);

    acc_r = _mm256_blendv_ps(acc_r, _mm256_add_ps(acc_r, _mm256_mul_ps(w, lr)), active);
    acc_g = _mm256_blendv_ps(acc_g, _mm256_add_ps(acc_g, _mm256_mul_ps(w, lg)), active);
    acc_b = _mm256_blendv_ps(acc_b, _mm256_add_ps(acc_b, _mm256_mul_ps(w, lb)), active);
    acc_a = _mm256_blendv_ps(acc_a, _mm256_add_ps(acc_a, _mm256_mul_ps(w, la)), active);
  }

  alignas(32) float r[kLanes], g[kLanes], b[kLanes], a[kLanes];
  _mm256_store_ps(r, acc_r);
  _mm256_store_ps(g, acc_g);
  _mm256_store_ps(b, acc_b);
  _mm256_store_ps(a, acc_a);
  for (int l = 0; l < kLanes; ++l) out[l] = {r[l], g[l], b[l], a[l]};
}

}  // namespace

void march_avx2(const VolumeView& volume, const MarchLut& lut, float termination_alpha,
                std::span<const RaySetup> rays, std::span<RayAccum> out) {
  const __m256 termination = _mm256_set1_ps(termination_alpha);
  std::size_t r = 0;
  for (; r + kLanes <= rays.size(); r += kLanes) {
    march_packet(volume, lut, termination, load_packet(rays.subspan(r, kLanes)), out.data() + r);
  }
  if (r < rays.size()) march_scalar(volume, lut, termination_alpha, rays.subspan(r), out.subspan(r));
}

}  // namespace peakray::kernels
