#include <gtest/gtest.h>

#include <cstring>

#include "peakray/kernels.hpp"
#include "peakray/raycaster.hpp"
#include "support.hpp"

using namespace peakray;
using namespace peakray::kernels;

namespace {

struct Scene {
  std::vector<float> data;
  VolumeView view;
  MarchLut lut;
};

Scene random_scene(std::mt19937_64& rng, std::array<int, 3> dims) {
  Scene s;
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  s.data.resize(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  for (auto& v : s.data) v = u(rng);
  s.view.data = s.data.data();
  s.view.dims = dims;
  s.view.stride_y = dims[0];
  s.view.stride_z = dims[0] * dims[1];
  const int strides[3] = {1, s.view.stride_y, s.view.stride_z};
  for (int a = 0; a < 3; ++a) {
    s.view.upper[a] = static_cast<float>(dims[a] - 1);
    s.view.max_cell[a] = std::max(dims[a] - 2, 0);
    s.view.neighbor[a] = dims[a] > 1 ? strides[a] : 0;
  }
  for (int k = 0; k < MarchLut::kSize; ++k) {
    const float a = 0.2f * u(rng);
    s.lut.a[k] = a;
    s.lut.r[k] = a * u(rng);
    s.lut.g[k] = a * u(rng);
    s.lut.b[k] = a * u(rng);
  }
  return s;
}

std::vector<RaySetup> random_rays(std::mt19937_64& rng, const VolumeView& v, int n) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<RaySetup> rays(static_cast<std::size_t>(n));
  for (auto& r : rays) {
    for (int a = 0; a < 3; ++a) {
      // Entries slightly outside the grid exercise the clamps.
      r.entry[a] = -0.7f + (v.upper[a] + 1.4f) * u(rng);
      r.direction[a] = 2.0f * u(rng) - 1.0f;
    }
    r.step = 0.1f + 0.9f * u(rng);
    r.steps = static_cast<int>(rng() % 120);
  }
  if (n > 3) {
    rays[1].steps = 0;
    rays[2].direction = {0, 0, 0};
  }
  return rays;
}

bool bit_equal(const RayAccum& a, const RayAccum& b) { return std::memcmp(&a, &b, sizeof(RayAccum)) == 0; }

}  // namespace

TEST(Kernels, ResolveAndNames) {
  EXPECT_EQ(resolve(KernelKind::Scalar), KernelKind::Scalar);
  EXPECT_EQ(name(KernelKind::Scalar), "scalar");
  const KernelKind best = resolve(KernelKind::Auto);
  EXPECT_NE(best, KernelKind::Auto);
  if (avx2_available()) {
    EXPECT_EQ(best, KernelKind::Avx2);
  } else {
    EXPECT_THROW(resolve(KernelKind::Avx2), std::invalid_argument);
  }
}

TEST(Kernels, ScalarStopsAtTermination) {
  std::mt19937_64 rng(1);
  Scene s = random_scene(rng, {8, 8, 8});
  for (int k = 0; k < MarchLut::kSize; ++k) s.lut.a[k] = 0.5f;
  RaySetup r;
  r.entry = {0, 0, 0};
  r.direction = {1, 0, 0};
  r.step = 0.1f;
  r.steps = 50;
  RayAccum acc;
  march_scalar(s.view, s.lut, 0.9f, std::span(&r, 1), std::span(&acc, 1));
  EXPECT_FLOAT_EQ(acc.a, 0.9375f);  // four halvings of transmittance
}

#if defined(PEAKRAY_HAVE_AVX2)
TEST(Kernels, Avx2MatchesScalarBitForBit) {
  if (!avx2_available()) GTEST_SKIP() << "CPU lacks AVX2";
  std::mt19937_64 rng(42);
  const std::array<int, 3> shapes[] = {{17, 9, 13}, {1, 5, 7}, {2, 2, 2}, {33, 1, 1}};
  for (const auto& dims : shapes) {
    Scene s = random_scene(rng, dims);
    for (int n : {1, 7, 8, 9, 64, 203}) {
      const auto rays = random_rays(rng, s.view, n);
      for (float term : {0.5f, 0.99f, 1.0f}) {
        std::vector<RayAccum> a(rays.size()), b(rays.size());
        march_scalar(s.view, s.lut, term, rays, a);
        march_avx2(s.view, s.lut, term, rays, b);
        for (std::size_t i = 0; i < rays.size(); ++i)
          ASSERT_TRUE(bit_equal(a[i], b[i])) << "dims " << dims[0] << "x" << dims[1] << "x" << dims[2] << " ray " << i
                                             << " scalar a=" << a[i].a << " avx2 a=" << b[i].a;
      }
    }
  }
}

TEST(Kernels, FramesIdenticalAcrossKernels) {
  if (!avx2_available()) GTEST_SKIP() << "CPU lacks AVX2";
  const Volume v = generate_phantom({24, 32, 20});
  const TransferFunction tf({{0.25, 0.1, 0.4, palette::kBlue, true},
                             {0.55, 0.1, 0.5, palette::kGreen, true},
                             {0.85, 0.1, 0.9, palette::kRed, true}},
                            0);
  Camera cam = default_camera(v.meta().extent(), 70, 53);
  cam.eye = {30, 20, 40};
  RenderSettings s = RenderSettings::defaults_for(v.meta());
  VolumeTransform t;
  t.rotation = axis_angle(normalize(Vec3{1, 2, 3}), 0.7);
  const ClipPlane plane{normalize(Vec3{1, -1, 0.5}), 2.0, true};
  s.kernel = KernelKind::Scalar;
  const FrameBuffer a = render_frame(v, tf, cam, t, plane, s);
  s.kernel = KernelKind::Avx2;
  const FrameBuffer b = render_frame(v, tf, cam, t, plane, s);
  EXPECT_EQ(a, b);
}
#endif
