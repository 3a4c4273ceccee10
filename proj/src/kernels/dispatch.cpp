#include <stdexcept>

#include "peakray/kernels.hpp"

namespace peakray::kernels {

bool avx2_available() {
#if defined(PEAKRAY_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported;
#else
  return false;
#endif
}

KernelKind resolve(KernelKind requested) {
  switch (requested) {
    case KernelKind::Auto:
      return avx2_available() ? KernelKind::Avx2 : KernelKind::Scalar;
    case KernelKind::Avx2:
      if (!avx2_available()) throw std::invalid_argument("AVX2 kernel requested but not available on this CPU/build");
      return KernelKind::Avx2;
    case KernelKind::Scalar:
      break;
  }
  return KernelKind::Scalar;
}

MarchFn select(KernelKind requested) {
#if defined(PEAKRAY_HAVE_AVX2)
  if (resolve(requested) == KernelKind::Avx2) return &march_avx2;
#else
  resolve(requested);
#endif
  return &march_scalar;
}

std::string_view name(KernelKind kind) {
  switch (kind) {
    case KernelKind::Auto:
      return "auto";
    case KernelKind::Scalar:
      return "scalar";
    case KernelKind::Avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace peakray::kernels
