#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "peakray/interaction.hpp"
#include "peakray/transfer_function.hpp"

namespace peakray::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("peakray-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ControllerSample main_sample(Vec3 pos, ButtonMask buttons = 0, double trigger = 0.0, Quat q = {}) {
  ControllerSample s;
  s.device = Device::MainController;
  s.position = pos;
  s.orientation = q;
  s.buttons = buttons;
  s.trigger = trigger;
  return s;
}

inline ControllerSample navpad_sample(ButtonMask buttons, std::uint64_t t_us = 0) {
  ControllerSample s;
  s.device = Device::NavPad;
  s.buttons = buttons;
  s.timestamp_us = t_us;
  return s;
}

inline Peak random_peak(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Peak p;
  p.center = u(rng);
  p.width = std::max(1e-3, 0.5 * u(rng));
  p.height = u(rng);
  p.color = {u(rng), u(rng), u(rng)};
  p.enabled = u(rng) < 0.8;
  return p;
}

inline TransferFunction random_tf(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(0, static_cast<int>(TransferFunction::kMaxPeaks));
  std::vector<Peak> peaks(static_cast<std::size_t>(n(rng)));
  for (auto& p : peaks) p = random_peak(rng);
  std::optional<std::size_t> sel;
  if (!peaks.empty()) sel = std::uniform_int_distribution<std::size_t>(0, peaks.size() - 1)(rng);
  return TransferFunction(std::move(peaks), sel);
}

}  // namespace peakray::test
