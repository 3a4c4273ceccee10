#include "peakray/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace peakray {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(VolumeError::Kind kind, const std::string& msg) { throw VolumeError(kind, msg); }

template <typename T, std::size_t N>
std::array<T, N> parse_triple(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::array<T, N> out{};
  for (auto& v : out) {
    if (!(in >> v)) fail(VolumeError::Kind::BadMetadata, "metadata: '" + key + "' needs " + std::to_string(N) + " numbers");
  }
  std::string rest;
  if (in >> rest) fail(VolumeError::Kind::BadMetadata, "metadata: trailing data in '" + key + "'");
  return out;
}

// Clamp-to-edge cell lookup along one axis: returns the lower index and the
// fractional offset toward the upper neighbor.
struct AxisCell {
  int lo;
  int hi;
  double frac;
};

AxisCell axis_cell(double u, int n) {
  if (n == 1) return {0, 0, 0.0};
  u = std::clamp(u, 0.0, static_cast<double>(n - 1));
  const int lo = std::min(static_cast<int>(std::floor(u)), n - 2);
  return {lo, lo + 1, u - lo};
}

}  // namespace

double VolumeMeta::min_spacing() const { return std::min({spacing[0], spacing[1], spacing[2]}); }

void validate(const VolumeMeta& meta) {
  for (int a = 0; a < 3; ++a) {
    if (meta.dims[a] < 1) fail(VolumeError::Kind::InvalidArgument, "volume dims must be >= 1");
    if (!(meta.spacing[a] > 0.0) || !std::isfinite(meta.spacing[a]))
      fail(VolumeError::Kind::InvalidArgument, "volume spacing must be positive");
  }
}

Volume::Volume(VolumeMeta meta, std::vector<float> values) : meta_(meta), values_(std::move(values)) {}

Volume Volume::from_raw(VolumeMeta meta, std::span<const std::uint8_t> bytes) {
  validate(meta);
  const std::size_t n = meta.voxel_count();
  if (bytes.size() != n * meta.bytes_per_voxel()) {
    fail(VolumeError::Kind::LengthMismatch, "raw data is " + std::to_string(bytes.size()) + " bytes, expected " +
                                                std::to_string(n * meta.bytes_per_voxel()));
  }
  std::vector<float> values(n);
  if (meta.value_type == ValueType::U8) {
    for (std::size_t i = 0; i < n; ++i) values[i] = static_cast<float>(bytes[i] / 255.0);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bytes[2 * i] | (static_cast<unsigned>(bytes[2 * i + 1]) << 8);
      values[i] = static_cast<float>(v / 65535.0);
    }
  }
  return Volume(meta, std::move(values));
}

Volume Volume::from_normalized(VolumeMeta meta, std::vector<float> values) {
  validate(meta);
  if (values.size() != meta.voxel_count()) {
    fail(VolumeError::Kind::LengthMismatch, "value array has " + std::to_string(values.size()) + " entries, expected " +
                                                std::to_string(meta.voxel_count()));
  }
  for (float& v : values) v = std::clamp(v, 0.0f, 1.0f);
  return Volume(meta, std::move(values));
}

Vec3 Volume::voxel_center(int i, int j, int k) const {
  const Vec3 half = meta_.extent() * 0.5;
  return {(i + 0.5) * meta_.spacing[0] - half.x, (j + 0.5) * meta_.spacing[1] - half.y,
          (k + 0.5) * meta_.spacing[2] - half.z};
}

std::vector<std::uint8_t> Volume::to_raw() const {
  std::vector<std::uint8_t> out;
  out.reserve(values_.size() * meta_.bytes_per_voxel());
  if (meta_.value_type == ValueType::U8) {
    for (float v : values_) out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  } else {
    for (float v : values_) {
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      out.push_back(static_cast<std::uint8_t>(q & 0xff));
      out.push_back(static_cast<std::uint8_t>(q >> 8));
    }
  }
  return out;
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : bins) t += c;
  return t;
}

int Histogram::nonzero_bins() const {
  return static_cast<int>(std::count_if(bins.begin(), bins.end(), [](auto c) { return c != 0; }));
}

Volume load_volume(const std::filesystem::path& meta_path) {
  std::ifstream in(meta_path);
  if (!in) fail(VolumeError::Kind::MissingFile, "cannot open volume metadata " + meta_path.string());

  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(VolumeError::Kind::BadMetadata, meta_path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"dims", "spacing", "type", "data"}) {
    if (!kv.contains(key)) fail(VolumeError::Kind::BadMetadata, meta_path.string() + ": missing key '" + key + "'");
  }

  VolumeMeta meta;
  meta.dims = parse_triple<int, 3>("dims", kv["dims"]);
  meta.spacing = parse_triple<double, 3>("spacing", kv["spacing"]);
  if (kv["type"] == "u8") {
    meta.value_type = ValueType::U8;
  } else if (kv["type"] == "u16le") {
    meta.value_type = ValueType::U16LE;
  } else {
    fail(VolumeError::Kind::UnknownValueType, "unknown value type '" + kv["type"] + "'");
  }
  try {
    validate(meta);
  } catch (const VolumeError& e) {
    fail(VolumeError::Kind::BadMetadata, meta_path.string() + ": " + e.what());
  }

  const auto raw_path = meta_path.parent_path() / kv["data"];
  std::ifstream raw(raw_path, std::ios::binary);
  if (!raw) fail(VolumeError::Kind::MissingFile, "cannot open raw data " + raw_path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());
  return Volume::from_raw(meta, bytes);
}

void save_volume(const Volume& volume, const std::filesystem::path& meta_path) {
  auto raw_path = meta_path;
  raw_path.replace_extension(".raw");
  const auto& m = volume.meta();
  {
    std::ofstream out(meta_path);
    if (!out) fail(VolumeError::Kind::Io, "cannot write " + meta_path.string());
    out << "dims = " << m.dims[0] << ' ' << m.dims[1] << ' ' << m.dims[2] << '\n';
    out.precision(17);
    out << "spacing = " << m.spacing[0] << ' ' << m.spacing[1] << ' ' << m.spacing[2] << '\n';
    out << "type = " << (m.value_type == ValueType::U8 ? "u8" : "u16le") << '\n';
    out << "data = " << raw_path.filename().string() << '\n';
  }
  const auto bytes = volume.to_raw();
  std::ofstream out(raw_path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(VolumeError::Kind::Io, "cannot write " + raw_path.string());
}

float phantom::value_at_radius(double radius) {
  if (radius <= kCoreBound) return kCoreValue;
  if (radius <= kMiddleBound) return kMiddleValue;
  if (radius <= kOuterBound) return kOuterValue;
  return 0.0f;
}

Volume generate_phantom(std::array<int, 3> dims) {
  for (int d : dims) {
    if (d < 16) fail(VolumeError::Kind::InvalidArgument, "phantom dims must be at least 16 per axis");
  }
  VolumeMeta meta{dims, {1.0, 1.0, 1.0}, ValueType::U16LE};
  std::vector<float> values(meta.voxel_count());
  std::size_t idx = 0;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const double rx = std::abs(i + 0.5 - dims[0] / 2.0) / (dims[0] / 2.0);
        const double ry = std::abs(j + 0.5 - dims[1] / 2.0) / (dims[1] / 2.0);
        const double rz = std::abs(k + 0.5 - dims[2] / 2.0) / (dims[2] / 2.0);
        values[idx++] = phantom::value_at_radius(std::max({rx, ry, rz}));
      }
    }
  }
  return Volume::from_normalized(meta, std::move(values));
}

double sample_trilinear(const Volume& volume, Vec3 p) {
  const auto& m = volume.meta();
  const Vec3 half = m.extent() * 0.5;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(p[a]) > half[a]) return 0.0;
  }
  const AxisCell cx = axis_cell((p.x + half.x) / m.spacing[0] - 0.5, m.dims[0]);
  const AxisCell cy = axis_cell((p.y + half.y) / m.spacing[1] - 0.5, m.dims[1]);
  const AxisCell cz = axis_cell((p.z + half.z) / m.spacing[2] - 0.5, m.dims[2]);

  auto v = [&](int i, int j, int k) { return static_cast<double>(volume.at(i, j, k)); };
  const double c00 = v(cx.lo, cy.lo, cz.lo) * (1 - cx.frac) + v(cx.hi, cy.lo, cz.lo) * cx.frac;
  const double c10 = v(cx.lo, cy.hi, cz.lo) * (1 - cx.frac) + v(cx.hi, cy.hi, cz.lo) * cx.frac;
  const double c01 = v(cx.lo, cy.lo, cz.hi) * (1 - cx.frac) + v(cx.hi, cy.lo, cz.hi) * cx.frac;
  const double c11 = v(cx.lo, cy.hi, cz.hi) * (1 - cx.frac) + v(cx.hi, cy.hi, cz.hi) * cx.frac;
  const double c0 = c00 * (1 - cy.frac) + c10 * cy.frac;
  const double c1 = c01 * (1 - cy.frac) + c11 * cy.frac;
  return c0 * (1 - cz.frac) + c1 * cz.frac;
}

Histogram histogram(const Volume& volume) {
  Histogram h;
  for (float v : volume.values()) ++h.bins[histogram_bin(v)];
  return h;
}

}  // namespace peakray
