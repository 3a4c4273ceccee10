#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakray/math.hpp"

namespace peakray {

enum class ValueType { U8, U16LE };

struct VolumeMeta {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  ValueType value_type = ValueType::U8;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t bytes_per_voxel() const { return value_type == ValueType::U8 ? 1 : 2; }
  /// World-space size of the volume box, dims * spacing.
  Vec3 extent() const {
    return {dims[0] * spacing[0], dims[1] * spacing[1], dims[2] * spacing[2]};
  }
  double min_spacing() const;
};

class VolumeError : public std::runtime_error {
 public:
  enum class Kind { MissingFile, BadMetadata, LengthMismatch, UnknownValueType, InvalidArgument, Io };
  VolumeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Immutable 3D scalar grid. Values are held normalized to [0,1], x-fastest.
///
/// The world-space box is centered at the origin with size dims * spacing;
/// voxel (i,j,k) sits at the center of its cell.
class Volume {
 public:
  /// Builds a volume from raw integer samples (u8 values or u16 values).
  static Volume from_raw(VolumeMeta meta, std::span<const std::uint8_t> bytes);
  /// Builds a volume from already normalized values; `meta.value_type` only
  /// controls how the volume is later serialized.
  static Volume from_normalized(VolumeMeta meta, std::vector<float> values);

  const VolumeMeta& meta() const { return meta_; }
  std::span<const float> values() const { return values_; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(meta_.dims[0]) * (j + static_cast<std::size_t>(meta_.dims[1]) * k);
  }
  float at(int i, int j, int k) const { return values_[index(i, j, k)]; }

  /// World-space center of voxel (i,j,k).
  Vec3 voxel_center(int i, int j, int k) const;

  /// Quantizes back to the declared value type, little-endian, x-fastest.
  std::vector<std::uint8_t> to_raw() const;

 private:
  Volume(VolumeMeta meta, std::vector<float> values);

  VolumeMeta meta_;
  std::vector<float> values_;
};

struct Histogram {
  static constexpr int kBins = 256;
  std::array<std::uint64_t, kBins> bins{};

  std::uint64_t total() const;
  int nonzero_bins() const;
};

void validate(const VolumeMeta& meta);

/// Parses a `key = value` metadata file and the raw file it references.
Volume load_volume(const std::filesystem::path& meta_path);

/// Writes `<stem>.meta` + `<stem>.raw` next to `meta_path`.
void save_volume(const Volume& volume, const std::filesystem::path& meta_path);

/// Nested axis-aligned material boxes: background 0, outer shell 0.25,
/// middle shell 0.55, inner core 0.85. Boundaries lie at 90%, 70% and 45% of
/// the half-extent (Chebyshev distance from the grid center).
Volume generate_phantom(std::array<int, 3> dims);

namespace phantom {
inline constexpr float kOuterValue = 0.25f;
inline constexpr float kMiddleValue = 0.55f;
inline constexpr float kCoreValue = 0.85f;
inline constexpr double kOuterBound = 0.90;
inline constexpr double kMiddleBound = 0.70;
inline constexpr double kCoreBound = 0.45;
/// Material value at a normalized Chebyshev radius in [0, inf).
float value_at_radius(double radius);
}  // namespace phantom

/// Trilinear interpolation in normalized value space. Clamp-to-edge inside the
/// box (the half-voxel margin), zero outside it.
double sample_trilinear(const Volume& volume, Vec3 world_point);

Histogram histogram(const Volume& volume);

/// Bin of a normalized value; 1.0 lands in the last bin.
inline int histogram_bin(double value) {
  int b = static_cast<int>(value * Histogram::kBins);
  return b < 0 ? 0 : (b >= Histogram::kBins ? Histogram::kBins - 1 : b);
}

}  // namespace peakray
