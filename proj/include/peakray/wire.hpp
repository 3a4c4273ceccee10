#pragma once

// 48-byte little-endian controller datagram:
//
//   off  size  field
//     0     4  magic "MVW1"
//     4     1  version (1)
//     5     1  device (0 MainController, 1 NavPad)
//     6     2  seq, wrapping
//     8     8  timestamp_us
//    16    12  position x,y,z  (f32, meters)
//    28    16  orientation w,x,y,z (f32)
//    44     2  buttons bitmask
//    46     1  trigger, 0..255 -> [0,1]
//    47     1  reserved (0)

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "peakray/interaction.hpp"

namespace peakray::wire {

inline constexpr std::size_t kPacketSize = 48;
inline constexpr std::array<std::uint8_t, 4> kMagic{'M', 'V', 'W', '1'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7741;

using Packet = std::array<std::uint8_t, kPacketSize>;

enum class DecodeError {
  None,
  BadLength,
  BadMagic,
  BadVersion,
  UnknownDevice,
  NonFiniteFloat,
  DegenerateOrientation,
};

std::string_view describe(DecodeError e);

struct Decoded {
  ControllerSample sample;
  std::uint16_t seq = 0;
};

struct DecodeResult {
  std::optional<Decoded> value;
  DecodeError error = DecodeError::None;
  explicit operator bool() const { return value.has_value(); }
};

/// Trigger byte for a trigger value in [0,1] (round to nearest).
std::uint8_t quantize_trigger(double trigger);

Packet encode(const ControllerSample& sample, std::uint16_t seq);

/// Accepts arbitrary bytes; never reads past `bytes`. The orientation is
/// re-normalized.
DecodeResult decode(std::span<const std::uint8_t> bytes);

}  // namespace peakray::wire
