#include "peakray/wire.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace peakray::wire {

namespace {

template <typename T>
void put_le(std::uint8_t* p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

void put_f32(std::uint8_t* p, double v) { put_le(p, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

DecodeResult failure(DecodeError e) { return {std::nullopt, e}; }

}  // namespace

std::string_view describe(DecodeError e) {
  switch (e) {
    case DecodeError::None: return "ok";
    case DecodeError::BadLength: return "datagram length is not 48 bytes";
    case DecodeError::BadMagic: return "bad magic (expected MVW1)";
    case DecodeError::BadVersion: return "unsupported protocol version";
    case DecodeError::UnknownDevice: return "unknown device id";
    case DecodeError::NonFiniteFloat: return "non-finite position or orientation";
    case DecodeError::DegenerateOrientation: return "zero-length orientation quaternion";
  }
  return "unknown error";
}

std::uint8_t quantize_trigger(double trigger) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(trigger, 0.0, 1.0) * 255.0));
}

Packet encode(const ControllerSample& s, std::uint16_t seq) {
  Packet p{};
  std::copy(kMagic.begin(), kMagic.end(), p.begin());
  p[4] = kVersion;
  p[5] = static_cast<std::uint8_t>(s.device);
  put_le<std::uint16_t>(&p[6], seq);
  put_le<std::uint64_t>(&p[8], s.timestamp_us);
  put_f32(&p[16], s.position.x);
  put_f32(&p[20], s.position.y);
  put_f32(&p[24], s.position.z);
  put_f32(&p[28], s.orientation.w);
  put_f32(&p[32], s.orientation.x);
  put_f32(&p[36], s.orientation.y);
  put_f32(&p[40], s.orientation.z);
  put_le<std::uint16_t>(&p[44], s.buttons);
  p[46] = quantize_trigger(s.trigger);
  p[47] = 0;
  return p;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kPacketSize) return failure(DecodeError::BadLength);
  const std::uint8_t* p = bytes.data();
  if (!std::equal(kMagic.begin(), kMagic.end(), p)) return failure(DecodeError::BadMagic);
  if (p[4] != kVersion) return failure(DecodeError::BadVersion);
  if (p[5] > static_cast<std::uint8_t>(Device::NavPad)) return failure(DecodeError::UnknownDevice);

  float f[7];
  for (int i = 0; i < 7; ++i) {
    f[i] = get_f32(p + 16 + 4 * i);
    if (!std::isfinite(f[i])) return failure(DecodeError::NonFiniteFloat);
  }
  Quat q{f[3], f[4], f[5], f[6]};
  const double n = q.norm();
  if (!(n > 1e-6) || !std::isfinite(n)) return failure(DecodeError::DegenerateOrientation);

  Decoded d;
  d.seq = get_le<std::uint16_t>(p + 6);
  d.sample.device = static_cast<Device>(p[5]);
  d.sample.timestamp_us = get_le<std::uint64_t>(p + 8);
  d.sample.position = {f[0], f[1], f[2]};
  d.sample.orientation = q.normalized();
  d.sample.buttons = get_le<std::uint16_t>(p + 44);
  d.sample.trigger = p[46] / 255.0;
  return {d, DecodeError::None};
}

}  // namespace peakray::wire
