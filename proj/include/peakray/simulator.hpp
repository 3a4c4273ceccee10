#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peakray/interaction.hpp"
#include "peakray/wire.hpp"

namespace peakray {

struct Keyframe {
  double t = 0.0;  // seconds from script start
  ControllerSample sample;
};

/// Keyframes of one device. Position and trigger interpolate linearly,
/// orientation spherically, buttons hold the latest keyframe at or before t.
class ScriptedTrajectory {
 public:
  /// Throws std::invalid_argument unless offsets strictly increase and all
  /// keyframes belong to one device.
  explicit ScriptedTrajectory(std::vector<Keyframe> keys);

  Device device() const { return keys_.front().sample.device; }
  double start() const { return keys_.front().t; }
  double end() const { return keys_.back().t; }
  const std::vector<Keyframe>& keys() const { return keys_; }

  /// Interpolated sample at t (clamped to the key range); timestamp left 0.
  ControllerSample sample_at(double t) const;

 private:
  std::vector<Keyframe> keys_;
};

/// One track per device that appears in the script.
struct ControllerScript {
  std::vector<ScriptedTrajectory> tracks;
  double start() const;
  double end() const;
};

/// JSON array of `{t, device, pos:[x,y,z], quat:[w,x,y,z], buttons:[names], trigger}`.
/// Throws std::invalid_argument with the offending keyframe index.
ControllerScript parse_script(std::string_view json_text);
ControllerScript load_script(const std::string& path);

struct SimulationOptions {
  double rate_hz = 60.0;
  std::uint16_t start_seq = 0;
  std::uint64_t start_timestamp_us = 0;
  /// Sleep between ticks to follow wall-clock time.
  bool realtime = false;
};

/// Deterministic packet sequence: ticks at start + k/rate while before the
/// script end (one tick for a zero-length script), one packet per track per
/// tick, tracks in device order.
std::vector<wire::Packet> generate_packets(const ControllerScript& script, const SimulationOptions& options);

class DatagramSink {
 public:
  virtual ~DatagramSink() = default;
  /// False on a failed send.
  virtual bool send(std::span<const std::uint8_t> datagram) = 0;
};

/// Collects datagrams in memory.
class MemorySink : public DatagramSink {
 public:
  bool send(std::span<const std::uint8_t> datagram) override {
    datagrams.emplace_back(datagram.begin(), datagram.end());
    return true;
  }
  std::vector<std::vector<std::uint8_t>> datagrams;
};

/// UDP datagrams to host:port.
class UdpSink : public DatagramSink {
 public:
  UdpSink(const std::string& host, std::uint16_t port);
  ~UdpSink() override;
  bool send(std::span<const std::uint8_t> datagram) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct SimulationReport {
  std::size_t packets_sent = 0;
  std::size_t send_failures = 0;
  std::uint16_t next_seq = 0;
};

/// Throws std::invalid_argument unless 1 <= rate <= 1000 Hz. Send failures
/// are counted and emission continues.
SimulationReport simulator_run(const ControllerScript& script, const SimulationOptions& options, DatagramSink& sink);

}  // namespace peakray
