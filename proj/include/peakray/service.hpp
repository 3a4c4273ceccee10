#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peakray/interaction.hpp"
#include "peakray/raycaster.hpp"
#include "peakray/receiver.hpp"
#include "peakray/transfer_function.hpp"
#include "peakray/volume.hpp"

namespace peakray {

struct ServiceConfig {
  std::filesystem::path volume_path;
  std::optional<std::filesystem::path> tf_path;
  std::string bind_address = "127.0.0.1";
  /// 0 picks an ephemeral port.
  std::uint16_t udp_port = 7741;
  std::uint16_t http_port = 8080;
  int frame_width = 256;
  int frame_height = 256;
  /// Unset fields fall back to RenderSettings::defaults_for(volume).
  std::optional<double> step_size;
  std::optional<double> early_termination_alpha;
  int render_threads = 0;
  kernels::KernelKind kernel = kernels::KernelKind::Auto;
  Gains gains;
  double frame_cap_hz = 30.0;
  std::size_t queue_capacity = 4096;
  /// Optional directory served at `/` (the browser UI build).
  std::optional<std::filesystem::path> static_dir;
};

/// Throws std::invalid_argument: ports must differ (unless ephemeral) and the
/// frame cap must be in [1, 120].
void validate(const ServiceConfig& config);

/// Read-only copy of the session published after every processed command.
struct SessionSnapshot {
  SessionState state;
  /// Bumped on every observable state change.
  std::uint64_t version = 0;
  /// Bumped only when the image would change (tf, transform, clip plane).
  std::uint64_t render_version = 0;
};

struct PublishedFrame {
  std::uint64_t render_version = 0;
  std::uint64_t sequence = 0;
  FrameBuffer frame;
  std::vector<std::uint8_t> png;
};

struct ServiceStats {
  std::uint64_t frames_published = 0;
  std::uint64_t commands_processed = 0;
  std::uint64_t samples_applied = 0;
  std::uint64_t samples_rejected = 0;
  std::uint64_t queue_overflow = 0;
  std::uint64_t state_version = 0;
  std::uint64_t render_version = 0;
  std::uint64_t frame_render_version = 0;
  ReceiverStats udp;
};

/// Message on the live stream: JSON text or a binary PNG frame.
struct StreamMessage {
  bool binary = false;
  std::string payload;
};

struct SetTfResult {
  bool ok = false;
  std::string error_kind;
  std::string message;
};

/// Long-running session: UDP controller intake, single-writer interaction
/// context, change-driven render worker, HTTP + WebSocket front end.
class Service {
 public:
  /// Loads the volume (and TF when configured). Throws on invalid config or
  /// unreadable files.
  explicit Service(ServiceConfig config);
  Service(ServiceConfig config, Volume volume, TransferFunction tf = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds sockets and starts all contexts; renders the initial frame.
  void start();
  void stop();

  std::uint16_t udp_port() const;
  std::uint16_t http_port() const;

  std::shared_ptr<const SessionSnapshot> snapshot() const;
  std::string tf_json() const;
  const Histogram& histogram() const { return histogram_; }
  ClipPlane clip_plane() const { return snapshot()->state.plane; }

  /// Validates before applying; state is untouched on failure.
  SetTfResult set_tf(std::string_view json_text);
  /// Enqueues behind pending UDP samples and waits until processed.
  EventLog inject(const ControllerSample& sample);
  /// Forces publication of a frame for the current state.
  void request_frame();

  std::shared_ptr<const PublishedFrame> latest_frame() const;
  ServiceStats stats() const;

  /// Blocks until the command queue is drained and the latest frame matches
  /// the current render version. False on timeout.
  bool wait_idle(std::chrono::milliseconds timeout) const;

  using Listener = std::function<void(std::shared_ptr<const StreamMessage>)>;
  /// Returns an id for unsubscribe(). Listeners run on service threads and
  /// must not block.
  std::uint64_t subscribe(Listener listener);
  void unsubscribe(std::uint64_t id);

  nlohmann::json session_json() const;
  nlohmann::json stats_json() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Histogram histogram_;
};

}  // namespace peakray
