#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>

#include "peakray/interaction.hpp"
#include "peakray/wire.hpp"

namespace peakray {

/// Multi-producer FIFO with a fixed capacity; a full queue drops its oldest
/// element and counts the overflow.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      if (items_.size() >= capacity_) {
        items_.pop_front();
        ++overflow_;
      }
      items_.push_back(std::move(value));
    }
    ready_.notify_one();
  }

  /// Waits up to `timeout`; nullopt on timeout or after close().
  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    ready_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::uint64_t overflow() const {
    std::lock_guard lock(mutex_);
    return overflow_;
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
  std::uint64_t overflow_ = 0;
  bool closed_ = false;
};

struct ReceiverStats {
  std::uint64_t datagrams = 0;
  std::uint64_t delivered = 0;
  std::uint64_t malformed = 0;
  std::uint64_t reordered = 0;
};

/// Decodes datagrams and tracks per-device sequence order. A sample whose
/// seq is behind the newest one seen for its device (modulo 2^16) counts as
/// reordered but is still delivered.
class PacketIntake {
 public:
  using Deliver = std::function<void(const ControllerSample&)>;
  explicit PacketIntake(Deliver deliver) : deliver_(std::move(deliver)) {}

  /// Returns the decode status; malformed datagrams are dropped.
  wire::DecodeError handle(std::span<const std::uint8_t> datagram);
  ReceiverStats stats() const;

 private:
  Deliver deliver_;
  std::atomic<std::uint64_t> datagrams_{0}, delivered_{0}, malformed_{0}, reordered_{0};
  std::optional<std::uint16_t> newest_[2];
};

/// UDP listener on its own thread feeding a PacketIntake.
class UdpReceiver {
 public:
  /// Binds immediately (port 0 picks an ephemeral port); throws
  /// std::runtime_error on bind failure.
  UdpReceiver(std::uint16_t port, PacketIntake::Deliver deliver);
  ~UdpReceiver();
  UdpReceiver(const UdpReceiver&) = delete;
  UdpReceiver& operator=(const UdpReceiver&) = delete;

  std::uint16_t port() const;
  ReceiverStats stats() const { return intake_.stats(); }
  void stop();

 private:
  struct Impl;
  PacketIntake intake_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace peakray
