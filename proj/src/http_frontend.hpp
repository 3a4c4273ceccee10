#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace peakray {

class Service;

/// HTTP endpoints plus the `/stream` WebSocket, served from one I/O thread.
class HttpFrontend {
 public:
  /// Binds immediately; throws std::runtime_error on failure.
  HttpFrontend(Service& service, const std::string& address, std::uint16_t port,
               std::optional<std::filesystem::path> static_dir);
  ~HttpFrontend();

  std::uint16_t port() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace peakray
