#include "peakray/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/asio/ip/udp.hpp>
#include <boost/asio/io_context.hpp>

#include "peakray/sample_json.hpp"

namespace peakray {

ScriptedTrajectory::ScriptedTrajectory(std::vector<Keyframe> keys) : keys_(std::move(keys)) {
  if (keys_.empty()) throw std::invalid_argument("trajectory needs at least one keyframe");
  for (std::size_t i = 1; i < keys_.size(); ++i) {
    if (!(keys_[i].t > keys_[i - 1].t))
      throw std::invalid_argument("keyframe " + std::to_string(i) + ": time offsets must strictly increase");
    if (keys_[i].sample.device != keys_[0].sample.device)
      throw std::invalid_argument("keyframe " + std::to_string(i) + ": trajectory mixes devices");
  }
}

ControllerSample ScriptedTrajectory::sample_at(double t) const {
  if (t <= keys_.front().t) return keys_.front().sample;
  if (t >= keys_.back().t) return keys_.back().sample;
  const auto hi = std::upper_bound(keys_.begin(), keys_.end(), t, [](double v, const Keyframe& k) { return v < k.t; });
  const Keyframe& b = *hi;
  const Keyframe& a = *(hi - 1);
  const double u = (t - a.t) / (b.t - a.t);
  ControllerSample s = a.sample;
  s.position = a.sample.position + (b.sample.position - a.sample.position) * u;
  s.orientation = slerp(a.sample.orientation, b.sample.orientation, u);
  s.trigger = a.sample.trigger + (b.sample.trigger - a.sample.trigger) * u;
  s.buttons = a.sample.buttons;
  s.timestamp_us = 0;
  return s;
}

double ControllerScript::start() const {
  double t = tracks.front().start();
  for (const auto& tr : tracks) t = std::min(t, tr.start());
  return t;
}

double ControllerScript::end() const {
  double t = tracks.front().end();
  for (const auto& tr : tracks) t = std::max(t, tr.end());
  return t;
}

ControllerScript parse_script(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("script: malformed JSON: ") + e.what());
  }
  if (!doc.is_array() || doc.empty()) throw std::invalid_argument("script: expected a non-empty array of keyframes");

  std::map<Device, std::vector<Keyframe>> by_device;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& k = doc[i];
    try {
      if (!k.is_object() || !k.contains("t") || !k["t"].is_number()) throw std::invalid_argument("t: expected seconds");
      Keyframe kf;
      kf.t = k["t"].get<double>();
      if (!std::isfinite(kf.t) || kf.t < 0.0) throw std::invalid_argument("t: must be finite and >= 0");
      kf.sample = sample_from_json(k);
      by_device[kf.sample.device].push_back(kf);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("script keyframe " + std::to_string(i) + ": " + e.what());
    }
  }
  ControllerScript script;
  for (auto& [device, keys] : by_device) script.tracks.emplace_back(std::move(keys));
  return script;
}

ControllerScript load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

namespace {

void check_rate(double rate) {
  if (!(rate >= 1.0 && rate <= 1000.0)) throw std::invalid_argument("simulation rate must be in [1, 1000] Hz");
}

std::size_t tick_count(const ControllerScript& script, double rate) {
  const double span = script.end() - script.start();
  if (span <= 0.0) return 1;
  // Ticks at start + k / rate strictly before the end.
  std::size_t n = static_cast<std::size_t>(std::ceil(span * rate));
  while (n > 1 && static_cast<double>(n - 1) / rate >= span) --n;
  while (static_cast<double>(n) / rate < span) ++n;
  return n;
}

template <typename Emit>
void for_each_packet(const ControllerScript& script, const SimulationOptions& o, Emit&& emit) {
  check_rate(o.rate_hz);
  if (script.tracks.empty()) return;
  const std::size_t ticks = tick_count(script, o.rate_hz);
  std::uint16_t seq = o.start_seq;
  for (std::size_t k = 0; k < ticks; ++k) {
    const double offset = static_cast<double>(k) / o.rate_hz;
    const double t = script.start() + offset;
    for (const auto& track : script.tracks) {
      ControllerSample s = track.sample_at(t);
      s.timestamp_us = o.start_timestamp_us + static_cast<std::uint64_t>(std::llround(offset * 1e6));
      emit(k, offset, wire::encode(s, seq));
      seq = static_cast<std::uint16_t>(seq + 1);
    }
  }
}

}  // namespace

std::vector<wire::Packet> generate_packets(const ControllerScript& script, const SimulationOptions& options) {
  std::vector<wire::Packet> out;
  for_each_packet(script, options, [&](std::size_t, double, const wire::Packet& p) { out.push_back(p); });
  return out;
}

SimulationReport simulator_run(const ControllerScript& script, const SimulationOptions& options, DatagramSink& sink) {
  SimulationReport report;
  report.next_seq = options.start_seq;
  const auto t0 = std::chrono::steady_clock::now();
  for_each_packet(script, options, [&](std::size_t, double offset, const wire::Packet& p) {
    if (options.realtime) {
      std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                             std::chrono::duration<double>(offset)));
    }
    if (sink.send(p)) {
      ++report.packets_sent;
    } else {
      ++report.send_failures;
    }
    report.next_seq = static_cast<std::uint16_t>(report.next_seq + 1);
  });
  return report;
}

struct UdpSink::Impl {
  boost::asio::io_context io;
  boost::asio::ip::udp::socket socket{io};
};

UdpSink::UdpSink(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  boost::asio::ip::udp::resolver resolver(impl_->io);
  const auto endpoints = resolver.resolve(boost::asio::ip::udp::v4(), host, std::to_string(port));
  impl_->socket.open(boost::asio::ip::udp::v4());
  impl_->socket.connect(*endpoints.begin());
}

UdpSink::~UdpSink() = default;

bool UdpSink::send(std::span<const std::uint8_t> datagram) {
  boost::system::error_code ec;
  impl_->socket.send(boost::asio::buffer(datagram.data(), datagram.size()), 0, ec);
  return !ec;
}

}  // namespace peakray
