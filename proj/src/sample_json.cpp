#include "peakray/sample_json.hpp"

#include <stdexcept>
#include <string>

namespace peakray {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw std::invalid_argument(field + ": " + what);
}

std::vector<double> numbers(const nlohmann::json& j, const char* field, std::size_t n) {
  if (!j.is_array() || j.size() != n) bad(field, "expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) bad(field, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

nlohmann::json sample_to_json(const ControllerSample& s) {
  return {{"device", device_name(s.device)},
          {"timestamp_us", s.timestamp_us},
          {"pos", {s.position.x, s.position.y, s.position.z}},
          {"quat", {s.orientation.w, s.orientation.x, s.orientation.y, s.orientation.z}},
          {"buttons", button::names(s.buttons)},
          {"trigger", s.trigger}};
}

ControllerSample sample_from_json(const nlohmann::json& j) {
  if (!j.is_object()) bad("sample", "expected an object");
  ControllerSample s;
  if (!j.contains("device") || !j["device"].is_string()) bad("device", "expected \"MainController\" or \"NavPad\"");
  const auto dev = device_from_name(j["device"].get<std::string>());
  if (!dev) bad("device", "unknown device '" + j["device"].get<std::string>() + "'");
  s.device = *dev;
  if (j.contains("timestamp_us")) {
    if (!j["timestamp_us"].is_number_unsigned()) bad("timestamp_us", "expected a non-negative integer");
    s.timestamp_us = j["timestamp_us"].get<std::uint64_t>();
  }
  if (j.contains("pos")) {
    const auto p = numbers(j["pos"], "pos", 3);
    s.position = {p[0], p[1], p[2]};
  }
  if (j.contains("quat")) {
    const auto q = numbers(j["quat"], "quat", 4);
    s.orientation = {q[0], q[1], q[2], q[3]};
  }
  if (j.contains("buttons")) {
    if (!j["buttons"].is_array()) bad("buttons", "expected an array of button names");
    for (const auto& b : j["buttons"]) {
      if (!b.is_string()) bad("buttons", "expected button names");
      const auto mask = button::from_name(b.get<std::string>());
      if (!mask) bad("buttons", "unknown button '" + b.get<std::string>() + "'");
      s.buttons |= *mask;
    }
  }
  if (j.contains("trigger")) {
    if (!j["trigger"].is_number()) bad("trigger", "expected a number");
    s.trigger = j["trigger"].get<double>();
  }
  try {
    validate(s);
  } catch (const InteractionError& e) {
    bad("sample", e.what());
  }
  return s;
}

}  // namespace peakray
