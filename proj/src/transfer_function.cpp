#include "peakray/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

namespace peakray {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

[[noreturn]] void invariant(const std::string& msg) { throw TfError(TfError::Kind::Invariant, msg); }

}  // namespace

std::optional<std::size_t> palette::index_of(const ColorRGB& c) {
  for (std::size_t i = 0; i < kColors.size(); ++i) {
    if (kColors[i] == c) return i;
  }
  return std::nullopt;
}

void validate(const Peak& p) {
  if (!in_unit(p.center)) invariant("peak center must be in [0,1]");
  if (!(p.width > 0.0 && p.width <= Peak::kMaxWidth)) invariant("peak width must be in (0, 0.5]");
  if (!in_unit(p.height)) invariant("peak height must be in [0,1]");
  if (!in_unit(p.color.r) || !in_unit(p.color.g) || !in_unit(p.color.b))
    invariant("peak color channels must be in [0,1]");
}

double peak_value(const Peak& p, double x) {
  if (x < p.center - p.width || x > p.center + p.width) return 0.0;
  return p.height * std::sin(std::numbers::pi / (2.0 * p.width) * (x - p.center + p.width));
}

double peak_max_slope(const Peak& p) { return p.height * std::numbers::pi / (2.0 * p.width); }

Peak clamp_peak(Peak p) {
  p.center = std::clamp(p.center, 0.0, 1.0);
  p.height = std::clamp(p.height, 0.0, 1.0);
  p.width = std::clamp(p.width, Peak::kMinEditWidth, Peak::kMaxWidth);
  return p;
}

TransferFunction::TransferFunction(std::vector<Peak> peaks, std::optional<std::size_t> selected)
    : peaks_(std::move(peaks)), selected_(selected) {
  if (peaks_.size() > kMaxPeaks)
    throw TfError(TfError::Kind::Capacity, "at most " + std::to_string(kMaxPeaks) + " peaks allowed, got " +
                                               std::to_string(peaks_.size()));
  for (std::size_t i = 0; i < peaks_.size(); ++i) {
    try {
      validate(peaks_[i]);
    } catch (const TfError& e) {
      invariant("peaks[" + std::to_string(i) + "]: " + e.what());
    }
  }
  if (selected_ && *selected_ >= peaks_.size()) invariant("selected index out of range");
}

std::size_t TransferFunction::require_selection(const char* op) const {
  if (!selected_) throw TfError(TfError::Kind::NoSelection, std::string(op) + ": no peak selected");
  return *selected_;
}

void TransferFunction::add_peak(const ColorRGB& color) {
  if (peaks_.size() >= kMaxPeaks)
    throw TfError(TfError::Kind::Capacity, "transfer function already has " + std::to_string(kMaxPeaks) + " peaks");
  Peak p;
  p.color = color;
  validate(p);
  peaks_.push_back(p);
  selected_ = peaks_.size() - 1;
}

void TransferFunction::delete_selected() {
  const std::size_t i = require_selection("delete");
  peaks_.erase(peaks_.begin() + static_cast<std::ptrdiff_t>(i));
  if (peaks_.empty()) {
    selected_.reset();
  } else {
    selected_ = i == 0 ? 0 : i - 1;
  }
}

void TransferFunction::toggle_selected_enabled() {
  const std::size_t i = require_selection("toggle");
  peaks_[i].enabled = !peaks_[i].enabled;
}

void TransferFunction::select_next() {
  if (peaks_.empty()) throw TfError(TfError::Kind::NoSelection, "select_next: no peaks");
  selected_ = selected_ ? (*selected_ + 1) % peaks_.size() : 0;
}

void TransferFunction::cycle_selected_color() {
  const std::size_t i = require_selection("cycle color");
  const auto at = palette::index_of(peaks_[i].color);
  peaks_[i].color = palette::kColors[at ? (*at + 1) % palette::kColors.size() : 0];
}

void TransferFunction::set_selected_clamped(Peak p) {
  const std::size_t i = require_selection("edit");
  peaks_[i] = clamp_peak(p);
}

Rgba tf_evaluate(const TransferFunction& tf, double x) {
  double r = 0, g = 0, b = 0, a = 0;
  for (const Peak& p : tf.peaks()) {
    if (!p.enabled) continue;
    const double alpha = peak_value(p, x);
    if (alpha <= 0.0) continue;
    r = alpha * p.color.r + (1.0 - alpha) * r;
    g = alpha * p.color.g + (1.0 - alpha) * g;
    b = alpha * p.color.b + (1.0 - alpha) * b;
    a = alpha + a * (1.0 - alpha);
  }
  if (a <= 0.0) return {};
  return {std::min(r / a, 1.0), std::min(g / a, 1.0), std::min(b / a, 1.0), std::min(a, 1.0)};
}

LookupTable build_lut(const TransferFunction& tf) {
  LookupTable lut;
  for (int k = 0; k < LookupTable::kSize; ++k) lut.entries[k] = tf_evaluate(tf, LookupTable::bin_center(k));
  return lut;
}

std::string serialize_tf(const TransferFunction& tf) {
  nlohmann::json peaks = nlohmann::json::array();
  for (const Peak& p : tf.peaks()) {
    peaks.push_back({{"center", p.center},
                     {"width", p.width},
                     {"height", p.height},
                     {"color", {p.color.r, p.color.g, p.color.b}},
                     {"enabled", p.enabled}});
  }
  nlohmann::json doc{{"peaks", std::move(peaks)}};
  doc["selected"] = tf.selected() ? nlohmann::json(*tf.selected()) : nlohmann::json(nullptr);
  return doc.dump(2) + "\n";
}

namespace {

[[noreturn]] void parse_error(const std::string& where, const std::string& what) {
  throw TfError(TfError::Kind::Parse, where + ": " + what);
}

double number_field(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) parse_error(where, "missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) parse_error(where + "." + key, "expected a number");
  return v.get<double>();
}

}  // namespace

TransferFunction deserialize_tf(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw TfError(TfError::Kind::Parse, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) parse_error("$", "expected an object");
  if (!doc.contains("peaks") || !doc["peaks"].is_array()) parse_error("$.peaks", "expected an array");

  std::vector<Peak> peaks;
  const auto& arr = doc["peaks"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "$.peaks[" + std::to_string(i) + "]";
    const auto& o = arr[i];
    if (!o.is_object()) parse_error(where, "expected an object");
    Peak p;
    p.center = number_field(o, "center", where);
    p.width = number_field(o, "width", where);
    p.height = number_field(o, "height", where);
    if (!o.contains("color") || !o["color"].is_array() || o["color"].size() != 3)
      parse_error(where + ".color", "expected [r, g, b]");
    for (int c = 0; c < 3; ++c) {
      if (!o["color"][c].is_number()) parse_error(where + ".color[" + std::to_string(c) + "]", "expected a number");
    }
    p.color = {o["color"][0].get<double>(), o["color"][1].get<double>(), o["color"][2].get<double>()};
    if (!o.contains("enabled") || !o["enabled"].is_boolean()) parse_error(where + ".enabled", "expected a boolean");
    p.enabled = o["enabled"].get<bool>();
    peaks.push_back(p);
  }

  std::optional<std::size_t> selected;
  if (!doc.contains("selected")) parse_error("$", "missing field 'selected'");
  const auto& sel = doc["selected"];
  if (sel.is_number_unsigned()) {
    selected = sel.get<std::size_t>();
  } else if (!sel.is_null()) {
    parse_error("$.selected", "expected a non-negative integer or null");
  }
  return TransferFunction(std::move(peaks), selected);
}

}  // namespace peakray
