#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peakray {

struct ColorRGB {
  double r = 0.0, g = 0.0, b = 0.0;
  friend bool operator==(const ColorRGB&, const ColorRGB&) = default;
};

/// Straight (non-premultiplied) alpha.
struct Rgba {
  double r = 0.0, g = 0.0, b = 0.0, a = 0.0;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

namespace palette {
inline constexpr ColorRGB kGreen{0, 1, 0};
inline constexpr ColorRGB kRed{1, 0, 0};
inline constexpr ColorRGB kBlue{0, 0, 1};
inline constexpr ColorRGB kYellow{1, 1, 0};
inline constexpr ColorRGB kCyan{0, 1, 1};
inline constexpr ColorRGB kMagenta{1, 0, 1};
inline constexpr ColorRGB kWhite{1, 1, 1};
inline constexpr ColorRGB kOrange{1, 0.5, 0};

/// Fixed cycle order used by peak creation and color cycling.
inline constexpr std::array<ColorRGB, 8> kColors{kGreen, kRed, kBlue, kYellow, kCyan, kMagenta, kWhite, kOrange};

/// Index of `c` in the palette, if it is a palette color.
std::optional<std::size_t> index_of(const ColorRGB& c);
}  // namespace palette

/// A sine window over [center - width, center + width] scaled by height.
struct Peak {
  static constexpr double kMaxWidth = 0.5;
  /// Lower clamp applied by interactive editing (width must stay positive).
  static constexpr double kMinEditWidth = 1.0 / 1024.0;

  double center = 0.5;
  double width = 0.1;
  double height = 0.8;
  ColorRGB color = palette::kGreen;
  bool enabled = true;

  friend bool operator==(const Peak&, const Peak&) = default;
};

class TfError : public std::runtime_error {
 public:
  enum class Kind { Capacity, NoSelection, Invariant, Parse };
  TfError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Throws TfError(Invariant) naming the offending field.
void validate(const Peak& peak);

/// Window value at x; ignores `enabled`.
double peak_value(const Peak& peak, double x);

/// Largest |d/dx peak_value|, h * pi / (2w).
double peak_max_slope(const Peak& peak);

/// Ordered peak list with an optional selection. Every mutator keeps the
/// invariants (at most kMaxPeaks peaks, valid selection, valid peaks).
class TransferFunction {
 public:
  static constexpr std::size_t kMaxPeaks = 8;

  TransferFunction() = default;
  /// Validating constructor; throws TfError.
  TransferFunction(std::vector<Peak> peaks, std::optional<std::size_t> selected);

  const std::vector<Peak>& peaks() const { return peaks_; }
  std::optional<std::size_t> selected() const { return selected_; }
  std::size_t size() const { return peaks_.size(); }
  bool empty() const { return peaks_.empty(); }
  const Peak* selected_peak() const { return selected_ ? &peaks_[*selected_] : nullptr; }

  /// Appends a default peak in `color` and selects it.
  void add_peak(const ColorRGB& color);
  /// Removes the selected peak; the previous index becomes selected.
  void delete_selected();
  void toggle_selected_enabled();
  /// Cyclic; selects index 0 when nothing was selected.
  void select_next();
  /// Advances the selected peak's color through the palette.
  void cycle_selected_color();

  /// Replaces the selected peak after clamping it into the valid range.
  void set_selected_clamped(Peak p);

  friend bool operator==(const TransferFunction&, const TransferFunction&) = default;

 private:
  std::size_t require_selection(const char* op) const;

  std::vector<Peak> peaks_;
  std::optional<std::size_t> selected_;
};

/// Clamps center/height to [0,1] and width to [kMinEditWidth, kMaxWidth].
Peak clamp_peak(Peak p);

/// Over-composites enabled peaks in list order (later over earlier).
Rgba tf_evaluate(const TransferFunction& tf, double x);

struct LookupTable {
  static constexpr int kSize = 256;
  std::array<Rgba, kSize> entries{};

  static constexpr double bin_center(int k) { return (k + 0.5) / kSize; }
  /// Nearest-bin index for x in [0,1].
  static int bin_of(double x) {
    const int k = static_cast<int>(x * kSize);
    return k < 0 ? 0 : (k >= kSize ? kSize - 1 : k);
  }
  const Rgba& lookup(double x) const { return entries[bin_of(x)]; }
};

LookupTable build_lut(const TransferFunction& tf);

/// JSON text: {"peaks":[{center,width,height,color:[r,g,b],enabled}],"selected":int|null}.
std::string serialize_tf(const TransferFunction& tf);
/// Throws TfError(Parse) with a field path, or TfError(Invariant/Capacity).
TransferFunction deserialize_tf(std::string_view text);

}  // namespace peakray
