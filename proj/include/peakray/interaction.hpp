#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "peakray/math.hpp"
#include "peakray/raycaster.hpp"
#include "peakray/transfer_function.hpp"

namespace peakray {

enum class Device : std::uint8_t { MainController = 0, NavPad = 1 };

std::string_view device_name(Device d);
std::optional<Device> device_from_name(std::string_view name);

using ButtonMask = std::uint16_t;

/// Bit positions match the wire format.
namespace button {
inline constexpr ButtonMask kBig = 1u << 0;
inline constexpr ButtonMask kModeCenterHeight = 1u << 1;
inline constexpr ButtonMask kModeWidth = 1u << 2;
inline constexpr ButtonMask kAdd = 1u << 8;
inline constexpr ButtonMask kDelete = 1u << 9;
inline constexpr ButtonMask kToggleEnable = 1u << 10;
inline constexpr ButtonMask kSelectNext = 1u << 11;
inline constexpr ButtonMask kCycleColor = 1u << 12;

inline constexpr ButtonMask kMainMask = kBig | kModeCenterHeight | kModeWidth;
inline constexpr ButtonMask kNavPadMask = kAdd | kDelete | kToggleEnable | kSelectNext | kCycleColor;

/// Wire names: BIG, MODE_CH, MODE_W, ADD, DELETE, TOGGLE_ENABLE, SELECT_NEXT, CYCLE_COLOR.
std::optional<ButtonMask> from_name(std::string_view name);
std::vector<std::string> names(ButtonMask mask);
}  // namespace button

struct ControllerSample {
  Device device = Device::MainController;
  std::uint64_t timestamp_us = 0;
  Vec3 position;  // meters
  Quat orientation;
  ButtonMask buttons = 0;
  double trigger = 0.0;

  bool held(ButtonMask b) const { return (buttons & b) == b; }
  friend bool operator==(const ControllerSample&, const ControllerSample&) = default;
};

class InteractionError : public std::runtime_error {
 public:
  enum class Kind { WrongDevice, NoSelection, InvalidSample };
  InteractionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Throws InteractionError(InvalidSample): quaternion norm off by > 1e-3,
/// trigger outside [0,1], or non-finite values.
void validate(const ControllerSample& s);

enum class EditMode { CenterHeight, Width };
/// Which meaning the main controller's BIG button has.
enum class Context { Navigate, Edit };

std::string_view to_string(EditMode m);
std::string_view to_string(Context c);

/// Interface sensitivity. Units are per meter of controller motion.
struct Gains {
  double translation = 1.0;  // scene units / m
  double rotation = 2.0;     // rad / m
  double center = 1.0;       // / m
  double height = 2.0;       // / m
  double width = 0.5;        // / m
  double dead_zone = 0.001;  // m; smaller accumulated motion is ignored
  double trigger_threshold = 0.5;
  std::uint64_t long_press_us = 1'000'000;  // SELECT_NEXT hold that toggles context
};

struct StatusEvent {
  enum class Kind {
    PeakAdded,
    PeakRemoved,
    PeakSelected,
    PeakToggled,
    PeakColorChanged,
    PeakEdited,
    ModeChanged,
    ContextChanged,
    BulbColor,
    ClipPlaneMoved,
    CapacityReached,
    NoSelection,
  };
  Kind kind;
  std::string detail;
};

std::string_view to_string(StatusEvent::Kind k);

struct SessionState {
  VolumeTransform transform;
  TransferFunction tf;
  ClipPlane plane;
  EditMode edit_mode = EditMode::CenterHeight;
  Context context = Context::Navigate;
  std::optional<ControllerSample> last_main;
  std::optional<ControllerSample> last_navpad;
  /// Main controller position the last applied motion was measured from.
  Vec3 motion_anchor;
  ColorRGB bulb_color = palette::kWhite;
  Gains gains;
  /// Palette slot used by the next ADD.
  std::size_t next_color = 0;
  std::uint64_t select_press_us = 0;
  bool long_press_fired = false;
};

using EventLog = std::vector<StatusEvent>;

/// BIG held: translate by the position change. Trigger held: horizontal
/// motion rotates about y, vertical about x, controller roll about z.
/// Motion only counts between two consecutive samples that both hold the
/// button. Throws InteractionError(WrongDevice).
void step_navigation(SessionState& state, const ControllerSample& sample);

/// MODE_CH / MODE_W press edges switch the edit mode; while BIG is held the
/// selected peak follows x/y motion (center+height or width), clamped.
/// Throws InteractionError(WrongDevice / NoSelection).
void step_edit(SessionState& state, const ControllerSample& sample, EventLog* events = nullptr);

/// Nav-Pad press edges: ADD, DELETE, TOGGLE_ENABLE, SELECT_NEXT (long press
/// also toggles Navigate/Edit), CYCLE_COLOR. Failures become status events.
void handle_navpad(SessionState& state, const ControllerSample& sample, EventLog* events = nullptr);

/// Selected peak's color, white without a selection.
ColorRGB bulb_color(const SessionState& state);

/// Full dispatch of one sample: validation, clip-plane chord, context
/// routing, bulb refresh. Returns the status events it produced.
EventLog apply_sample(SessionState& state, const ControllerSample& sample);

/// Empty when every SessionState invariant holds, otherwise a description.
std::optional<std::string> invariant_violation(const SessionState& state);

}  // namespace peakray
