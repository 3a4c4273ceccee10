#include "peakray/interaction.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace peakray {

namespace {

constexpr std::array<std::pair<ButtonMask, std::string_view>, 8> kButtonNames{{
    {button::kBig, "BIG"},
    {button::kModeCenterHeight, "MODE_CH"},
    {button::kModeWidth, "MODE_W"},
    {button::kAdd, "ADD"},
    {button::kDelete, "DELETE"},
    {button::kToggleEnable, "TOGGLE_ENABLE"},
    {button::kSelectNext, "SELECT_NEXT"},
    {button::kCycleColor, "CYCLE_COLOR"},
}};

constexpr ButtonMask kClipChord = button::kModeCenterHeight | button::kModeWidth;

void emit(EventLog* events, StatusEvent::Kind kind, std::string detail = {}) {
  if (events) events->push_back({kind, std::move(detail)});
}

bool pressed_edge(const std::optional<ControllerSample>& prev, const ControllerSample& cur, ButtonMask b) {
  return cur.held(b) && !(prev && prev->held(b));
}

void require_main(const ControllerSample& s, const char* op) {
  if (s.device != Device::MainController)
    throw InteractionError(InteractionError::Kind::WrongDevice, std::string(op) + " needs a MainController sample");
}

// Position change since the anchor, or nullopt while inside the dead zone.
std::optional<Vec3> anchored_motion(SessionState& st, const ControllerSample& s) {
  const Vec3 d = s.position - st.motion_anchor;
  if (length(d) < st.gains.dead_zone) return std::nullopt;
  st.motion_anchor = s.position;
  return d;
}

std::string color_text(const ColorRGB& c) {
  return "[" + std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) + "]";
}

void refresh_bulb(SessionState& st, EventLog* events) {
  const ColorRGB c = bulb_color(st);
  if (c != st.bulb_color) {
    st.bulb_color = c;
    emit(events, StatusEvent::Kind::BulbColor, color_text(c));
  }
}

void apply_mode_buttons(SessionState& st, const ControllerSample& s, EventLog* events) {
  if (s.held(kClipChord)) return;
  const auto& prev = st.last_main;
  EditMode next = st.edit_mode;
  if (pressed_edge(prev, s, button::kModeCenterHeight)) next = EditMode::CenterHeight;
  if (pressed_edge(prev, s, button::kModeWidth)) next = EditMode::Width;
  if (next != st.edit_mode) {
    st.edit_mode = next;
    emit(events, StatusEvent::Kind::ModeChanged, std::string(to_string(next)));
  }
}

void follow_clip_chord(SessionState& st, const ControllerSample& s, EventLog* events) {
  const bool chord_edge = s.held(kClipChord) && !(st.last_main && st.last_main->held(kClipChord));
  if (chord_edge && s.held(button::kBig)) {
    st.plane.enabled = false;
    emit(events, StatusEvent::Kind::ClipPlaneMoved, "disabled");
    return;
  }
  if (s.held(button::kBig)) return;
  const Mat3 rt = st.transform.rotation.transposed();
  const Vec3 normal_world = s.orientation.normalized().rotate({0, 0, 1});
  const Vec3 point_world = s.position * st.gains.translation;
  const Vec3 n = normalize(rt * normal_world);
  st.plane.normal = n;
  st.plane.offset = dot(n, rt * (point_world - st.transform.translation));
  st.plane.enabled = true;
  if (chord_edge) emit(events, StatusEvent::Kind::ClipPlaneMoved, "grabbed");
}

}  // namespace

std::string_view device_name(Device d) { return d == Device::MainController ? "MainController" : "NavPad"; }

std::optional<Device> device_from_name(std::string_view name) {
  if (name == "MainController") return Device::MainController;
  if (name == "NavPad") return Device::NavPad;
  return std::nullopt;
}

std::optional<ButtonMask> button::from_name(std::string_view name) {
  for (const auto& [mask, n] : kButtonNames) {
    if (n == name) return mask;
  }
  return std::nullopt;
}

std::vector<std::string> button::names(ButtonMask mask) {
  std::vector<std::string> out;
  for (const auto& [b, n] : kButtonNames) {
    if (mask & b) out.emplace_back(n);
  }
  return out;
}

std::string_view to_string(EditMode m) { return m == EditMode::CenterHeight ? "CenterHeight" : "Width"; }
std::string_view to_string(Context c) { return c == Context::Navigate ? "Navigate" : "Edit"; }

std::string_view to_string(StatusEvent::Kind k) {
  switch (k) {
    case StatusEvent::Kind::PeakAdded: return "peak_added";
    case StatusEvent::Kind::PeakRemoved: return "peak_removed";
    case StatusEvent::Kind::PeakSelected: return "peak_selected";
    case StatusEvent::Kind::PeakToggled: return "peak_toggled";
    case StatusEvent::Kind::PeakColorChanged: return "peak_color_changed";
    case StatusEvent::Kind::PeakEdited: return "peak_edited";
    case StatusEvent::Kind::ModeChanged: return "mode_changed";
    case StatusEvent::Kind::ContextChanged: return "context_changed";
    case StatusEvent::Kind::BulbColor: return "bulb_color";
    case StatusEvent::Kind::ClipPlaneMoved: return "clip_plane";
    case StatusEvent::Kind::CapacityReached: return "capacity_reached";
    case StatusEvent::Kind::NoSelection: return "no_selection";
  }
  return "unknown";
}

void validate(const ControllerSample& s) {
  const auto bad = [](const std::string& m) { throw InteractionError(InteractionError::Kind::InvalidSample, m); };
  const Quat& q = s.orientation;
  for (double v : {s.position.x, s.position.y, s.position.z, q.w, q.x, q.y, q.z, s.trigger}) {
    if (!std::isfinite(v)) bad("sample contains non-finite values");
  }
  if (std::abs(q.norm() - 1.0) > 1e-3) bad("orientation quaternion is not unit length");
  if (s.trigger < 0.0 || s.trigger > 1.0) bad("trigger must be in [0,1]");
}

void step_navigation(SessionState& st, const ControllerSample& s) {
  require_main(s, "step_navigation");
  const auto prev = st.last_main;
  st.last_main = s;
  const double threshold = st.gains.trigger_threshold;
  const bool translating = prev && prev->held(button::kBig) && s.held(button::kBig);
  const bool rotating = prev && prev->trigger > threshold && s.trigger > threshold;
  if (!translating && !rotating) {
    st.motion_anchor = s.position;
    return;
  }

  const auto motion = anchored_motion(st, s);
  if (translating && motion) st.transform.translation += *motion * st.gains.translation;
  if (rotating) {
    const double roll = twist_about_z(prev->orientation.conjugate() * s.orientation);
    Mat3 r = st.transform.rotation;
    if (motion) {
      r = axis_angle({1, 0, 0}, st.gains.rotation * motion->y) * axis_angle({0, 1, 0}, st.gains.rotation * motion->x) * r;
    }
    if (roll != 0.0) r = axis_angle({0, 0, 1}, roll) * r;
    st.transform.rotation = orthonormalize(r);
  }
}

void step_edit(SessionState& st, const ControllerSample& s, EventLog* events) {
  require_main(s, "step_edit");
  apply_mode_buttons(st, s, events);
  const auto prev = st.last_main;
  st.last_main = s;
  const bool editing = prev && prev->held(button::kBig) && s.held(button::kBig);
  if (!editing) {
    st.motion_anchor = s.position;
    return;
  }
  const Peak* sel = st.tf.selected_peak();
  if (!sel) {
    st.motion_anchor = s.position;
    throw InteractionError(InteractionError::Kind::NoSelection, "step_edit: no peak selected");
  }
  const auto motion = anchored_motion(st, s);
  if (!motion) return;
  Peak p = *sel;
  if (st.edit_mode == EditMode::CenterHeight) {
    p.center += st.gains.center * motion->x;
    p.height += st.gains.height * motion->y;
  } else {
    p.width += st.gains.width * motion->x;
  }
  st.tf.set_selected_clamped(p);
  if (*st.tf.selected_peak() != *sel) emit(events, StatusEvent::Kind::PeakEdited, std::to_string(*st.tf.selected()));
}

void handle_navpad(SessionState& st, const ControllerSample& s, EventLog* events) {
  if (s.device != Device::NavPad)
    throw InteractionError(InteractionError::Kind::WrongDevice, "handle_navpad needs a NavPad sample");
  const auto prev = st.last_navpad;
  st.last_navpad = s;
  auto& tf = st.tf;

  if (pressed_edge(prev, s, button::kAdd)) {
    if (tf.size() >= TransferFunction::kMaxPeaks) {
      emit(events, StatusEvent::Kind::CapacityReached, "at most 8 peaks");
    } else {
      tf.add_peak(palette::kColors[st.next_color]);
      st.next_color = (st.next_color + 1) % palette::kColors.size();
      emit(events, StatusEvent::Kind::PeakAdded, std::to_string(*tf.selected()));
    }
  }
  if (pressed_edge(prev, s, button::kDelete)) {
    if (!tf.selected()) {
      emit(events, StatusEvent::Kind::NoSelection, "delete");
    } else {
      const auto removed = *tf.selected();
      tf.delete_selected();
      emit(events, StatusEvent::Kind::PeakRemoved, std::to_string(removed));
    }
  }
  if (pressed_edge(prev, s, button::kToggleEnable)) {
    if (!tf.selected()) {
      emit(events, StatusEvent::Kind::NoSelection, "toggle");
    } else {
      tf.toggle_selected_enabled();
      emit(events, StatusEvent::Kind::PeakToggled, tf.selected_peak()->enabled ? "enabled" : "disabled");
    }
  }
  if (pressed_edge(prev, s, button::kSelectNext)) {
    st.select_press_us = s.timestamp_us;
    st.long_press_fired = false;
    if (tf.empty()) {
      emit(events, StatusEvent::Kind::NoSelection, "select_next");
    } else {
      tf.select_next();
      emit(events, StatusEvent::Kind::PeakSelected, std::to_string(*tf.selected()));
    }
  } else if (s.held(button::kSelectNext) && !st.long_press_fired && s.timestamp_us >= st.select_press_us &&
             s.timestamp_us - st.select_press_us >= st.gains.long_press_us) {
    st.long_press_fired = true;
    st.context = st.context == Context::Navigate ? Context::Edit : Context::Navigate;
    emit(events, StatusEvent::Kind::ContextChanged, std::string(to_string(st.context)));
  }
  if (pressed_edge(prev, s, button::kCycleColor)) {
    if (!tf.selected()) {
      emit(events, StatusEvent::Kind::NoSelection, "cycle_color");
    } else {
      tf.cycle_selected_color();
      emit(events, StatusEvent::Kind::PeakColorChanged, color_text(tf.selected_peak()->color));
    }
  }
}

ColorRGB bulb_color(const SessionState& st) {
  const Peak* p = st.tf.selected_peak();
  return p ? p->color : palette::kWhite;
}

EventLog apply_sample(SessionState& st, const ControllerSample& s) {
  validate(s);
  EventLog events;
  if (s.device == Device::NavPad) {
    handle_navpad(st, s, &events);
  } else if (s.held(kClipChord)) {
    follow_clip_chord(st, s, &events);
    st.last_main = s;
    st.motion_anchor = s.position;
  } else if (st.context == Context::Navigate) {
    apply_mode_buttons(st, s, &events);
    step_navigation(st, s);
  } else {
    if (!st.tf.selected() && pressed_edge(st.last_main, s, button::kBig))
      emit(&events, StatusEvent::Kind::NoSelection, "edit");
    try {
      step_edit(st, s, &events);
    } catch (const InteractionError& e) {
      if (e.kind() != InteractionError::Kind::NoSelection) throw;
    }
  }
  refresh_bulb(st, &events);
  return events;
}

std::optional<std::string> invariant_violation(const SessionState& st) {
  try {
    TransferFunction check(st.tf.peaks(), st.tf.selected());
  } catch (const TfError& e) {
    return std::string("transfer function: ") + e.what();
  }
  const Mat3& r = st.transform.rotation;
  if (orthonormality_error(r) > 1e-6) return "rotation is not orthonormal";
  if (std::abs(r.determinant() - 1.0) > 1e-6) return "rotation determinant is not 1";
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(st.transform.translation[a])) return "translation is not finite";
  }
  if (std::abs(length(st.plane.normal) - 1.0) > 1e-6) return "clip plane normal is not unit length";
  if (!std::isfinite(st.plane.offset)) return "clip plane offset is not finite";
  if (st.bulb_color != bulb_color(st)) return "bulb color does not match selection";
  if (st.next_color >= palette::kColors.size()) return "palette cursor out of range";
  return std::nullopt;
}

}  // namespace peakray
