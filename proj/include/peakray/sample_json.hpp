#pragma once

#include <json.hpp>

#include "peakray/interaction.hpp"

namespace peakray {

/// `{device, timestamp_us, pos:[x,y,z], quat:[w,x,y,z], buttons:[names], trigger}`.
nlohmann::json sample_to_json(const ControllerSample& s);

/// `device` is required; the rest default to origin / identity / none / 0.
/// Throws std::invalid_argument naming the bad field; the result is validated.
ControllerSample sample_from_json(const nlohmann::json& j);

}  // namespace peakray
