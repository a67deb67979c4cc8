#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "rubble/camera.hpp"
#include "rubble/events.hpp"
#include "rubble/scene.hpp"

// JSON pieces of the scene format, shared by frame metadata and the bridge protocol.
// Parsers throw SceneError; `ctx` prefixes error messages.

namespace rubble {

DestructionEvent parse_event(const nlohmann::json& j, const std::string& ctx);
nlohmann::json event_json(const DestructionEvent& event);

EnvironmentConfig parse_environment(const nlohmann::json& j, const std::string& ctx);
nlohmann::json environment_json(const EnvironmentConfig& env);

Camera parse_camera(const nlohmann::json& j, const std::string& ctx);
nlohmann::json camera_json(const Camera& camera);

}  // namespace rubble
