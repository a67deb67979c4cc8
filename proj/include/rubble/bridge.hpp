#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rubble/camera.hpp"
#include "rubble/physics.hpp"
#include "rubble/scene.hpp"
#include "rubble/sensors.hpp"

namespace rubble {

/// Kinematic robot carrying one camera.
struct RobotBody {
  Transform pose;
  Transform camera_offset;  // camera pose relative to the robot
  CameraIntrinsics intrinsics;

  Camera camera() const { return {pose * camera_offset, intrinsics}; }
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Raster payloads as published on the camera topics.
nlohmann::json color_message(const SensorFrame& frame);  // encoding "rgb8"
nlohmann::json depth_message(const SensorFrame& frame);  // "32FC1": little-endian float32, misses = +inf
nlohmann::json seg_message(const SensorFrame& frame);    // "mono16": little-endian uint16 labels

nlohmann::json pose_json(const Transform& pose);
/// Throws std::invalid_argument when fields are missing or the quaternion is not unit length.
Transform parse_pose(const nlohmann::json& j);

nlohmann::json report_json(const EventReport& report);

inline constexpr std::string_view kTopicColor = "/camera/color";
inline constexpr std::string_view kTopicDepth = "/camera/depth";
inline constexpr std::string_view kTopicSeg = "/camera/seg";
inline constexpr std::string_view kTopicRobotPose = "/robot/pose";
inline constexpr std::string_view kTopicReleased = "/sim/released_count";

/// Protocol core: owns the world and the robot and turns one inbound line into outbound lines.
/// Not synchronized; BridgeServer calls it from a single control thread.
class Bridge {
 public:
  using SessionId = std::uint64_t;

  struct Outgoing {
    SessionId session;
    std::string line;  // one JSON message, no trailing newline
    bool operator==(const Outgoing&) const = default;
  };

  /// Without a scene the world stays uninitialized until /sim/reset supplies one.
  explicit Bridge(std::optional<Scene> scene = std::nullopt);

  void open_session(SessionId id);
  void close_session(SessionId id);
  std::vector<Outgoing> handle_line(SessionId session, std::string_view line);

  bool initialized() const { return world_.has_value(); }
  const WorldState& world() const { return *world_; }
  const RobotBody& robot() const { return robot_; }
  const EnvironmentConfig& environment() const { return scene_ ? scene_->environment : default_env_; }

 private:
  struct ServiceResult {
    nlohmann::json values;
    std::vector<std::string> publish_topics;
  };

  std::vector<Outgoing> dispatch(SessionId session, const nlohmann::json& msg);
  ServiceResult call_service(const std::string& service, const nlohmann::json& args);
  void publish(const std::vector<std::string>& topics, std::vector<Outgoing>& out);
  nlohmann::json topic_payload(const std::string& topic, const SensorFrame* frame) const;
  void reset(const Scene& scene);

  std::optional<Scene> scene_;
  std::optional<WorldState> world_;
  RobotBody robot_;
  EnvironmentConfig default_env_;
  std::map<SessionId, std::set<std::string>> subscriptions_;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newline-delimited JSON over TCP. One reader thread per client feeds a single command queue;
/// one control thread owns the Bridge and writes all replies.
class BridgeServer {
 public:
  /// Binds and listens immediately; port 0 picks a free port. Throws BindError.
  BridgeServer(Bridge bridge, const std::string& host, std::uint16_t port);
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  std::uint16_t port() const;
  /// Serves until stop() is called or `*stop_flag` becomes true.
  void run(const std::atomic<bool>* stop_flag = nullptr);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rubble
