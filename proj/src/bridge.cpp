#include "rubble/bridge.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>

#include "rubble/events.hpp"
#include "rubble/scene_json.hpp"

namespace rubble {

using nlohmann::json;

namespace {
constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (std::size_t k = 0; k < kAlphabet.size(); ++k) lookup[static_cast<unsigned char>(kAlphabet[k])] = static_cast<int>(k);
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        vals[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw std::invalid_argument("base64: data after padding");
      vals[k] = lookup[static_cast<unsigned char>(c)];
      if (vals[k] < 0) throw std::invalid_argument("base64: invalid character");
    }
    const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  return out;
}

namespace {

json raster_message(const SensorFrame& frame, const char* encoding, int bytes_per_pixel,
                    const std::vector<std::uint8_t>& data) {
  return {{"width", frame.width},
          {"height", frame.height},
          {"encoding", encoding},
          {"step", frame.step_index},
          {"is_bigendian", false},
          {"row_stride", frame.width * bytes_per_pixel},
          {"data", base64_encode(data)}};
}

}  // namespace

json color_message(const SensorFrame& frame) { return raster_message(frame, "rgb8", 3, frame.color); }

json depth_message(const SensorFrame& frame) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(frame.depth.size() * 4);
  for (float d : frame.depth) {
    const auto bits = std::bit_cast<std::uint32_t>(d);
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return raster_message(frame, "32FC1", 4, bytes);
}

json seg_message(const SensorFrame& frame) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(frame.segmentation.size() * 2);
  for (std::uint16_t v : frame.segmentation) {
    bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  return raster_message(frame, "mono16", 2, bytes);
}

json pose_json(const Transform& pose) {
  const Quat& q = pose.rotation;
  return {{"position", json::array({pose.translation.x, pose.translation.y, pose.translation.z})},
          {"orientation", json::array({q.w, q.x, q.y, q.z})}};
}

Transform parse_pose(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("pose must be an object");
  for (const auto& [key, value] : j.items())
    if (key != "position" && key != "orientation")
      throw std::invalid_argument("unknown pose key '" + key + "'");
  auto numbers = [&](const char* key, std::size_t n) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array() || it->size() != n)
      throw std::invalid_argument(std::string("pose.") + key + " must be an array of " + std::to_string(n) + " numbers");
    std::vector<double> v;
    for (const auto& e : *it) {
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw std::invalid_argument(std::string("pose.") + key + " must hold finite numbers");
      v.push_back(e.get<double>());
    }
    return v;
  };
  Transform t;
  const auto p = numbers("position", 3);
  t.translation = {p[0], p[1], p[2]};
  if (j.contains("orientation")) {
    const auto q = numbers("orientation", 4);
    t.rotation = {q[0], q[1], q[2], q[3]};
    if (std::abs(t.rotation.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("pose.orientation must be a unit quaternion");
  }
  return t;
}

json report_json(const EventReport& report) {
  json released = json::array();
  for (const auto& r : report.released) released.push_back(json::array({r.collection, r.fragment}));
  return {{"released", released},
          {"released_count", report.released.size()},
          {"broken_joints", report.broken_joints},
          {"settled", report.settled},
          {"warnings", report.warnings}};
}

// ---------------------------------------------------------------------------------------------

namespace {

json status(const std::string& level, const std::string& msg, const json* id) {
  json j = {{"op", "status"}, {"level", level}, {"msg", msg}};
  if (id) j["id"] = *id;
  return j;
}

bool is_known_topic(std::string_view topic) {
  return topic == kTopicColor || topic == kTopicDepth || topic == kTopicSeg ||
         topic == kTopicRobotPose || topic == kTopicReleased;
}

bool is_camera_topic(std::string_view topic) {
  return topic == kTopicColor || topic == kTopicDepth || topic == kTopicSeg;
}

std::size_t released_total(const WorldState& world) {
  std::size_t n = 0;
  for (const auto& gc : world.collections) n += gc.released_count();
  return n;
}

class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace

Bridge::Bridge(std::optional<Scene> scene) {
  robot_.intrinsics = {64, 48, std::numbers::pi / 2.0, 0.05, 100.0};
  robot_.pose.translation = {0.0, 1.5, 0.0};
  if (scene) reset(*scene);
}

void Bridge::reset(const Scene& scene) {
  WorldState world = instantiate(scene);
  world_ = std::move(world);
  scene_ = scene;
  robot_ = RobotBody{};
  if (!scene.cameras.empty()) {
    robot_.pose = scene.cameras.front().pose;
    robot_.intrinsics = scene.cameras.front().intrinsics;
  } else {
    robot_.intrinsics = {64, 48, std::numbers::pi / 2.0, 0.05, 100.0};
    robot_.pose.translation = {0.0, 1.5, 0.0};
  }
}

void Bridge::open_session(SessionId id) { subscriptions_.try_emplace(id); }
void Bridge::close_session(SessionId id) { subscriptions_.erase(id); }

std::vector<Bridge::Outgoing> Bridge::handle_line(SessionId session, std::string_view line) {
  open_session(session);
  json msg;
  try {
    msg = json::parse(line.begin(), line.end());
  } catch (const json::exception& e) {
    return {{session, status("error", std::string("malformed JSON: ") + e.what(), nullptr).dump()}};
  }
  return dispatch(session, msg);
}

std::vector<Bridge::Outgoing> Bridge::dispatch(SessionId session, const json& msg) {
  std::vector<Outgoing> out;
  auto reply = [&](const json& j) { out.push_back({session, j.dump()}); };
  if (!msg.is_object()) {
    reply(status("error", "message must be a JSON object", nullptr));
    return out;
  }
  const json* id = msg.contains("id") ? &msg["id"] : nullptr;
  auto it = msg.find("op");
  if (it == msg.end() || !it->is_string()) {
    reply(status("error", "missing field 'op'", id));
    return out;
  }
  const std::string op = it->get<std::string>();
  const bool topic_op = op == "advertise" || op == "subscribe" || op == "unsubscribe" || op == "publish";
  if (!topic_op && op != "call_service") {
    if (op == "service_response" || op == "status")
      reply(status("error", "unsupported op '" + op + "': server-to-client only", id));
    else
      reply(status("error", "unsupported op '" + op + "'", id));
    return out;
  }
  const char* name_field = topic_op ? "topic" : "service";
  auto name_it = msg.find(name_field);
  if (name_it == msg.end() || !name_it->is_string()) {
    reply(status("error", std::string("missing field '") + name_field + "'", id));
    return out;
  }
  const std::string name = name_it->get<std::string>();

  if (op == "subscribe" || op == "unsubscribe") {
    if (!is_known_topic(name)) {
      reply(status("error", "unknown topic '" + name + "'", id));
      return out;
    }
    auto& subs = subscriptions_[session];
    if (op == "subscribe") subs.insert(name);
    else subs.erase(name);
    reply(status("info", op + "d " + name, id));
    return out;
  }
  if (op == "advertise") {
    if (name != kTopicRobotPose) {
      reply(status("error", "topic '" + name + "' does not accept publishers", id));
      return out;
    }
    reply(status("info", "advertised " + name, id));
    return out;
  }
  if (op == "publish") {
    if (name != kTopicRobotPose) {
      reply(status("error", "topic '" + name + "' does not accept publishers", id));
      return out;
    }
    try {
      robot_.pose = parse_pose(msg.value("msg", json::object()));
    } catch (const std::invalid_argument& e) {
      reply(status("error", e.what(), id));
      return out;
    }
    publish({std::string(kTopicRobotPose)}, out);
    return out;
  }

  // call_service
  json response = {{"op", "service_response"}, {"service", name}};
  if (id) response["id"] = *id;
  std::vector<std::string> topics;
  try {
    const json args = msg.value("args", json::object());
    if (!args.is_object()) throw ServiceError("args must be an object");
    auto result = call_service(name, args);
    response["result"] = true;
    response["values"] = std::move(result.values);
    topics = std::move(result.publish_topics);
  } catch (const std::exception& e) {
    response["result"] = false;
    response["values"] = {{"error", e.what()}};
  }
  reply(response);
  publish(topics, out);
  return out;
}

Bridge::ServiceResult Bridge::call_service(const std::string& service, const json& args) {
  auto check_args = [&](std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : args.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) throw ServiceError("unknown argument '" + key + "' for " + service);
    }
  };
  if (service == "/sim/reset") {
    check_args({"scene"});
    if (args.contains("scene")) {
      reset(parse_scene(args["scene"].dump()));
    } else if (scene_) {
      reset(*scene_);
    } else {
      throw ServiceError("world not initialized: /sim/reset needs a scene");
    }
    return {{{"step_index", world_->step_index}, {"released_count", 0}}, {}};
  }
  if (service != "/sim/step" && service != "/sim/apply_event" && service != "/robot/set_pose")
    throw ServiceError("unknown service '" + service + "'");
  if (!world_) throw ServiceError("world not initialized");

  if (service == "/sim/step") {
    check_args({"n"});
    long long n = 1;
    if (args.contains("n")) {
      if (!args["n"].is_number_integer() || args["n"].get<long long>() < 0 ||
          args["n"].get<long long>() > 1000000)
        throw ServiceError("n must be an integer in [0, 1000000]");
      n = args["n"].get<long long>();
    }
    for (long long k = 0; k < n; ++k) step(*world_, world_->config.dt);
    return {{{"step_index", world_->step_index}, {"released_count", released_total(*world_)}},
            {std::string(kTopicColor), std::string(kTopicDepth), std::string(kTopicSeg),
             std::string(kTopicRobotPose), std::string(kTopicReleased)}};
  }
  if (service == "/sim/apply_event") {
    check_args({"event"});
    if (!args.contains("event")) throw ServiceError("missing argument 'event'");
    const DestructionEvent event = parse_event(args["event"], "event");
    const EventReport report = apply_event(*world_, event);
    return {report_json(report), {std::string(kTopicReleased)}};
  }
  // /robot/set_pose
  check_args({"position", "orientation"});
  try {
    robot_.pose = parse_pose(args);
  } catch (const std::invalid_argument& e) {
    throw ServiceError(e.what());
  }
  return {pose_json(robot_.pose), {std::string(kTopicRobotPose)}};
}

json Bridge::topic_payload(const std::string& topic, const SensorFrame* frame) const {
  if (topic == kTopicColor) return color_message(*frame);
  if (topic == kTopicDepth) return depth_message(*frame);
  if (topic == kTopicSeg) return seg_message(*frame);
  if (topic == kTopicRobotPose) return pose_json(robot_.pose);
  return {{"data", world_ ? released_total(*world_) : 0}};
}

void Bridge::publish(const std::vector<std::string>& topics, std::vector<Outgoing>& out) {
  if (topics.empty()) return;
  std::optional<SensorFrame> frame;
  for (const auto& topic : topics) {
    std::optional<std::string> line;
    for (const auto& [session, subs] : subscriptions_) {
      if (!subs.count(topic)) continue;
      if (!line) {
        if (is_camera_topic(topic) && !frame) {
          if (!world_) return;
          frame = render(*world_, robot_.camera(), environment());
        }
        line = json{{"op", "publish"}, {"topic", topic},
                    {"msg", topic_payload(topic, frame ? &*frame : nullptr)}}
                   .dump();
      }
      out.push_back({session, *line});
    }
  }
}

}  // namespace rubble
