#include "rubble/scene.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

#include "rubble/random.hpp"
#include "rubble/scene_json.hpp"
#include "rubble/threads.hpp"

namespace rubble {

using nlohmann::json;

std::string_view to_string(SceneErrorKind kind) {
  switch (kind) {
    case SceneErrorKind::Syntax: return "syntax";
    case SceneErrorKind::UnknownKey: return "unknown_key";
    case SceneErrorKind::MissingKey: return "missing_key";
    case SceneErrorKind::TypeMismatch: return "type_mismatch";
    case SceneErrorKind::OutOfRange: return "out_of_range";
    case SceneErrorKind::UnknownArchetype: return "unknown_archetype";
    case SceneErrorKind::UnknownMaterial: return "unknown_material";
    case SceneErrorKind::UnknownEventType: return "unknown_event_type";
    case SceneErrorKind::UnknownPattern: return "unknown_pattern";
    case SceneErrorKind::Overlap: return "overlap";
    case SceneErrorKind::Fracture: return "fracture";
  }
  return "unknown";
}

SceneError::SceneError(SceneErrorKind kind, const std::string& message, int line, int column)
    : std::runtime_error(message), kind_(kind), line_(line), column_(column) {}

Quat look_rotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 back = normalized(eye - target);
  Vec3 right = cross(up, back);
  if (norm(right) < 1e-12) right = cross(Vec3{0, 0, 1}, back);
  right = normalized(right);
  const Vec3 true_up = cross(back, right);
  // Columns of the rotation matrix are right, true_up, back.
  const double m00 = right.x, m01 = true_up.x, m02 = back.x;
  const double m10 = right.y, m11 = true_up.y, m12 = back.y;
  const double m20 = right.z, m21 = true_up.z, m22 = back.z;
  const double trace = m00 + m11 + m22;
  Quat q;
  if (trace > 0) {
    const double s = std::sqrt(trace + 1.0) * 2.0;
    q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
  } else if (m00 > m11 && m00 > m22) {
    const double s = std::sqrt(1.0 + m00 - m11 - m22) * 2.0;
    q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
  } else if (m11 > m22) {
    const double s = std::sqrt(1.0 + m11 - m00 - m22) * 2.0;
    q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
  } else {
    const double s = std::sqrt(1.0 + m22 - m00 - m11) * 2.0;
    q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
  }
  return q.normalized();
}

// ---------------------------------------------------------------------------------------------
// Archetypes

namespace {

constexpr double kWall = 0.2;
constexpr double kHalf = 2.0;         // room is 4 x 4 m
constexpr double kFloorTop = 0.2;
constexpr double kCeiling = 2.8;      // underside of the roof slab
constexpr double kRoofTop = 3.0;
constexpr double kDoorHalfWidth = 0.5;
constexpr double kDoorTop = kFloorTop + 2.2;
constexpr double kWindowHalfWidth = 0.5;
constexpr double kSillTop = kFloorTop + 1.0;
constexpr double kWindowTop = kSillTop + 1.0;

ConvexPolyhedron slab(double x0, double y0, double z0, double x1, double y1, double z1) {
  return make_box({x0, y0, z0}, {x1, y1, z1});
}

void add_south_wall_with_door(std::vector<ConvexPolyhedron>& s) {
  s.push_back(slab(-kHalf, kFloorTop, -kHalf, -kDoorHalfWidth, kCeiling, -kHalf + kWall));
  s.push_back(slab(kDoorHalfWidth, kFloorTop, -kHalf, kHalf, kCeiling, -kHalf + kWall));
  s.push_back(slab(-kDoorHalfWidth, kDoorTop, -kHalf, kDoorHalfWidth, kCeiling, -kHalf + kWall));
}

std::vector<ConvexPolyhedron> simple_door_room() {
  std::vector<ConvexPolyhedron> s;
  s.push_back(slab(-kHalf, 0.0, -kHalf, kHalf, kFloorTop, kHalf));
  s.push_back(slab(-kHalf, kCeiling, -kHalf, kHalf, kRoofTop, kHalf));
  s.push_back(slab(-kHalf, kFloorTop, kHalf - kWall, kHalf, kCeiling, kHalf));
  s.push_back(slab(-kHalf, kFloorTop, -kHalf + kWall, -kHalf + kWall, kCeiling, kHalf - kWall));
  s.push_back(slab(kHalf - kWall, kFloorTop, -kHalf + kWall, kHalf, kCeiling, kHalf - kWall));
  add_south_wall_with_door(s);
  return s;
}

// Square room with the (+x, +z) quadrant removed; door in the south wall, window in the west.
std::vector<ConvexPolyhedron> l_shaped_room() {
  std::vector<ConvexPolyhedron> s;
  s.push_back(slab(-kHalf, 0.0, -kHalf, kHalf, kFloorTop, 0.0));
  s.push_back(slab(-kHalf, 0.0, 0.0, 0.0, kFloorTop, kHalf));
  s.push_back(slab(-kHalf, kCeiling, -kHalf, kHalf, kRoofTop, 0.0));
  s.push_back(slab(-kHalf, kCeiling, 0.0, 0.0, kRoofTop, kHalf));
  add_south_wall_with_door(s);
  s.push_back(slab(kHalf - kWall, kFloorTop, -kHalf + kWall, kHalf, kCeiling, 0.0));
  s.push_back(slab(-kWall, kFloorTop, -kWall, kHalf - kWall, kCeiling, 0.0));
  s.push_back(slab(-kWall, kFloorTop, 0.0, 0.0, kCeiling, kHalf - kWall));
  s.push_back(slab(-kHalf, kFloorTop, kHalf - kWall, 0.0, kCeiling, kHalf));
  const double wx0 = -kHalf;
  const double wx1 = -kHalf + kWall;
  s.push_back(slab(wx0, kFloorTop, -kHalf + kWall, wx1, kCeiling, -kWindowHalfWidth));
  s.push_back(slab(wx0, kFloorTop, kWindowHalfWidth, wx1, kCeiling, kHalf - kWall));
  s.push_back(slab(wx0, kFloorTop, -kWindowHalfWidth, wx1, kSillTop, kWindowHalfWidth));
  s.push_back(slab(wx0, kWindowTop, -kWindowHalfWidth, wx1, kCeiling, kWindowHalfWidth));
  return s;
}

std::vector<ConvexPolyhedron> pillar_room() {
  auto s = simple_door_room();
  for (double cx : {-1.0, 1.0})
    s.push_back(slab(cx - 0.15, kFloorTop, -0.15, cx + 0.15, kCeiling, 0.15));
  return s;
}

std::vector<ConvexPolyhedron> beam_room() {
  auto s = simple_door_room();
  const double inner = kHalf - kWall;
  const double beam_bottom = kCeiling - 0.3;
  s.push_back(slab(-inner, beam_bottom, -0.15, inner, kCeiling, 0.15));
  s.push_back(slab(-inner, kFloorTop, -0.15, -inner + 0.3, beam_bottom, 0.15));
  s.push_back(slab(inner - 0.3, kFloorTop, -0.15, inner, beam_bottom, 0.15));
  return s;
}

}  // namespace

std::vector<ConvexPolyhedron> archetype_solids(Archetype archetype) {
  switch (archetype) {
    case Archetype::SimpleDoor: return simple_door_room();
    case Archetype::LShapedWindow: return l_shaped_room();
    case Archetype::PillarRoom: return pillar_room();
    case Archetype::BeamRoom: return beam_room();
  }
  return {};
}

std::vector<GridCell> archetype_footprint(Archetype) { return {GridCell{0, 0}}; }

namespace {

// Exact quarter-turn rotation about +y: (x, z) -> (x cos + z sin, -x sin + z cos).
std::pair<int, int> quarter_turn_cs(int rotation) {
  switch (((rotation / 90) % 4 + 4) % 4) {
    case 1: return {0, 1};
    case 2: return {-1, 0};
    case 3: return {0, -1};
    default: return {1, 0};
  }
}

}  // namespace

std::vector<GridCell> room_cells(const RoomInstance& room) {
  const auto [c, s] = quarter_turn_cs(room.rotation);
  std::vector<GridCell> cells;
  for (const GridCell& off : archetype_footprint(room.archetype)) {
    const int di = off[0] * c + off[1] * s;
    const int dj = -off[0] * s + off[1] * c;
    cells.push_back({room.grid_position[0] + di, room.grid_position[1] + dj});
  }
  return cells;
}

Vec3 room_to_world(const RoomInstance& room, double cell_size, const Vec3& local) {
  const auto [c, s] = quarter_turn_cs(room.rotation);
  const double x = local.x * c + local.z * s;
  const double z = -local.x * s + local.z * c;
  return {x + (room.grid_position[0] + 0.5) * cell_size, local.y,
          z + (room.grid_position[1] + 0.5) * cell_size};
}

std::uint64_t room_seed(const Scene& scene, const RoomInstance& room) {
  if (room.seed) return *room.seed;
  return mix_seed({scene.seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(room.grid_position[0])),
                   static_cast<std::uint64_t>(static_cast<std::int64_t>(room.grid_position[1])),
                   static_cast<std::uint64_t>(room.rotation)});
}

void check_overlaps(const Scene& scene) {
  std::map<GridCell, std::size_t> owner;
  for (std::size_t r = 0; r < scene.rooms.size(); ++r) {
    for (const GridCell& cell : room_cells(scene.rooms[r])) {
      auto [it, inserted] = owner.emplace(cell, r);
      if (!inserted && it->second != r) {
        throw SceneError(SceneErrorKind::Overlap,
                         "rooms " + std::to_string(it->second) + " and " + std::to_string(r) +
                             " both occupy grid cell (" + std::to_string(cell[0]) + ", " +
                             std::to_string(cell[1]) + ")");
      }
    }
  }
}

WorldState instantiate(const Scene& scene) {
  check_overlaps(scene);
  WorldState world;
  world.seed = scene.seed;
  world.collections.resize(scene.rooms.size());
  parallel_for(scene.rooms.size(), [&](std::size_t r) {
    const RoomInstance& room = scene.rooms[r];
    const std::uint64_t seed = room_seed(scene, room);
    const FracturePattern& base = room.pattern_override ? *room.pattern_override
                                                        : room.material.default_pattern;
    std::vector<FractureResult> results;
    const auto solids = archetype_solids(room.archetype);
    for (std::size_t s = 0; s < solids.size(); ++s) {
      ConvexPolyhedron solid = solids[s];
      for (Vec3& v : solid.vertices) v = room_to_world(room, scene.grid_cell_size, v);
      const FracturePattern pattern = with_salted_seed(base, mix_seed({seed, s}));
      try {
        results.push_back(fracture_solid(solid, pattern, static_cast<int>(s)));
      } catch (const FractureError& e) {
        throw SceneError(SceneErrorKind::Fracture, "room " + std::to_string(r) + " (" +
                                                       std::string(to_string(room.archetype)) +
                                                       "): " + e.what());
      }
    }
    world.collections[r] =
        build_collection(results, room.material, static_cast<int>(r), room.archetype);
  });
  return world;
}

// ---------------------------------------------------------------------------------------------
// Scene documents

namespace {

[[noreturn]] void fail(SceneErrorKind kind, const std::string& msg) { throw SceneError(kind, msg); }

std::string path_join(const std::string& ctx, const std::string& key) {
  return ctx.empty() ? key : ctx + "." + key;
}

void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) fail(SceneErrorKind::TypeMismatch, ctx + ": expected an object");
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& ctx) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) fail(SceneErrorKind::UnknownKey, "unknown key '" + path_join(ctx, key) + "'");
  }
}

const json& require(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end())
    fail(SceneErrorKind::MissingKey, "missing key '" + path_join(ctx, key) + "'");
  return *it;
}

double as_double(const json& j, const std::string& ctx) {
  if (!j.is_number()) fail(SceneErrorKind::TypeMismatch, ctx + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(SceneErrorKind::OutOfRange, ctx + ": not finite");
  return v;
}

long long as_int(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) fail(SceneErrorKind::TypeMismatch, ctx + ": expected an integer");
  if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT32_MAX))
    fail(SceneErrorKind::OutOfRange, ctx + ": integer too large");
  return j.get<long long>();
}

std::uint64_t as_seed(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) fail(SceneErrorKind::TypeMismatch, ctx + ": expected an integer");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = j.get<std::int64_t>();
  if (v < 0) fail(SceneErrorKind::OutOfRange, ctx + ": seed must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::string as_string(const json& j, const std::string& ctx) {
  if (!j.is_string()) fail(SceneErrorKind::TypeMismatch, ctx + ": expected a string");
  return j.get<std::string>();
}

Vec3 as_vec3(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3)
    fail(SceneErrorKind::TypeMismatch, ctx + ": expected [x, y, z]");
  return {as_double(j[0], ctx + "[0]"), as_double(j[1], ctx + "[1]"), as_double(j[2], ctx + "[2]")};
}

double get_double(const json& obj, const char* key, const std::string& ctx, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_double(*it, path_join(ctx, key));
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

// Patterns -----------------------------------------------------------------------------------

FracturePattern parse_pattern(const json& j, const std::string& ctx) {
  expect_object(j, ctx);
  const std::string type = as_string(require(j, "type", ctx), path_join(ctx, "type"));
  FracturePattern pattern;
  if (type == "uniform_voronoi") {
    check_keys(j, {"type", "site_count", "seed"}, ctx);
    UniformVoronoi p;
    p.site_count = static_cast<int>(as_int(require(j, "site_count", ctx), path_join(ctx, "site_count")));
    if (j.contains("seed")) p.seed = as_seed(j["seed"], path_join(ctx, "seed"));
    pattern = p;
  } else if (type == "planar") {
    check_keys(j, {"type", "planes", "jitter_amplitude", "seed"}, ctx);
    Planar p;
    const json& planes = require(j, "planes", ctx);
    if (!planes.is_array()) fail(SceneErrorKind::TypeMismatch, path_join(ctx, "planes") + ": expected an array");
    for (std::size_t i = 0; i < planes.size(); ++i) {
      const std::string pctx = path_join(ctx, "planes[" + std::to_string(i) + "]");
      expect_object(planes[i], pctx);
      check_keys(planes[i], {"normal", "offset"}, pctx);
      const Vec3 n = as_vec3(require(planes[i], "normal", pctx), path_join(pctx, "normal"));
      const double off = get_double(planes[i], "offset", pctx, 0.0);
      const double len = norm(n);
      if (!(len > 0.0)) fail(SceneErrorKind::OutOfRange, pctx + ": normal must be non-zero");
      // Stored exactly as written when already unit length so documents roundtrip.
      p.planes.push_back(std::abs(len - 1.0) <= 1e-9 ? HalfSpace{n, off} : HalfSpace{n / len, off});
    }
    p.jitter_amplitude = get_double(j, "jitter_amplitude", ctx, 0.0);
    if (j.contains("seed")) p.seed = as_seed(j["seed"], path_join(ctx, "seed"));
    pattern = p;
  } else if (type == "brick") {
    check_keys(j, {"type", "brick_dims", "row_offset"}, ctx);
    Brick p;
    p.brick_dims = as_vec3(require(j, "brick_dims", ctx), path_join(ctx, "brick_dims"));
    p.row_offset = get_double(j, "row_offset", ctx, p.brick_dims.x * 0.5);
    pattern = p;
  } else {
    fail(SceneErrorKind::UnknownPattern, ctx + ": unknown pattern type '" + type + "'");
  }
  try {
    validate_pattern(pattern);
  } catch (const std::invalid_argument& e) {
    fail(SceneErrorKind::OutOfRange, ctx + ": " + e.what());
  }
  return pattern;
}

json pattern_json(const FracturePattern& pattern) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformVoronoi>) {
          return {{"type", "uniform_voronoi"}, {"site_count", p.site_count}, {"seed", p.seed}};
        } else if constexpr (std::is_same_v<T, Planar>) {
          json planes = json::array();
          for (const auto& hs : p.planes)
            planes.push_back({{"normal", vec_json(hs.normal)}, {"offset", hs.offset}});
          return {{"type", "planar"}, {"planes", planes}, {"jitter_amplitude", p.jitter_amplitude},
                  {"seed", p.seed}};
        } else {
          return {{"type", "brick"}, {"brick_dims", vec_json(p.brick_dims)},
                  {"row_offset", p.row_offset}};
        }
      },
      pattern);
}

// Rooms --------------------------------------------------------------------------------------

Material parse_material(const json& j, const std::string& ctx) {
  if (j.is_string()) {
    const auto kind = parse_material_kind(j.get<std::string>());
    if (!kind) fail(SceneErrorKind::UnknownMaterial, ctx + ": unknown material '" + j.get<std::string>() + "'");
    return Material::preset(*kind);
  }
  expect_object(j, ctx);
  check_keys(j, {"name", "density", "strain_threshold", "pattern"}, ctx);
  const std::string name = as_string(require(j, "name", ctx), path_join(ctx, "name"));
  const auto kind = parse_material_kind(name);
  if (!kind) fail(SceneErrorKind::UnknownMaterial, ctx + ": unknown material '" + name + "'");
  Material m = Material::preset(*kind);
  m.density = get_double(j, "density", ctx, m.density);
  m.strain_threshold = get_double(j, "strain_threshold", ctx, m.strain_threshold);
  if (j.contains("pattern")) m.default_pattern = parse_pattern(j["pattern"], path_join(ctx, "pattern"));
  if (!(m.density > 0.0)) fail(SceneErrorKind::OutOfRange, ctx + ": density must be > 0");
  if (!(m.strain_threshold > 0.0))
    fail(SceneErrorKind::OutOfRange, ctx + ": strain_threshold must be > 0");
  return m;
}

json material_json(const Material& m) {
  return {{"name", std::string(to_string(m.kind))}, {"density", m.density},
          {"strain_threshold", m.strain_threshold}, {"pattern", pattern_json(m.default_pattern)}};
}

RoomInstance parse_room(const json& j, const std::string& ctx) {
  expect_object(j, ctx);
  check_keys(j, {"archetype", "position", "rotation", "material", "pattern", "seed"}, ctx);
  RoomInstance room;
  const std::string arch = as_string(require(j, "archetype", ctx), path_join(ctx, "archetype"));
  const auto a = parse_archetype(arch);
  if (!a) fail(SceneErrorKind::UnknownArchetype, ctx + ": unknown archetype '" + arch + "'");
  room.archetype = *a;
  const json& pos = require(j, "position", ctx);
  if (!pos.is_array() || pos.size() != 2)
    fail(SceneErrorKind::TypeMismatch, path_join(ctx, "position") + ": expected [i, j]");
  room.grid_position = {static_cast<int>(as_int(pos[0], path_join(ctx, "position[0]"))),
                        static_cast<int>(as_int(pos[1], path_join(ctx, "position[1]")))};
  if (j.contains("rotation")) {
    const long long rot = as_int(j["rotation"], path_join(ctx, "rotation"));
    if (rot != 0 && rot != 90 && rot != 180 && rot != 270)
      fail(SceneErrorKind::OutOfRange, path_join(ctx, "rotation") + ": must be 0, 90, 180 or 270");
    room.rotation = static_cast<int>(rot);
  }
  if (j.contains("material")) room.material = parse_material(j["material"], path_join(ctx, "material"));
  if (j.contains("pattern")) room.pattern_override = parse_pattern(j["pattern"], path_join(ctx, "pattern"));
  if (j.contains("seed")) room.seed = as_seed(j["seed"], path_join(ctx, "seed"));
  return room;
}

json room_json(const RoomInstance& r) {
  json j = {{"archetype", std::string(to_string(r.archetype))},
            {"position", json::array({r.grid_position[0], r.grid_position[1]})},
            {"rotation", r.rotation},
            {"material", material_json(r.material)}};
  if (r.pattern_override) j["pattern"] = pattern_json(*r.pattern_override);
  if (r.seed) j["seed"] = *r.seed;
  return j;
}

}  // namespace

// Events -------------------------------------------------------------------------------------

DestructionEvent parse_event(const json& j, const std::string& ctx) {
  expect_object(j, ctx);
  const std::string type = as_string(require(j, "type", ctx), path_join(ctx, "type"));
  DestructionEvent event;
  if (type == "universal_strain") {
    check_keys(j, {"type", "magnitude"}, ctx);
    event = UniversalStrain{as_double(require(j, "magnitude", ctx), path_join(ctx, "magnitude"))};
  } else if (type == "explosion") {
    check_keys(j, {"type", "center", "strain_magnitude", "force_magnitude", "radius", "falloff"}, ctx);
    Explosion e;
    e.center = as_vec3(require(j, "center", ctx), path_join(ctx, "center"));
    e.strain_magnitude = as_double(require(j, "strain_magnitude", ctx), path_join(ctx, "strain_magnitude"));
    e.force_magnitude = get_double(j, "force_magnitude", ctx, 0.0);
    e.radius = as_double(require(j, "radius", ctx), path_join(ctx, "radius"));
    if (j.contains("falloff")) {
      const std::string f = as_string(j["falloff"], path_join(ctx, "falloff"));
      if (f == "squared") e.falloff = Falloff::Squared;
      else if (f == "linear") e.falloff = Falloff::Linear;
      else fail(SceneErrorKind::OutOfRange, path_join(ctx, "falloff") + ": expected 'linear' or 'squared'");
    }
    event = e;
  } else if (type == "strain_buildup") {
    check_keys(j, {"type", "center", "radius", "per_step_magnitude", "duration"}, ctx);
    StrainBuildup e;
    e.center = as_vec3(require(j, "center", ctx), path_join(ctx, "center"));
    e.radius = as_double(require(j, "radius", ctx), path_join(ctx, "radius"));
    e.per_step_magnitude = as_double(require(j, "per_step_magnitude", ctx), path_join(ctx, "per_step_magnitude"));
    e.duration = static_cast<int>(as_int(require(j, "duration", ctx), path_join(ctx, "duration")));
    event = e;
  } else {
    fail(SceneErrorKind::UnknownEventType, ctx + ": unknown event type '" + type + "'");
  }
  try {
    validate_event(event);
  } catch (const std::invalid_argument& e) {
    fail(SceneErrorKind::OutOfRange, ctx + ": " + e.what());
  }
  return event;
}

json event_json(const DestructionEvent& event) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, UniversalStrain>) {
          return {{"type", "universal_strain"}, {"magnitude", e.magnitude}};
        } else if constexpr (std::is_same_v<T, Explosion>) {
          return {{"type", "explosion"}, {"center", vec_json(e.center)},
                  {"strain_magnitude", e.strain_magnitude}, {"force_magnitude", e.force_magnitude},
                  {"radius", e.radius},
                  {"falloff", e.falloff == Falloff::Squared ? "squared" : "linear"}};
        } else {
          return {{"type", "strain_buildup"}, {"center", vec_json(e.center)}, {"radius", e.radius},
                  {"per_step_magnitude", e.per_step_magnitude}, {"duration", e.duration}};
        }
      },
      event);
}

// Environment and cameras --------------------------------------------------------------------

EnvironmentConfig parse_environment(const json& j, const std::string& ctx) {
  expect_object(j, ctx);
  check_keys(j, {"weather", "time_of_day"}, ctx);
  EnvironmentConfig env;
  env.time_of_day = get_double(j, "time_of_day", ctx, env.time_of_day);
  if (!(env.time_of_day >= 0.0 && env.time_of_day < 24.0))
    fail(SceneErrorKind::OutOfRange, path_join(ctx, "time_of_day") + ": must lie in [0, 24)");
  if (j.contains("weather")) {
    const json& w = j["weather"];
    const std::string wctx = path_join(ctx, "weather");
    std::string type;
    if (w.is_string()) {
      type = w.get<std::string>();
    } else {
      expect_object(w, wctx);
      type = as_string(require(w, "type", wctx), path_join(wctx, "type"));
    }
    const json empty = json::object({{"type", type}});
    const json& obj = w.is_string() ? empty : w;
    if (type == "sunshine") {
      check_keys(obj, {"type"}, wctx);
      env.weather = Sunshine{};
    } else if (type == "fog") {
      check_keys(obj, {"type", "density"}, wctx);
      Fog fog;
      fog.density = get_double(obj, "density", wctx, fog.density);
      if (!(fog.density >= 0.0)) fail(SceneErrorKind::OutOfRange, wctx + ": fog density must be >= 0");
      env.weather = fog;
    } else if (type == "rain") {
      check_keys(obj, {"type", "intensity"}, wctx);
      Rain rain;
      rain.intensity = get_double(obj, "intensity", wctx, rain.intensity);
      if (!(rain.intensity >= 0.0 && rain.intensity <= 1.0))
        fail(SceneErrorKind::OutOfRange, wctx + ": rain intensity must lie in [0, 1]");
      env.weather = rain;
    } else {
      fail(SceneErrorKind::OutOfRange, wctx + ": unknown weather '" + type + "'");
    }
  }
  return env;
}

json environment_json(const EnvironmentConfig& env) {
  json weather = std::visit(
      [](const auto& w) -> json {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, Fog>) return {{"type", "fog"}, {"density", w.density}};
        else if constexpr (std::is_same_v<T, Rain>) return {{"type", "rain"}, {"intensity", w.intensity}};
        else return {{"type", "sunshine"}};
      },
      env.weather);
  return {{"weather", weather}, {"time_of_day", env.time_of_day}};
}

Camera parse_camera(const json& j, const std::string& ctx) {
  expect_object(j, ctx);
  check_keys(j, {"position", "rotation", "look_at", "up", "width", "height", "horizontal_fov", "near", "far"}, ctx);
  Camera cam;
  cam.pose.translation = as_vec3(require(j, "position", ctx), path_join(ctx, "position"));
  if (j.contains("rotation") && j.contains("look_at"))
    fail(SceneErrorKind::OutOfRange, ctx + ": give either 'rotation' or 'look_at', not both");
  if (j.contains("rotation")) {
    const json& r = j["rotation"];
    if (!r.is_array() || r.size() != 4)
      fail(SceneErrorKind::TypeMismatch, path_join(ctx, "rotation") + ": expected [w, x, y, z]");
    cam.pose.rotation = {as_double(r[0], ctx), as_double(r[1], ctx), as_double(r[2], ctx),
                         as_double(r[3], ctx)};
    if (std::abs(cam.pose.rotation.norm() - 1.0) > 1e-9)
      fail(SceneErrorKind::OutOfRange, path_join(ctx, "rotation") + ": quaternion must be unit length");
  } else if (j.contains("look_at")) {
    const Vec3 target = as_vec3(j["look_at"], path_join(ctx, "look_at"));
    const Vec3 up = j.contains("up") ? as_vec3(j["up"], path_join(ctx, "up")) : Vec3{0, 1, 0};
    if (norm(target - cam.pose.translation) < 1e-9)
      fail(SceneErrorKind::OutOfRange, path_join(ctx, "look_at") + ": coincides with position");
    cam.pose.rotation = look_rotation(cam.pose.translation, target, up);
  } else if (j.contains("up")) {
    fail(SceneErrorKind::OutOfRange, path_join(ctx, "up") + ": only valid with 'look_at'");
  }
  CameraIntrinsics& in = cam.intrinsics;
  if (j.contains("width")) in.width = static_cast<int>(as_int(j["width"], path_join(ctx, "width")));
  if (j.contains("height")) in.height = static_cast<int>(as_int(j["height"], path_join(ctx, "height")));
  in.horizontal_fov = get_double(j, "horizontal_fov", ctx, in.horizontal_fov);
  in.near = get_double(j, "near", ctx, in.near);
  in.far = get_double(j, "far", ctx, in.far);
  if (!in.valid() || in.width > 8192 || in.height > 8192)
    fail(SceneErrorKind::OutOfRange, ctx + ": invalid camera intrinsics");
  return cam;
}

json camera_json(const Camera& c) {
  const Quat& q = c.pose.rotation;
  return {{"position", vec_json(c.pose.translation)},
          {"rotation", json::array({q.w, q.x, q.y, q.z})},
          {"width", c.intrinsics.width},
          {"height", c.intrinsics.height},
          {"horizontal_fov", c.intrinsics.horizontal_fov},
          {"near", c.intrinsics.near},
          {"far", c.intrinsics.far}};
}

namespace {

std::pair<int, int> line_column(std::string_view doc, std::size_t byte) {
  int line = 1;
  int col = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, doc.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

Scene parse_scene(std::string_view document) {
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(document, e.byte);
    throw SceneError(SceneErrorKind::Syntax,
                     "syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what(),
                     line, col);
  }
  expect_object(root, "scene");
  check_keys(root, {"name", "grid_cell_size", "seed", "environment", "rooms", "events", "cameras"}, "");
  Scene scene;
  if (root.contains("name")) scene.name = as_string(root["name"], "name");
  if (scene.name.empty() || scene.name.find_first_of("/\\") != std::string::npos || scene.name == "." ||
      scene.name == "..")
    fail(SceneErrorKind::OutOfRange, "name: must be a non-empty file-name-safe string");
  scene.grid_cell_size = get_double(root, "grid_cell_size", "", scene.grid_cell_size);
  if (!(scene.grid_cell_size >= 2 * kHalf))
    fail(SceneErrorKind::OutOfRange, "grid_cell_size: must be >= 4 m (room width)");
  if (root.contains("seed")) scene.seed = as_seed(root["seed"], "seed");
  if (root.contains("environment")) scene.environment = parse_environment(root["environment"], "environment");

  auto array_of = [&](const char* key) -> const json* {
    auto it = root.find(key);
    if (it == root.end()) return nullptr;
    if (!it->is_array()) fail(SceneErrorKind::TypeMismatch, std::string(key) + ": expected an array");
    return &*it;
  };
  if (const json* rooms = array_of("rooms"))
    for (std::size_t i = 0; i < rooms->size(); ++i)
      scene.rooms.push_back(parse_room((*rooms)[i], "rooms[" + std::to_string(i) + "]"));
  if (const json* events = array_of("events"))
    for (std::size_t i = 0; i < events->size(); ++i)
      scene.events.push_back(parse_event((*events)[i], "events[" + std::to_string(i) + "]"));
  if (const json* cams = array_of("cameras"))
    for (std::size_t i = 0; i < cams->size(); ++i)
      scene.cameras.push_back(parse_camera((*cams)[i], "cameras[" + std::to_string(i) + "]"));
  check_overlaps(scene);
  return scene;
}

std::string serialize_scene(const Scene& scene, int indent) {
  json rooms = json::array();
  for (const auto& r : scene.rooms) rooms.push_back(room_json(r));
  json events = json::array();
  for (const auto& e : scene.events) events.push_back(event_json(e));
  json cams = json::array();
  for (const auto& c : scene.cameras) cams.push_back(camera_json(c));
  const json root = {{"name", scene.name},
                     {"grid_cell_size", scene.grid_cell_size},
                     {"seed", scene.seed},
                     {"environment", environment_json(scene.environment)},
                     {"rooms", rooms},
                     {"events", events},
                     {"cameras", cams}};
  return root.dump(indent);
}

std::string scene_hash(const Scene& scene) {
  const std::string canonical = serialize_scene(scene, -1);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rubble
