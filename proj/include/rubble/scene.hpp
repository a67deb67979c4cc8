#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rubble/camera.hpp"
#include "rubble/collection.hpp"
#include "rubble/events.hpp"
#include "rubble/fracture.hpp"
#include "rubble/physics.hpp"
#include "rubble/semantics.hpp"

namespace rubble {

using GridCell = std::array<int, 2>;

struct RoomInstance {
  Archetype archetype = Archetype::SimpleDoor;
  GridCell grid_position{0, 0};
  int rotation = 0;  // degrees: 0, 90, 180 or 270, counter-clockwise seen from above
  Material material = Material::preset(MaterialKind::Concrete);
  std::optional<FracturePattern> pattern_override;
  std::optional<std::uint64_t> seed;  // derived from the scene seed when absent

  bool operator==(const RoomInstance&) const = default;
};

struct Fog {
  double density = 0.05;  // 1/m
  bool operator==(const Fog&) const = default;
};
struct Rain {
  double intensity = 0.5;  // 0..1
  bool operator==(const Rain&) const = default;
};
struct Sunshine {
  bool operator==(const Sunshine&) const = default;
};
using Weather = std::variant<Sunshine, Fog, Rain>;

struct EnvironmentConfig {
  Weather weather = Sunshine{};
  double time_of_day = 12.0;  // hours in [0, 24)
  bool operator==(const EnvironmentConfig&) const = default;
};

struct Scene {
  std::string name = "scene";
  double grid_cell_size = 5.0;  // m
  std::uint64_t seed = 0;
  std::vector<RoomInstance> rooms;
  std::vector<DestructionEvent> events;
  EnvironmentConfig environment;
  std::vector<Camera> cameras;

  bool operator==(const Scene&) const = default;
};

enum class SceneErrorKind {
  Syntax,
  UnknownKey,
  MissingKey,
  TypeMismatch,
  OutOfRange,
  UnknownArchetype,
  UnknownMaterial,
  UnknownEventType,
  UnknownPattern,
  Overlap,
  Fracture,
};

std::string_view to_string(SceneErrorKind kind);

class SceneError : public std::runtime_error {
 public:
  SceneError(SceneErrorKind kind, const std::string& message, int line = 0, int column = 0);

  SceneErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  SceneErrorKind kind_;
  int line_;
  int column_;
};

/// Parses and validates a scene document. Throws SceneError.
Scene parse_scene(std::string_view document);

/// Canonical JSON; every default written out explicitly. indent < 0 gives a single line.
std::string serialize_scene(const Scene& scene, int indent = 2);

/// 16 hex digits of FNV-1a over the single-line canonical form.
std::string scene_hash(const Scene& scene);

/// Throws SceneError{Overlap} naming both rooms when two footprints share a cell.
void check_overlaps(const Scene& scene);

/// Archetype solids in the room's local frame: the room is centered on the origin, the floor
/// sits on y = 0, and all solids are axis-aligned slabs.
std::vector<ConvexPolyhedron> archetype_solids(Archetype archetype);

/// Cells an archetype occupies relative to its grid position, before rotation.
std::vector<GridCell> archetype_footprint(Archetype archetype);

/// Footprint cells after rotation, in absolute grid coordinates.
std::vector<GridCell> room_cells(const RoomInstance& room);

/// Local-to-world transform of a room (exact for the four quarter turns).
Vec3 room_to_world(const RoomInstance& room, double cell_size, const Vec3& local);

std::uint64_t room_seed(const Scene& scene, const RoomInstance& room);

/// Transforms, fractures and assembles every room into one collection each. No bodies yet.
WorldState instantiate(const Scene& scene);

}  // namespace rubble
