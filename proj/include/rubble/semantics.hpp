#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rubble {

enum class MaterialKind : std::uint8_t { Brick = 0, Concrete = 1, Wood = 2 };
enum class Archetype : std::uint8_t { SimpleDoor = 0, LShapedWindow = 1, PillarRoom = 2, BeamRoom = 3 };

inline constexpr std::array<std::string_view, 3> kMaterialNames = {"brick", "concrete", "wood"};
inline constexpr std::array<std::string_view, 4> kArchetypeNames = {
    "simple_door", "l_shaped_window", "pillar_room", "beam_room"};

std::string_view to_string(MaterialKind m);
std::string_view to_string(Archetype a);
std::optional<MaterialKind> parse_material_kind(std::string_view name);
std::optional<Archetype> parse_archetype(std::string_view name);

/// Segmentation label of a fragment. Label 0 is background; classes are numbered
///   1 + 6 * archetype + 2 * material + (released ? 1 : 0)
/// giving labels 1..24.
constexpr std::uint16_t semantic_label(Archetype a, MaterialKind m, bool released) {
  return static_cast<std::uint16_t>(1 + 6 * static_cast<int>(a) + 2 * static_cast<int>(m) +
                                    (released ? 1 : 0));
}
inline constexpr std::uint16_t kMaxSemanticLabel = 24;

struct SemanticClass {
  std::uint16_t label;
  Archetype archetype;
  MaterialKind material;
  bool released;
  std::string name;  // e.g. "pillar_room/concrete/released"
};

/// All 24 non-background classes in label order.
std::vector<SemanticClass> semantic_class_table();

}  // namespace rubble
