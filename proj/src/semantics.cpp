#include "rubble/semantics.hpp"

namespace rubble {

std::string_view to_string(MaterialKind m) { return kMaterialNames[static_cast<std::size_t>(m)]; }
std::string_view to_string(Archetype a) { return kArchetypeNames[static_cast<std::size_t>(a)]; }

std::optional<MaterialKind> parse_material_kind(std::string_view name) {
  for (std::size_t i = 0; i < kMaterialNames.size(); ++i)
    if (kMaterialNames[i] == name) return static_cast<MaterialKind>(i);
  return std::nullopt;
}

std::optional<Archetype> parse_archetype(std::string_view name) {
  for (std::size_t i = 0; i < kArchetypeNames.size(); ++i)
    if (kArchetypeNames[i] == name) return static_cast<Archetype>(i);
  return std::nullopt;
}

std::vector<SemanticClass> semantic_class_table() {
  std::vector<SemanticClass> table;
  for (std::size_t a = 0; a < kArchetypeNames.size(); ++a)
    for (std::size_t m = 0; m < kMaterialNames.size(); ++m)
      for (int released = 0; released < 2; ++released) {
        const auto arch = static_cast<Archetype>(a);
        const auto mat = static_cast<MaterialKind>(m);
        table.push_back({semantic_label(arch, mat, released != 0), arch, mat, released != 0,
                         std::string(kArchetypeNames[a]) + "/" + std::string(kMaterialNames[m]) +
                             (released ? "/released" : "/intact")});
      }
  return table;
}

}  // namespace rubble
