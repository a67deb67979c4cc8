#include <gtest/gtest.h>

#include "rubble/scene.hpp"
#include "test_util.hpp"

using namespace rubble;

namespace {

SceneErrorKind error_kind(const std::string& doc) {
  try {
    parse_scene(doc);
  } catch (const SceneError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "document parsed: " << doc;
  return SceneErrorKind::Syntax;
}

const char* kMinimal = R"({"rooms": [{"archetype": "simple_door", "position": [0, 0]}]})";

}  // namespace

TEST(Scene, SampleRoundTripsExactly) {
  for (const char* name : {"sample_4room.json", "two_room.json"}) {
    const Scene a = parse_scene(read_text(scene_path(name)));
    const std::string text = serialize_scene(a);
    const Scene b = parse_scene(text);
    EXPECT_EQ(a, b) << name;
    EXPECT_EQ(serialize_scene(b), text);
    EXPECT_EQ(scene_hash(a), scene_hash(b));
  }
}

TEST(Scene, SampleContents) {
  const Scene s = parse_scene(read_text(scene_path("sample_4room.json")));
  EXPECT_EQ(s.name, "sample_4room");
  EXPECT_EQ(s.seed, 42u);
  ASSERT_EQ(s.rooms.size(), 4u);
  EXPECT_EQ(s.rooms[1].archetype, Archetype::LShapedWindow);
  EXPECT_EQ(s.rooms[3].material.kind, MaterialKind::Wood);
  EXPECT_EQ(s.rooms[2].rotation, 180);
  ASSERT_EQ(s.events.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<Explosion>(s.events[0]));
  ASSERT_EQ(s.cameras.size(), 2u);
  EXPECT_EQ(s.cameras[0].intrinsics.width, 320);
}

TEST(Scene, DefaultsAreFilledIn) {
  const Scene s = parse_scene(kMinimal);
  EXPECT_EQ(s.grid_cell_size, 5.0);
  EXPECT_EQ(s.rooms[0].rotation, 0);
  EXPECT_EQ(s.rooms[0].material, Material::preset(MaterialKind::Concrete));
  EXPECT_EQ(s.environment.time_of_day, 12.0);
  EXPECT_TRUE(std::holds_alternative<Sunshine>(s.environment.weather));
}

TEST(Scene, DistinctErrorKinds) {
  EXPECT_EQ(error_kind(R"({"rooms": [)"), SceneErrorKind::Syntax);
  EXPECT_EQ(error_kind(R"({"roms": []})"), SceneErrorKind::UnknownKey);
  EXPECT_EQ(error_kind(R"({"rooms": [{"archetype": "simple_door", "position": [0, 0], "colour": 1}]})"),
            SceneErrorKind::UnknownKey);
  EXPECT_EQ(error_kind(R"({"rooms": [{"archetype": "simple_door"}]})"), SceneErrorKind::MissingKey);
  EXPECT_EQ(error_kind(R"({"seed": "x"})"), SceneErrorKind::TypeMismatch);
  EXPECT_EQ(error_kind(R"({"rooms": [{"archetype": "simple_door", "position": [0, 0], "rotation": 45}]})"),
            SceneErrorKind::OutOfRange);
  EXPECT_EQ(error_kind(R"({"rooms": [{"archetype": "castle", "position": [0, 0]}]})"),
            SceneErrorKind::UnknownArchetype);
  EXPECT_EQ(error_kind(R"({"rooms": [{"archetype": "simple_door", "position": [0, 0], "material": "glass"}]})"),
            SceneErrorKind::UnknownMaterial);
  EXPECT_EQ(error_kind(R"({"events": [{"type": "meteor"}]})"), SceneErrorKind::UnknownEventType);
  EXPECT_EQ(error_kind(R"({"rooms": [{"archetype": "simple_door", "position": [0, 0], "pattern": {"type": "shatter"}}]})"),
            SceneErrorKind::UnknownPattern);
  EXPECT_EQ(error_kind(R"({"rooms": [{"archetype": "simple_door", "position": [0, 0]},
                                     {"archetype": "beam_room", "position": [0, 0]}]})"),
            SceneErrorKind::Overlap);
}

TEST(Scene, SyntaxErrorsCarryPosition) {
  try {
    parse_scene("{\n  \"seed\": 1,\n  oops\n}");
    FAIL();
  } catch (const SceneError& e) {
    EXPECT_EQ(e.kind(), SceneErrorKind::Syntax);
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 0);
  }
}

TEST(Scene, OverlapNamesBothRooms) {
  try {
    parse_scene(R"({"rooms": [{"archetype": "simple_door", "position": [2, 3]},
                             {"archetype": "pillar_room", "position": [1, 1]},
                             {"archetype": "beam_room", "position": [2, 3]}]})");
    FAIL();
  } catch (const SceneError& e) {
    EXPECT_EQ(e.kind(), SceneErrorKind::Overlap);
    EXPECT_NE(std::string(e.what()).find("rooms 0 and 2"), std::string::npos) << e.what();
  }
}

TEST(Scene, EnumSpellings) {
  for (auto name : kArchetypeNames) EXPECT_EQ(to_string(*parse_archetype(name)), name);
  for (auto name : kMaterialNames) EXPECT_EQ(to_string(*parse_material_kind(name)), name);
  EXPECT_EQ(to_string(SceneErrorKind::UnknownKey), "unknown_key");
  EXPECT_EQ(to_string(SceneErrorKind::Overlap), "overlap");
}

TEST(Scene, RoomPlacementIsExactQuarterTurns) {
  RoomInstance r;
  r.grid_position = {1, 2};
  r.rotation = 90;
  const Vec3 p = room_to_world(r, 5.0, {1.0, 0.5, 0.0});
  EXPECT_EQ(p, (Vec3{7.5, 0.5, 11.5}));
  r.rotation = 180;
  EXPECT_EQ(room_to_world(r, 5.0, {1.0, 0.5, 0.0}), (Vec3{6.5, 0.5, 12.5}));
  EXPECT_EQ(room_cells(r), (std::vector<GridCell>{{1, 2}}));
}

TEST(Scene, ArchetypesFitInOneCell) {
  for (int a = 0; a < 4; ++a) {
    const auto solids = archetype_solids(static_cast<Archetype>(a));
    ASSERT_FALSE(solids.empty());
    Aabb box;
    for (const auto& s : solids) {
      EXPECT_TRUE(is_valid(s));
      box.expand(bounds(s));
    }
    EXPECT_GE(box.min.x, -2.0 - 1e-12);
    EXPECT_LE(box.max.x, 2.0 + 1e-12);
    EXPECT_EQ(box.min.y, 0.0);
    // Solids of one archetype do not overlap.
    for (std::size_t i = 0; i < solids.size(); ++i)
      for (std::size_t j = i + 1; j < solids.size(); ++j) {
        const Vec3 c = centroid(solids[i]);
        EXPECT_LT(interior_depth(solids[j], c), 1e-9);
      }
  }
}

TEST(Scene, InstantiateConservesVolumeAndIsDeterministic) {
  const Scene s = parse_scene(read_text(scene_path("two_room.json")));
  const WorldState a = instantiate(s);
  const WorldState b = instantiate(s);
  ASSERT_EQ(a.collections.size(), 2u);
  for (std::size_t r = 0; r < a.collections.size(); ++r) {
    double frag = 0.0, solid = 0.0;
    for (const auto& f : a.collections[r].fragments) frag += f.volume;
    for (const auto& p : archetype_solids(s.rooms[r].archetype)) solid += volume(p);
    EXPECT_NEAR(frag, solid, 1e-6 * solid);
    ASSERT_EQ(a.collections[r].fragments.size(), b.collections[r].fragments.size());
    for (std::size_t f = 0; f < a.collections[r].fragments.size(); ++f)
      EXPECT_EQ(a.collections[r].fragments[f].polyhedron, b.collections[r].fragments[f].polyhedron);
    std::size_t anchored = 0;
    for (const auto& f : a.collections[r].fragments) anchored += f.anchored;
    EXPECT_GT(anchored, 0u);
    EXPECT_TRUE(a.bodies.empty());
  }
}

TEST(Scene, RoomSeedsDifferAndRespectOverride) {
  Scene s = parse_scene(read_text(scene_path("sample_4room.json")));
  EXPECT_NE(room_seed(s, s.rooms[0]), room_seed(s, s.rooms[1]));
  s.rooms[0].seed = 123;
  EXPECT_EQ(room_seed(s, s.rooms[0]), 123u);
}

TEST(Scene, HashIsStableHex) {
  const Scene s = parse_scene(kMinimal);
  const auto h = scene_hash(s);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, scene_hash(parse_scene(serialize_scene(s, -1))));
  Scene t = s;
  t.seed = 1;
  EXPECT_NE(h, scene_hash(t));
}
