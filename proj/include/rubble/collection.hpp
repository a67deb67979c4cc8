#pragma once

#include <span>
#include <vector>

#include "rubble/fracture.hpp"
#include "rubble/geometry.hpp"
#include "rubble/semantics.hpp"

namespace rubble {

struct Material {
  MaterialKind kind = MaterialKind::Concrete;
  double density = 2400.0;         // kg/m^3
  double strain_threshold = 15.0;  // T_s
  FracturePattern default_pattern = UniformVoronoi{};

  /// Built-in defaults: wood T_s 4, brick 8, concrete 15.
  static Material preset(MaterialKind kind);

  bool operator==(const Material&) const = default;
};

struct Fragment {
  ConvexPolyhedron polyhedron;  // world frame at build time
  MaterialKind material = MaterialKind::Concrete;
  int room_id = 0;
  int source_solid_id = 0;
  bool anchored = false;
  bool released = false;
  double volume = 0.0;
  Vec3 centroid;
};

struct Joint {
  int frag_a = 0;
  int frag_b = 0;
  double contact_area = 0.0;
  Vec3 position;  // centroid of the contact patch
  double threshold = 0.0;
  double accumulated_strain = 0.0;
  bool broken = false;
};

struct CollectionOptions {
  double min_joint_area = 1e-4;  // m^2
  double ground_y = 0.0;
};

/// One room's fragments plus the joint graph connecting abutting fragments.
struct GeometryCollection {
  int room_id = 0;
  Archetype archetype = Archetype::SimpleDoor;
  Material material;
  std::vector<Fragment> fragments;
  std::vector<Joint> joints;
  std::vector<std::vector<int>> adjacency;  // fragment -> incident joint ids, ascending

  int other_end(int joint, int fragment) const {
    const Joint& j = joints[static_cast<std::size_t>(joint)];
    return j.frag_a == fragment ? j.frag_b : j.frag_a;
  }
  std::size_t broken_joint_count() const;
  std::size_t released_count() const;
};

GeometryCollection build_collection(std::span<const FractureResult> results,
                                    const Material& material, int room_id = 0,
                                    Archetype archetype = Archetype::SimpleDoor,
                                    const CollectionOptions& options = {});

/// Adds strain[j] to joint j's accumulator, then releases every fragment that has an
/// initially-unbroken joint whose accumulated strain is strictly above its threshold. All joints
/// of a released fragment break. Returns the newly released fragment ids, ascending.
/// strain.size() must equal joints.size(); values must be >= 0.
std::vector<int> apply_strain(GeometryCollection& gc, std::span<const double> strain);

/// Releases every unreleased fragment that has no path of unbroken joints to an anchored,
/// unreleased fragment. Returns the newly released ids, ascending.
std::vector<int> structural_support_pass(GeometryCollection& gc);

/// Zeroes every accumulator; broken flags are kept.
void reset_strain(GeometryCollection& gc);

}  // namespace rubble
