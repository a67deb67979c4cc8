#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rubble/geometry.hpp"

namespace rubble {

struct VoronoiSites {
  std::vector<Vec3> sites;
  std::uint64_t seed = 0;
};

/// Seeded random sites in the solid's bounding box.
struct UniformVoronoi {
  int site_count = 8;
  std::uint64_t seed = 0;
  bool operator==(const UniformVoronoi&) const = default;
};

/// Successive cuts by planes. Offsets are measured from the center of the solid's bounding box
/// (offset 0 cuts through the center); each offset is perturbed by up to ±jitter_amplitude.
struct Planar {
  std::vector<HalfSpace> planes;
  double jitter_amplitude = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const Planar&) const = default;
};

/// Running-bond grid. brick_dims = (length, height, depth); alternate rows shift by row_offset.
struct Brick {
  Vec3 brick_dims{0.5, 0.25, 0.2};
  double row_offset = 0.25;

  static Brick running_bond(const Vec3& dims) { return {dims, dims.x * 0.5}; }
  bool operator==(const Brick&) const = default;
};

using FracturePattern = std::variant<UniformVoronoi, Planar, Brick>;

struct FractureResult {
  std::vector<ConvexPolyhedron> fragments;
  int source_solid_id = 0;
  double source_volume = 0.0;
  double discarded_volume = 0.0;  // sliver pieces dropped during clipping
};

class FractureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument for malformed patterns.
void validate_pattern(const FracturePattern& pattern);

/// Cell of site i: bounds clipped by the bisector half-space toward sites[i] for every other
/// site. nullopt when the cell is empty inside bounds.
std::optional<ConvexPolyhedron> voronoi_cell(std::size_t i, const VoronoiSites& sites,
                                             const ConvexPolyhedron& bounds);

/// Draws `count` sites uniformly in the solid's bounding box, rejecting points outside it.
VoronoiSites sample_sites(const ConvexPolyhedron& solid, int count, std::uint64_t seed);

/// Deterministic for equal inputs. Throws FractureError on an empty solid or when no
/// non-sliver fragment survives.
FractureResult fracture_solid(const ConvexPolyhedron& solid, const FracturePattern& pattern,
                              int source_solid_id = 0);

/// Mixes `salt` into the pattern's own seed (Brick has none and is returned unchanged).
FracturePattern with_salted_seed(const FracturePattern& pattern, std::uint64_t salt);

}  // namespace rubble
