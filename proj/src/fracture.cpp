#include "rubble/fracture.hpp"

#include <algorithm>
#include <cmath>

#include "rubble/random.hpp"

namespace rubble {

namespace {

struct PatternValidator {
  void operator()(const UniformVoronoi& p) const {
    if (p.site_count < 1) throw std::invalid_argument("uniform_voronoi: site_count must be >= 1");
  }
  void operator()(const Planar& p) const {
    if (!(p.jitter_amplitude >= 0.0) || !std::isfinite(p.jitter_amplitude))
      throw std::invalid_argument("planar: jitter_amplitude must be >= 0");
    for (const auto& plane : p.planes) {
      if (!is_finite(plane.normal) || std::abs(norm(plane.normal) - 1.0) > 1e-9 ||
          !std::isfinite(plane.offset))
        throw std::invalid_argument("planar: plane normals must be unit length");
    }
  }
  void operator()(const Brick& p) const {
    if (!(p.brick_dims.x > 0 && p.brick_dims.y > 0 && p.brick_dims.z > 0) ||
        !is_finite(p.brick_dims))
      throw std::invalid_argument("brick: brick_dims must be positive");
    if (!std::isfinite(p.row_offset)) throw std::invalid_argument("brick: row_offset not finite");
  }
};

// Intersects the solid with every half-space in turn.
std::optional<ConvexPolyhedron> clip_all(const ConvexPolyhedron& solid,
                                         const std::vector<HalfSpace>& cuts) {
  std::optional<ConvexPolyhedron> piece = solid;
  for (const auto& hs : cuts) {
    piece = clip_convex(*piece, hs);
    if (!piece) return std::nullopt;
  }
  return piece;
}

std::vector<ConvexPolyhedron> fracture_voronoi(const ConvexPolyhedron& solid,
                                               const UniformVoronoi& p) {
  const VoronoiSites sites = sample_sites(solid, p.site_count, p.seed);
  std::vector<ConvexPolyhedron> cells;
  for (std::size_t i = 0; i < sites.sites.size(); ++i) {
    if (auto cell = voronoi_cell(i, sites, solid)) cells.push_back(std::move(*cell));
  }
  return cells;
}

std::vector<ConvexPolyhedron> fracture_planar(const ConvexPolyhedron& solid, const Planar& p) {
  const Vec3 center = bounds(solid).center();
  SplitMix64 rng(p.seed);
  std::vector<ConvexPolyhedron> pieces{solid};
  for (const auto& plane : p.planes) {
    const double jitter = p.jitter_amplitude * (2.0 * rng.uniform() - 1.0);
    const HalfSpace cut{plane.normal, dot(plane.normal, center) + plane.offset + jitter};
    std::vector<ConvexPolyhedron> next;
    for (const auto& piece : pieces) {
      if (auto inside = clip_convex(piece, cut)) next.push_back(std::move(*inside));
      if (auto outside = clip_convex(piece, cut.complement())) next.push_back(std::move(*outside));
    }
    pieces = std::move(next);
  }
  return pieces;
}

Vec3 axis_vector(int axis) {
  Vec3 v;
  v[axis] = 1.0;
  return v;
}

std::vector<ConvexPolyhedron> fracture_brick(const ConvexPolyhedron& solid, const Brick& p) {
  const Aabb box = bounds(solid);
  const Vec3 ext = box.extent();
  // The thinnest extent carries the brick depth. Height runs along y unless y is the depth axis,
  // in which case length runs along x and height along z.
  int depth_axis = 0;
  for (int a = 1; a < 3; ++a)
    if (ext[a] < ext[depth_axis]) depth_axis = a;
  int length_axis = 0;
  int height_axis = 1;
  if (depth_axis == 1) {
    length_axis = 0;
    height_axis = 2;
  } else {
    length_axis = depth_axis == 0 ? 2 : 0;
    height_axis = 1;
  }
  const double len = p.brick_dims.x;
  const double hgt = p.brick_dims.y;
  const double dep = p.brick_dims.z;
  auto count = [](double span, double step) {
    return std::max(1, static_cast<int>(std::ceil(span / step - 1e-9)));
  };
  const int rows = count(ext[height_axis], hgt);
  const int layers = count(ext[depth_axis], dep);

  std::vector<ConvexPolyhedron> bricks;
  for (int layer = 0; layer < layers; ++layer) {
    const double d0 = box.min[depth_axis] + layer * dep;
    for (int row = 0; row < rows; ++row) {
      const double h0 = box.min[height_axis] + row * hgt;
      double shift = (row % 2 == 1) ? std::fmod(p.row_offset, len) : 0.0;
      if (shift < 0) shift += len;
      const double l_start = box.min[length_axis] - shift;
      const int cols = count(box.max[length_axis] - l_start, len);
      for (int col = 0; col < cols; ++col) {
        const double l0 = l_start + col * len;
        std::vector<HalfSpace> cuts;
        const std::pair<int, std::pair<double, double>> spans[] = {
            {length_axis, {l0, l0 + len}}, {height_axis, {h0, h0 + hgt}}, {depth_axis, {d0, d0 + dep}}};
        for (const auto& [axis, range] : spans) {
          const Vec3 n = axis_vector(axis);
          cuts.push_back({-n, -range.first});
          cuts.push_back({n, range.second});
        }
        if (auto piece = clip_all(solid, cuts)) bricks.push_back(std::move(*piece));
      }
    }
  }
  return bricks;
}

}  // namespace

void validate_pattern(const FracturePattern& pattern) { std::visit(PatternValidator{}, pattern); }

std::optional<ConvexPolyhedron> voronoi_cell(std::size_t i, const VoronoiSites& sites,
                                             const ConvexPolyhedron& bounds) {
  const Vec3& own = sites.sites.at(i);
  std::optional<ConvexPolyhedron> cell = bounds;
  for (std::size_t j = 0; j < sites.sites.size() && cell; ++j) {
    if (j == i) continue;
    const Vec3& other = sites.sites[j];
    const Vec3 delta = other - own;
    if (norm2(delta) == 0.0) continue;  // coincident sites share the cell
    cell = clip_convex(*cell, HalfSpace::through(delta, (own + other) * 0.5));
  }
  return cell;
}

VoronoiSites sample_sites(const ConvexPolyhedron& solid, int count, std::uint64_t seed) {
  const Aabb box = bounds(solid);
  SplitMix64 rng(seed);
  VoronoiSites out;
  out.seed = seed;
  const long max_draws = 1000L * std::max(count, 1);
  for (long draw = 0; draw < max_draws && static_cast<int>(out.sites.size()) < count; ++draw) {
    const double x = rng.uniform(box.min.x, box.max.x);
    const double y = rng.uniform(box.min.y, box.max.y);
    const double z = rng.uniform(box.min.z, box.max.z);
    const Vec3 p{x, y, z};
    if (contains(solid, p)) out.sites.push_back(p);
  }
  if (static_cast<int>(out.sites.size()) < count)
    throw FractureError("could not place Voronoi sites inside solid");
  return out;
}

FractureResult fracture_solid(const ConvexPolyhedron& solid, const FracturePattern& pattern,
                              int source_solid_id) {
  validate_pattern(pattern);
  FractureResult result;
  result.source_solid_id = source_solid_id;
  result.source_volume = solid.faces.empty() ? 0.0 : volume(solid);
  if (result.source_volume < tol::kSliverVolume)
    throw FractureError("solid " + std::to_string(source_solid_id) + " is empty");

  result.fragments = std::visit(
      [&](const auto& p) -> std::vector<ConvexPolyhedron> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformVoronoi>) return fracture_voronoi(solid, p);
        else if constexpr (std::is_same_v<T, Planar>) return fracture_planar(solid, p);
        else return fracture_brick(solid, p);
      },
      pattern);
  if (result.fragments.empty())
    throw FractureError("solid " + std::to_string(source_solid_id) +
                        ": pattern produced no fragments");
  double kept = 0.0;
  for (const auto& f : result.fragments) kept += volume(f);
  result.discarded_volume = std::max(0.0, result.source_volume - kept);
  return result;
}

FracturePattern with_salted_seed(const FracturePattern& pattern, std::uint64_t salt) {
  FracturePattern out = pattern;
  if (auto* v = std::get_if<UniformVoronoi>(&out)) v->seed = mix_seed({v->seed, salt});
  if (auto* p = std::get_if<Planar>(&out)) p->seed = mix_seed({p->seed, salt});
  return out;
}

}  // namespace rubble
