#include "rubble/collection.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace rubble {

Material Material::preset(MaterialKind kind) {
  switch (kind) {
    case MaterialKind::Brick:
      return {kind, 1900.0, 8.0, Brick::running_bond({1.0, 0.65, 0.2})};
    case MaterialKind::Wood:
      return {kind, 600.0, 4.0,
              Planar{{{{1, 0, 0}, 0.0}, {{0, 1, 0}, 0.0}, {{0, 0, 1}, 0.0}}, 0.15, 0}};
    case MaterialKind::Concrete:
    default:
      return {MaterialKind::Concrete, 2400.0, 15.0, UniformVoronoi{12, 0}};
  }
}

std::size_t GeometryCollection::broken_joint_count() const {
  return static_cast<std::size_t>(
      std::count_if(joints.begin(), joints.end(), [](const Joint& j) { return j.broken; }));
}

std::size_t GeometryCollection::released_count() const {
  return static_cast<std::size_t>(std::count_if(
      fragments.begin(), fragments.end(), [](const Fragment& f) { return f.released; }));
}

namespace {

bool touches_ground(const ConvexPolyhedron& poly, double ground_y) {
  for (std::size_t f = 0; f < poly.faces.size(); ++f) {
    const HalfSpace plane = face_plane(poly, f);
    if (plane.normal.y > -1.0 + tol::kAntiAligned) continue;
    bool on_ground = true;
    for (int idx : poly.faces[f]) {
      if (std::abs(poly.vertices[static_cast<std::size_t>(idx)].y - ground_y) > tol::kCoplanar) {
        on_ground = false;
        break;
      }
    }
    if (on_ground) return true;
  }
  return false;
}

void release(GeometryCollection& gc, int fragment) {
  gc.fragments[static_cast<std::size_t>(fragment)].released = true;
  for (int j : gc.adjacency[static_cast<std::size_t>(fragment)])
    gc.joints[static_cast<std::size_t>(j)].broken = true;
}

}  // namespace

GeometryCollection build_collection(std::span<const FractureResult> results,
                                    const Material& material, int room_id, Archetype archetype,
                                    const CollectionOptions& options) {
  GeometryCollection gc;
  gc.room_id = room_id;
  gc.archetype = archetype;
  gc.material = material;
  for (const auto& result : results) {
    for (const auto& poly : result.fragments) {
      Fragment frag;
      frag.polyhedron = poly;
      frag.material = material.kind;
      frag.room_id = room_id;
      frag.source_solid_id = result.source_solid_id;
      frag.anchored = touches_ground(poly, options.ground_y);
      frag.volume = volume(poly);
      frag.centroid = centroid(poly);
      gc.fragments.push_back(std::move(frag));
    }
  }
  const std::size_t n = gc.fragments.size();
  gc.adjacency.assign(n, {});
  std::vector<Aabb> boxes;
  boxes.reserve(n);
  for (const auto& f : gc.fragments) boxes.push_back(bounds(f.polyhedron));

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!boxes[a].overlaps(boxes[b], tol::kCoplanar)) continue;
      const ContactPatch patch =
          contact_patch(gc.fragments[a].polyhedron, gc.fragments[b].polyhedron);
      if (patch.area <= options.min_joint_area) continue;
      const int id = static_cast<int>(gc.joints.size());
      gc.joints.push_back({static_cast<int>(a), static_cast<int>(b), patch.area, patch.centroid,
                           material.strain_threshold, 0.0, false});
      gc.adjacency[a].push_back(id);
      gc.adjacency[b].push_back(id);
    }
  }
  return gc;
}

std::vector<int> apply_strain(GeometryCollection& gc, std::span<const double> strain) {
  if (strain.size() != gc.joints.size())
    throw std::invalid_argument("apply_strain: strain field size does not match joint count");
  for (std::size_t j = 0; j < gc.joints.size(); ++j) {
    if (!(strain[j] >= 0.0)) throw std::invalid_argument("apply_strain: negative strain");
    gc.joints[j].accumulated_strain += strain[j];
  }
  // Exceedance is judged on the joint state before this call, so the outcome does not depend on
  // the order in which releases break joints.
  std::vector<char> exceeded(gc.joints.size(), 0);
  for (std::size_t j = 0; j < gc.joints.size(); ++j) {
    const Joint& joint = gc.joints[j];
    exceeded[j] = !joint.broken && joint.accumulated_strain > joint.threshold;
  }
  std::vector<int> released;
  for (std::size_t f = 0; f < gc.fragments.size(); ++f) {
    if (gc.fragments[f].released) continue;
    const auto& incident = gc.adjacency[f];
    if (std::any_of(incident.begin(), incident.end(),
                    [&](int j) { return exceeded[static_cast<std::size_t>(j)] != 0; }))
      released.push_back(static_cast<int>(f));
  }
  for (int f : released) release(gc, f);
  return released;
}

std::vector<int> structural_support_pass(GeometryCollection& gc) {
  const std::size_t n = gc.fragments.size();
  std::vector<char> supported(n, 0);
  std::deque<int> queue;
  for (std::size_t f = 0; f < n; ++f) {
    if (gc.fragments[f].anchored && !gc.fragments[f].released) {
      supported[f] = 1;
      queue.push_back(static_cast<int>(f));
    }
  }
  while (!queue.empty()) {
    const int f = queue.front();
    queue.pop_front();
    for (int j : gc.adjacency[static_cast<std::size_t>(f)]) {
      if (gc.joints[static_cast<std::size_t>(j)].broken) continue;
      const int g = gc.other_end(j, f);
      if (supported[static_cast<std::size_t>(g)] || gc.fragments[static_cast<std::size_t>(g)].released)
        continue;
      supported[static_cast<std::size_t>(g)] = 1;
      queue.push_back(g);
    }
  }
  std::vector<int> released;
  for (std::size_t f = 0; f < n; ++f) {
    if (!gc.fragments[f].released && !supported[f]) released.push_back(static_cast<int>(f));
  }
  for (int f : released) release(gc, f);
  return released;
}

void reset_strain(GeometryCollection& gc) {
  for (auto& j : gc.joints) j.accumulated_strain = 0.0;
}

}  // namespace rubble
