#include "rubble/events.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace rubble {

void validate_event(const DestructionEvent& e) {
  auto nonneg = [](double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string(what) + " must be a finite value >= 0");
  };
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string(what) + " must be > 0");
  };
  if (const auto* u = std::get_if<UniversalStrain>(&e)) {
    nonneg(u->magnitude, "magnitude");
  } else if (const auto* x = std::get_if<Explosion>(&e)) {
    nonneg(x->strain_magnitude, "strain_magnitude");
    nonneg(x->force_magnitude, "force_magnitude");
    positive(x->radius, "radius");
    if (!is_finite(x->center)) throw std::invalid_argument("center must be finite");
  } else if (const auto* s = std::get_if<StrainBuildup>(&e)) {
    nonneg(s->per_step_magnitude, "per_step_magnitude");
    positive(s->radius, "radius");
    if (s->duration < 1) throw std::invalid_argument("duration must be >= 1");
    if (!is_finite(s->center)) throw std::invalid_argument("center must be finite");
  }
}

std::vector<double> strain_field_universal(const UniversalStrain& e, const GeometryCollection& gc) {
  return std::vector<double>(gc.joints.size(), e.magnitude);
}

double explosion_strain_at(const Explosion& e, const Vec3& position) {
  const double d = norm(position - e.center);
  if (d > e.radius) return 0.0;
  const double dc = std::max(d, kMinExplosionDistance);
  return e.falloff == Falloff::Squared ? e.strain_magnitude / (dc * dc) : e.strain_magnitude / dc;
}

std::vector<double> strain_field_explosion(const Explosion& e, const GeometryCollection& gc) {
  std::vector<double> field;
  field.reserve(gc.joints.size());
  for (const auto& j : gc.joints) field.push_back(explosion_strain_at(e, j.position));
  return field;
}

Vec3 explosion_impulse(const Explosion& e, const Vec3& fragment_centroid, bool released_by_event) {
  if (!released_by_event) return {};
  const Vec3 offset = fragment_centroid - e.center;
  const double dist = norm(offset);
  if (dist > e.radius) return {};
  if (dist < 1e-9) {
    spdlog::warn("explosion impulse skipped: fragment centroid coincides with the center");
    return {};
  }
  return offset * (e.force_magnitude / dist);
}

std::vector<double> strain_buildup_step(const StrainBuildup& e, const GeometryCollection& gc,
                                        int t) {
  if (t < 0 || t >= e.duration) throw std::out_of_range("strain_buildup_step: step out of range");
  std::vector<double> field;
  field.reserve(gc.joints.size());
  for (const auto& j : gc.joints)
    field.push_back(norm(j.position - e.center) <= e.radius ? e.per_step_magnitude : 0.0);
  return field;
}

namespace {

Aabb world_bounds(const WorldState& world) {
  Aabb box;
  for (const auto& gc : world.collections)
    for (const auto& f : gc.fragments)
      if (!f.released) box.expand(bounds(f.polyhedron));
  for (const auto& b : world.bodies) box.expand(bounds(world_vertices(b)));
  return box;
}

bool sphere_misses(const Aabb& box, const Vec3& center, double radius) {
  if (box.empty()) return true;
  const Vec3 nearest = cwise_max(box.min, cwise_min(center, box.max));
  return norm(nearest - center) > radius;
}

std::size_t total_broken(const WorldState& world) {
  std::size_t n = 0;
  for (const auto& gc : world.collections) n += gc.broken_joint_count();
  return n;
}

void collect(EventReport& report, int collection, const std::vector<int>& fragments) {
  for (int f : fragments) report.released.push_back({collection, f});
}

}  // namespace

EventReport apply_event(WorldState& world, const DestructionEvent& e) {
  validate_event(e);
  EventReport report;
  const Aabb box = world_bounds(world);
  if (const auto* x = std::get_if<Explosion>(&e); x && sphere_misses(box, x->center, x->radius)) {
    report.warnings.push_back("explosion region lies outside the world; event skipped");
  } else if (const auto* s = std::get_if<StrainBuildup>(&e);
             s && sphere_misses(box, s->center, s->radius)) {
    report.warnings.push_back("strain buildup region lies outside the world; event skipped");
  }
  if (!report.warnings.empty()) {
    spdlog::warn(report.warnings.front());
    return report;
  }

  for (auto& gc : world.collections) reset_strain(gc);
  const std::size_t broken_before = total_broken(world);

  auto support_pass = [&](int c) {
    auto orphaned = structural_support_pass(world.collections[static_cast<std::size_t>(c)]);
    spawn_bodies(world, c, orphaned);
    collect(report, c, orphaned);
  };

  if (const auto* s = std::get_if<StrainBuildup>(&e)) {
    for (int t = 0; t < s->duration; ++t) {
      for (std::size_t c = 0; c < world.collections.size(); ++c) {
        auto& gc = world.collections[c];
        const auto field = strain_buildup_step(*s, gc, t);
        const auto released = apply_strain(gc, field);
        spawn_bodies(world, static_cast<int>(c), released);
        collect(report, static_cast<int>(c), released);
        support_pass(static_cast<int>(c));
      }
      for (int k = 0; k < world.config.event_substeps; ++k) step(world, world.config.dt);
    }
    report.settled = kinetic_energy(world) < world.config.settle_energy_eps;
  } else {
    for (std::size_t c = 0; c < world.collections.size(); ++c) {
      auto& gc = world.collections[c];
      const auto field = std::holds_alternative<UniversalStrain>(e)
                             ? strain_field_universal(std::get<UniversalStrain>(e), gc)
                             : strain_field_explosion(std::get<Explosion>(e), gc);
      const auto released = apply_strain(gc, field);
      spawn_bodies(world, static_cast<int>(c), released);
      collect(report, static_cast<int>(c), released);
      if (const auto* x = std::get_if<Explosion>(&e)) {
        for (int f : released) {
          RigidBody* body = world.find_body({static_cast<int>(c), f});
          const Vec3 impulse = explosion_impulse(*x, body->pose.translation, true);
          if (norm2(impulse) > 0.0) apply_impulse(*body, impulse);
        }
      }
      support_pass(static_cast<int>(c));
    }
    report.settled = settle(world).settled;
  }
  std::sort(report.released.begin(), report.released.end());
  report.broken_joints = total_broken(world) - broken_before;
  return report;
}

}  // namespace rubble
