#pragma once

#include <string>
#include <variant>
#include <vector>

#include "rubble/collection.hpp"
#include "rubble/geometry.hpp"
#include "rubble/physics.hpp"

namespace rubble {

/// Constant strain M on every joint (earthquake).
struct UniversalStrain {
  double magnitude = 0.0;
  bool operator==(const UniversalStrain&) const = default;
};

enum class Falloff { Linear, Squared };

/// Strain M_s / d^2 (or M_s / d) inside radius R of the center, plus an outward impulse of
/// magnitude M_f on every fragment the strain releases.
struct Explosion {
  Vec3 center;
  double strain_magnitude = 0.0;
  double force_magnitude = 0.0;  // N*s
  double radius = 1.0;
  Falloff falloff = Falloff::Squared;
  bool operator==(const Explosion&) const = default;
};

/// M per step for `duration` steps on joints inside a sphere.
struct StrainBuildup {
  Vec3 center;
  double radius = 1.0;
  double per_step_magnitude = 0.0;
  int duration = 1;
  bool operator==(const StrainBuildup&) const = default;
};

using DestructionEvent = std::variant<UniversalStrain, Explosion, StrainBuildup>;

/// Throws std::invalid_argument on negative magnitudes, R <= 0 or duration < 1.
void validate_event(const DestructionEvent& e);

/// Explosion distances are clamped below by this value.
inline constexpr double kMinExplosionDistance = 0.01;  // m

std::vector<double> strain_field_universal(const UniversalStrain& e, const GeometryCollection& gc);
std::vector<double> strain_field_explosion(const Explosion& e, const GeometryCollection& gc);

/// Strain one joint at `position` receives from the explosion.
double explosion_strain_at(const Explosion& e, const Vec3& position);

/// Impulse on a fragment whose centroid is `fragment_centroid`. Zero unless the fragment was
/// released by this explosion's strain and lies within R; zero (with a logged warning) when
/// the centroid coincides with the center.
Vec3 explosion_impulse(const Explosion& e, const Vec3& fragment_centroid,
                       bool released_by_event);

/// Increment for step t in [0, duration). Throws std::out_of_range otherwise.
std::vector<double> strain_buildup_step(const StrainBuildup& e, const GeometryCollection& gc,
                                        int t);

struct EventReport {
  std::vector<FragmentRef> released;  // ascending
  std::size_t broken_joints = 0;      // joints broken during this event
  bool settled = true;                // physics settle outcome (true when nothing moved)
  std::vector<std::string> warnings;

  bool operator==(const EventReport&) const = default;
};

/// Runs one event against the world: strain, release, impulses, support pass, physics.
/// Strain accumulators are reset first.
EventReport apply_event(WorldState& world, const DestructionEvent& e);

}  // namespace rubble
