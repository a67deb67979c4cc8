#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rubble/collection.hpp"
#include "rubble/geometry.hpp"

namespace rubble {

struct FragmentRef {
  int collection = 0;
  int fragment = 0;
  auto operator<=>(const FragmentRef&) const = default;
};

struct RigidBody {
  FragmentRef id;
  Transform pose;  // translation = center of mass
  Vec3 linear_velocity;
  Vec3 angular_velocity;
  double mass = 0.0;
  Vec3 inertia;  // principal moments in the body frame
  double bounding_radius = 0.0;
  ConvexPolyhedron local_shape;  // vertices relative to the center of mass
  std::vector<HalfSpace> local_planes;
  bool sleeping = false;
  int quiet_steps = 0;
  int slow_steps = 0;
};

struct PhysicsConfig {
  Vec3 gravity{0.0, -9.81, 0.0};
  double dt = 1.0 / 120.0;
  double linear_damping = 0.999;  // velocity factor per step
  double angular_damping = 0.995;
  double restitution = 0.1;
  double friction = 0.6;
  double bounce_threshold = 0.5;   // m/s; slower impacts are fully inelastic
  double contact_slop = 1e-3;      // m; vertices this close to the ground count as contacts
  double contact_margin = 5e-3;    // m; body pairs this close generate resting contacts
  double penetration_allowance = 0.01;  // m of body-body overlap tolerated before pushing apart
  double max_separation_step = 0.01;    // m per step of overlap correction
  double correction_rate = 0.3;         // fraction of excess overlap removed per step
  int velocity_iterations = 60;
  double sleep_speed = 0.05;
  int sleep_steps = 30;
  double jitter_speed = 0.25;  // slow contact motion that lasts jitter_steps also ends in sleep
  int jitter_steps = 240;
  double settle_energy_eps = 1e-4;  // J
  int settle_max_steps = 20000;
  int event_substeps = 30;  // physics steps after each strain-buildup step
};

class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorldState {
  std::vector<GeometryCollection> collections;
  std::vector<RigidBody> bodies;  // sorted by id
  PhysicsConfig config;
  std::uint64_t seed = 0;
  std::int64_t step_index = 0;

  const RigidBody* find_body(FragmentRef id) const;
  RigidBody* find_body(FragmentRef id);
};

/// Rigid body for a fragment at rest in its build-time pose.
RigidBody make_body(const GeometryCollection& gc, FragmentRef id);

/// Creates bodies for fragments of collection `collection` that were just released.
void spawn_bodies(WorldState& world, int collection, std::span<const int> fragments);

/// Body vertices in world coordinates.
std::vector<Vec3> world_vertices(const RigidBody& body);
ConvexPolyhedron world_shape(const RigidBody& body);

double kinetic_energy(const RigidBody& body);
double kinetic_energy(const WorldState& world);
/// Kinetic plus gravitational potential energy relative to the ground plane.
double mechanical_energy(const WorldState& world);

/// Lowest body vertex y, or +inf without bodies.
double lowest_vertex_y(const WorldState& world);

/// Applies an instantaneous linear impulse through the center of mass; wakes the body.
void apply_impulse(RigidBody& body, const Vec3& impulse);

/// One semi-implicit Euler step. dt must lie in (0, 0.05]. Throws PhysicsError naming the body
/// when any state goes non-finite.
void step(WorldState& world, double dt);
inline void step(WorldState& world) { step(world, world.config.dt); }

struct SettleResult {
  bool settled = false;
  int steps = 0;
};

/// Steps until kinetic energy stays below energy_eps for 10 consecutive steps, or max_steps.
SettleResult settle(WorldState& world, int max_steps, double energy_eps);
inline SettleResult settle(WorldState& world) {
  return settle(world, world.config.settle_max_steps, world.config.settle_energy_eps);
}

}  // namespace rubble
