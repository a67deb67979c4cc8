#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "rubble/physics.hpp"

using namespace rubble;

namespace {

WorldState world_with(std::vector<ConvexPolyhedron> parts) {
  FractureResult r;
  r.fragments = std::move(parts);
  WorldState w;
  w.collections.push_back(build_collection(std::span(&r, 1), Material::preset(MaterialKind::Concrete)));
  std::vector<int> all(w.collections[0].fragments.size());
  std::iota(all.begin(), all.end(), 0);
  for (int f : all) w.collections[0].fragments[static_cast<std::size_t>(f)].released = true;
  spawn_bodies(w, 0, all);
  return w;
}

}  // namespace

TEST(Physics, BodyMassAndCenter) {
  auto w = world_with({make_box({0, 1, 0}, {1, 2, 2})});
  const auto& b = w.bodies[0];
  EXPECT_NEAR(b.mass, 2.0 * 2400.0, 1e-9);
  EXPECT_NEAR(norm(b.pose.translation - Vec3{0.5, 1.5, 1.0}), 0.0, 1e-12);
  EXPECT_NEAR(b.inertia.x, b.mass * (1 + 4) / 12.0, 1e-9);
  EXPECT_NEAR(norm(centroid(world_shape(b)) - b.pose.translation), 0.0, 1e-12);
}

TEST(Physics, FreeFallMatchesSemiImplicitEuler) {
  auto w = world_with({make_box({0, 10, 0}, {1, 11, 1})});
  w.config.linear_damping = 1.0;
  const double dt = w.config.dt, g = 9.81;
  const int n = 60;
  for (int k = 0; k < n; ++k) step(w);
  // v_n = -g n dt, y_n = y_0 - g dt^2 n (n + 1) / 2
  EXPECT_NEAR(w.bodies[0].linear_velocity.y, -g * n * dt, 1e-9);
  EXPECT_NEAR(w.bodies[0].pose.translation.y, 10.5 - g * dt * dt * n * (n + 1) / 2.0, 1e-9);
  EXPECT_EQ(w.step_index, n);
}

TEST(Physics, DroppedFragmentSettlesOnGround) {
  const auto tetra = make_tetrahedron({0, 0, 0}, {0.6, 0, 0.1}, {0.2, 0.5, 0.4}, {0.1, 0.1, 0.7});
  auto w = world_with({transformed(tetra, {Quat::from_axis_angle(normalized(Vec3{1, 1, 0}), 0.8), {0, 1.5, 0}})});
  double lowest = HUGE_VAL;
  std::vector<double> energy{mechanical_energy(w)};
  int steps = 0;
  int calm = 0;
  while (steps < 20000 && calm < 10) {
    step(w);
    ++steps;
    lowest = std::min(lowest, lowest_vertex_y(w));
    energy.push_back(mechanical_energy(w));
    calm = kinetic_energy(w) < w.config.settle_energy_eps ? calm + 1 : 0;
  }
  EXPECT_EQ(calm, 10);
  EXPECT_GE(lowest, -0.01);
  EXPECT_LE(std::abs(lowest_vertex_y(w)), 1e-3);
  for (std::size_t k = 50; k < energy.size(); k += 50) EXPECT_LE(energy[k], energy[k - 50] + 1e-9);
}

TEST(Physics, StackedBoxesComeToRest) {
  auto w = world_with({make_box({0, 0.02, 0}, {1, 0.52, 1}), make_box({0.2, 0.6, 0.2}, {0.8, 1.0, 0.8})});
  const auto r = settle(w);
  EXPECT_TRUE(r.settled);
  const auto* top = w.find_body({0, 1});
  ASSERT_NE(top, nullptr);
  EXPECT_NEAR(top->pose.translation.y, 0.5 + 0.2, 0.02);
  EXPECT_GT(lowest_vertex_y(w), -1e-3);
}

TEST(Physics, IntactFragmentsBlockBodies) {
  FractureResult r;
  r.fragments = {make_box({-1, 0, -1}, {1, 0.5, 1}), make_box({-0.2, 1.0, -0.2}, {0.2, 1.4, 0.2})};
  WorldState w;
  w.collections.push_back(build_collection(std::span(&r, 1), Material::preset(MaterialKind::Concrete)));
  const std::vector<int> falling{1};
  w.collections[0].fragments[1].released = true;
  spawn_bodies(w, 0, falling);
  EXPECT_TRUE(settle(w).settled);
  EXPECT_NEAR(w.bodies[0].pose.translation.y, 0.7, 0.02);
}

TEST(Physics, ImpulseChangesMomentumAndWakes) {
  auto w = world_with({make_box({0, 0, 0}, {1, 1, 1})});
  auto& b = w.bodies[0];
  b.sleeping = true;
  apply_impulse(b, {b.mass * 2.0, 0, 0});
  EXPECT_FALSE(b.sleeping);
  EXPECT_NEAR(b.linear_velocity.x, 2.0, 1e-12);
}

TEST(Physics, SleepingBodiesDoNotMove) {
  auto w = world_with({make_box({0, 5, 0}, {1, 6, 1})});
  w.bodies[0].sleeping = true;
  const auto pose = w.bodies[0].pose;
  for (int k = 0; k < 10; ++k) step(w);
  EXPECT_EQ(w.bodies[0].pose, pose);
}

TEST(Physics, RejectsBadTimeStep) {
  auto w = world_with({make_box({0, 0, 0}, {1, 1, 1})});
  EXPECT_THROW(step(w, 0.0), std::invalid_argument);
  EXPECT_THROW(step(w, 0.1), std::invalid_argument);
  EXPECT_THROW(settle(w, 0, 1e-4), std::invalid_argument);
}

TEST(Physics, NonFiniteStateIsReported) {
  auto w = world_with({make_box({0, 5, 0}, {1, 6, 1})});
  w.bodies[0].linear_velocity.x = std::numeric_limits<double>::quiet_NaN();
  try {
    step(w);
    FAIL() << "expected PhysicsError";
  } catch (const PhysicsError& e) {
    EXPECT_NE(std::string(e.what()).find("0"), std::string::npos);
  }
}

TEST(Physics, ReplayIsBitIdentical) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<ConvexPolyhedron> parts;
  for (int i = 0; i < 6; ++i) {
    const Vec3 c{u(rng) * 2, 1.0 + i * 0.7, u(rng) * 2};
    parts.push_back(make_box(c - Vec3{0.25, 0.2, 0.3}, c + Vec3{0.25, 0.2, 0.3}));
  }
  auto a = world_with(parts);
  auto b = world_with(parts);
  for (int k = 0; k < 400; ++k) {
    step(a);
    step(b);
  }
  for (std::size_t i = 0; i < a.bodies.size(); ++i) {
    EXPECT_EQ(a.bodies[i].pose, b.bodies[i].pose);
    EXPECT_EQ(a.bodies[i].linear_velocity, b.bodies[i].linear_velocity);
  }
}

TEST(Physics, EnergyHelpers) {
  auto w = world_with({make_box({0, 1, 0}, {1, 2, 1})});
  auto& b = w.bodies[0];
  b.linear_velocity = {3, 0, 0};
  EXPECT_NEAR(kinetic_energy(w), 0.5 * b.mass * 9.0, 1e-9);
  EXPECT_NEAR(mechanical_energy(w), 0.5 * b.mass * 9.0 + b.mass * 9.81 * 1.5, 1e-9);
  EXPECT_NEAR(lowest_vertex_y(w), 1.0, 1e-12);
  EXPECT_EQ(lowest_vertex_y(WorldState{}), HUGE_VAL);
}
