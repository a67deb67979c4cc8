#include <gtest/gtest.h>

#include <random>

#include "rubble/geometry.hpp"

using namespace rubble;

namespace {

double det3(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

// Fraction of uniform samples in the box that fall inside poly, scaled by the box volume.
double monte_carlo_volume(const ConvexPolyhedron& poly, const Aabb& box, int samples,
                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(box.min.x, box.max.x), uy(box.min.y, box.max.y),
      uz(box.min.z, box.max.z);
  const auto planes = face_planes(poly);
  int inside = 0;
  for (int i = 0; i < samples; ++i) {
    const Vec3 p{ux(rng), uy(rng), uz(rng)};
    bool in = true;
    for (const auto& h : planes) in = in && h.signed_distance(p) <= 0.0;
    inside += in;
  }
  const Vec3 e = box.extent();
  return e.x * e.y * e.z * inside / samples;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return normalized(Vec3{n(rng), n(rng), n(rng)});
}

}  // namespace

TEST(Geometry, BoxVolumeAndCentroid) {
  const auto box = make_box({1, 2, 3}, {2, 4, 6});
  EXPECT_NEAR(volume(box), 6.0, 1e-12);
  const Vec3 c = centroid(box);
  EXPECT_NEAR(c.x, 1.5, 1e-12);
  EXPECT_NEAR(c.y, 3.0, 1e-12);
  EXPECT_NEAR(c.z, 4.5, 1e-12);
  EXPECT_TRUE(is_valid(box));
  EXPECT_EQ(box.faces.size(), 6u);
}

TEST(Geometry, TetrahedronMatchesDeterminant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 50; ++k) {
    const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)},
        d{u(rng), u(rng), u(rng)};
    const double expected = std::abs(det3(b - a, c - a, d - a)) / 6.0;
    if (expected < 1e-3) continue;
    const auto t = make_tetrahedron(a, b, c, d);
    EXPECT_NEAR(volume(t), expected, 1e-12 * (1 + expected));
    const Vec3 g = centroid(t);
    const Vec3 mean = (a + b + c + d) * 0.25;
    EXPECT_NEAR(norm(g - mean), 0.0, 1e-12);
    EXPECT_TRUE(is_valid(t));
  }
}

TEST(Geometry, FacePlanesPointOutward) {
  const auto box = make_box({0, 0, 0}, {1, 1, 1});
  const Vec3 c = centroid(box);
  for (const auto& h : face_planes(box)) {
    EXPECT_NEAR(norm(h.normal), 1.0, 1e-12);
    EXPECT_LT(h.signed_distance(c), 0.0);
  }
}

TEST(Geometry, ClipByAxisPlaneHalvesBox) {
  const auto box = make_box({0, 0, 0}, {2, 1, 1});
  const auto left = clip_convex(box, HalfSpace::through({1, 0, 0}, {0.5, 0, 0}));
  ASSERT_TRUE(left);
  EXPECT_NEAR(volume(*left), 0.5, 1e-12);
  EXPECT_TRUE(is_valid(*left));
  EXPECT_FALSE(clip_convex(box, HalfSpace::through({1, 0, 0}, {-1, 0, 0})));
  const auto whole = clip_convex(box, HalfSpace::through({1, 0, 0}, {5, 0, 0}));
  ASSERT_TRUE(whole);
  EXPECT_NEAR(volume(*whole), 2.0, 1e-12);
}

TEST(Geometry, ClipVolumeMatchesMonteCarlo) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  const auto box = make_box({0, 0, 0}, {1, 1, 1});
  const Aabb domain{{0, 0, 0}, {1, 1, 1}};
  for (int k = 0; k < 10; ++k) {
    ConvexPolyhedron poly = box;
    for (int c = 0; c < 3; ++c) {
      const auto next = clip_convex(poly, HalfSpace::through(random_unit(rng), {u(rng), u(rng), u(rng)}));
      if (next) poly = *next;
    }
    ASSERT_TRUE(is_valid(poly));
    const int samples = 200000;
    const double v = volume(poly);
    const double mc = monte_carlo_volume(poly, domain, samples, rng);
    const double sigma = std::sqrt(v * (1 - v) / samples);
    EXPECT_NEAR(v, mc, 5 * sigma + 1e-9) << "case " << k;
  }
}

TEST(Geometry, ClipAndComplementPartitionVolume) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const auto box = make_box({-1, -0.5, -0.5}, {1, 0.5, 0.5});
  for (int k = 0; k < 200; ++k) {
    const HalfSpace h = HalfSpace::through(random_unit(rng), {u(rng), u(rng), u(rng)});
    const auto a = clip_convex(box, h);
    const auto b = clip_convex(box, h.complement());
    const double va = a ? volume(*a) : 0.0;
    const double vb = b ? volume(*b) : 0.0;
    EXPECT_NEAR(va + vb, 2.0, 1e-11);
    if (a) EXPECT_TRUE(is_valid(*a));
    if (b) EXPECT_TRUE(is_valid(*b));
  }
}

TEST(Geometry, ContainsAndInteriorDepth) {
  const auto box = make_box({0, 0, 0}, {1, 1, 1});
  EXPECT_TRUE(contains(box, {0.5, 0.5, 0.5}));
  EXPECT_FALSE(contains(box, {1.1, 0.5, 0.5}));
  EXPECT_TRUE(contains(box, {1.05, 0.5, 0.5}, 0.1));
  EXPECT_NEAR(interior_depth(box, {0.5, 0.5, 0.5}), 0.5, 1e-12);
  EXPECT_NEAR(interior_depth(box, {0.9, 0.5, 0.5}), 0.1, 1e-12);
  EXPECT_LT(interior_depth(box, {2, 0.5, 0.5}), 0.0);
}

TEST(Geometry, QuaternionAgreesWithMatrix) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const Quat q = Quat::from_axis_angle(random_unit(rng), angle(rng));
    EXPECT_NEAR(q.norm(), 1.0, 1e-12);
    const Vec3 v = random_unit(rng) * 3.0;
    const Vec3 a = q.rotate(v);
    const Vec3 b = Mat3::from_quat(q) * v;
    EXPECT_NEAR(norm(a - b), 0.0, 1e-12);
    EXPECT_NEAR(norm(a), norm(v), 1e-12);
  }
  const Quat quarter = Quat::from_axis_angle({0, 1, 0}, std::acos(-1.0) / 2);
  const Vec3 r = quarter.rotate({1, 0, 0});
  EXPECT_NEAR(r.x, 0.0, 1e-12);
  EXPECT_NEAR(r.z, -1.0, 1e-12);
}

TEST(Geometry, TransformInverseRoundTrip) {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 50; ++k) {
    const Transform t{Quat::from_axis_angle(random_unit(rng), 1.3), random_unit(rng) * 4.0};
    const Vec3 p = random_unit(rng);
    EXPECT_NEAR(norm(t.inverse().apply(t.apply(p)) - p), 0.0, 1e-12);
  }
}

TEST(Geometry, TransformedPreservesVolume) {
  const auto box = make_box({0, 0, 0}, {1, 2, 3});
  const Transform t{Quat::from_axis_angle(normalized(Vec3{1, 2, 3}), 0.7), {5, -1, 2}};
  const auto moved = transformed(box, t);
  EXPECT_NEAR(volume(moved), 6.0, 1e-12);
  EXPECT_NEAR(norm(centroid(moved) - t.apply(centroid(box))), 0.0, 1e-12);
  EXPECT_TRUE(is_valid(moved));
}

TEST(Geometry, AbuttingCubesShareUnitFace) {
  const auto a = make_box({0, 0, 0}, {1, 1, 1});
  const auto b = make_box({1, 0, 0}, {2, 1, 1});
  const auto patch = contact_patch(a, b);
  EXPECT_NEAR(patch.area, 1.0, 1e-12);
  EXPECT_NEAR(norm(patch.centroid - Vec3{1, 0.5, 0.5}), 0.0, 1e-12);
  const auto c = make_box({1, 0.5, 0.5}, {2, 1.5, 1.5});
  EXPECT_NEAR(shared_face_area(a, c), 0.25, 1e-12);
  const auto d = make_box({1.5, 0, 0}, {2, 1, 1});
  EXPECT_EQ(shared_face_area(a, d), 0.0);
}

TEST(Geometry, BoundsOfRotatedBox) {
  const auto box = make_box({-1, -1, -1}, {1, 1, 1});
  const auto r = transformed(box, {Quat::from_axis_angle({0, 0, 1}, std::acos(-1.0) / 4), {}});
  const Aabb b = bounds(r);
  EXPECT_NEAR(b.max.x, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(b.max.z, 1.0, 1e-12);
}
