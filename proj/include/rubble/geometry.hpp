#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rubble {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
constexpr double norm2(const Vec3& v) { return dot(v, v); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}
constexpr Vec3 cwise_min(const Vec3& a, const Vec3& b) {
  return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}
constexpr Vec3 cwise_max(const Vec3& a, const Vec3& b) {
  return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

/// Unit quaternion, scalar-first.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3& axis, double angle);

  Quat operator*(const Quat& o) const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const;
  Vec3 rotate(const Vec3& v) const;

  bool operator==(const Quat&) const = default;
};

/// Row-major 3x3 matrix; used for inertia tensors.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
  static Mat3 diagonal(const Vec3& d) { return {{d.x, 0, 0, 0, d.y, 0, 0, 0, d.z}}; }
  static Mat3 from_quat(const Quat& q);

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
};

/// Rigid transform: p' = rotation * p + translation.
struct Transform {
  Quat rotation;
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
  Vec3 apply_vector(const Vec3& v) const { return rotation.rotate(v); }
  Transform operator*(const Transform& inner) const {
    return {(rotation * inner.rotation).normalized(), apply(inner.translation)};
  }
  Transform inverse() const;

  bool operator==(const Transform&) const = default;
};

struct Aabb {
  Vec3 min{HUGE_VAL, HUGE_VAL, HUGE_VAL};
  Vec3 max{-HUGE_VAL, -HUGE_VAL, -HUGE_VAL};

  bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
  void expand(const Vec3& p) { min = cwise_min(min, p); max = cwise_max(max, p); }
  void expand(const Aabb& b) { min = cwise_min(min, b.min); max = cwise_max(max, b.max); }
  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  bool overlaps(const Aabb& o, double pad = 0.0) const {
    return min.x <= o.max.x + pad && o.min.x <= max.x + pad && min.y <= o.max.y + pad &&
           o.min.y <= max.y + pad && min.z <= o.max.z + pad && o.min.z <= max.z + pad;
  }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
};

/// Points p with dot(normal, p) <= offset are inside.
struct HalfSpace {
  Vec3 normal{1, 0, 0};
  double offset = 0.0;

  /// Normalizes `normal`; the plane passes through `point`.
  static HalfSpace through(const Vec3& normal, const Vec3& point);
  static HalfSpace from_unnormalized(const Vec3& normal, double offset);

  double signed_distance(const Vec3& p) const { return dot(normal, p) - offset; }
  HalfSpace complement() const { return {-normal, -offset}; }

  bool operator==(const HalfSpace&) const = default;
};

namespace tol {
inline constexpr double kSliverVolume = 1e-12;  // m^3
inline constexpr double kCoplanar = 1e-6;        // m
inline constexpr double kAntiAligned = 1e-4;     // 1 + dot(n_a, n_b)
inline constexpr double kConvexity = 1e-7;
inline constexpr double kClassify = 1e-10;       // vertex-on-plane band during clipping
}  // namespace tol

/// Closed convex solid. Faces are vertex-index loops, counter-clockwise seen from outside.
struct ConvexPolyhedron {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;

  bool operator==(const ConvexPolyhedron&) const = default;
};

/// Axis-aligned box; faces wound outward.
ConvexPolyhedron make_box(const Vec3& min, const Vec3& max);

/// Tetrahedron on four points; the winding is fixed up so faces point outward.
ConvexPolyhedron make_tetrahedron(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Divergence-theorem volume, m^3.
double volume(const ConvexPolyhedron& poly);

/// Center of mass of the uniform-density solid.
Vec3 centroid(const ConvexPolyhedron& poly);

Aabb bounds(const ConvexPolyhedron& poly);
Aabb bounds(std::span<const Vec3> points);

/// Outward plane of one face, via Newell's method.
HalfSpace face_plane(const ConvexPolyhedron& poly, std::size_t face);

/// Outward planes of all faces, in face order.
std::vector<HalfSpace> face_planes(const ConvexPolyhedron& poly);

/// True when p lies inside or within `tolerance` of every face plane.
bool contains(const ConvexPolyhedron& poly, const Vec3& p, double tolerance = 0.0);

/// Smallest distance from p to any face plane (negative outside). Used to skip boundary bands.
double interior_depth(const ConvexPolyhedron& poly, const Vec3& p);

/// Checks convexity, closedness (every directed edge has its reverse) and non-negative volume.
bool is_valid(const ConvexPolyhedron& poly, double tolerance = tol::kConvexity);

/// poly ∩ hs. Returns nullopt for an empty or sliver (< 1e-12 m^3) result.
std::optional<ConvexPolyhedron> clip_convex(const ConvexPolyhedron& poly, const HalfSpace& hs);

ConvexPolyhedron transformed(const ConvexPolyhedron& poly, const Transform& xf);

struct ContactPatch {
  double area = 0.0;
  Vec3 centroid;  // area-weighted center of the overlap; meaningful only when area > 0
};

/// Overlap of coplanar, oppositely oriented face pairs of a and b.
ContactPatch contact_patch(const ConvexPolyhedron& a, const ConvexPolyhedron& b);

/// contact_patch(a, b).area
double shared_face_area(const ConvexPolyhedron& a, const ConvexPolyhedron& b);

}  // namespace rubble
