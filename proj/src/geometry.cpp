#include "rubble/geometry.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace rubble {

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = rubble::normalized(axis);
  const double s = std::sin(angle * 0.5);
  return {std::cos(angle * 0.5), a.x * s, a.y * s, a.z * s};
}

Quat Quat::operator*(const Quat& o) const {
  return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
}

Quat Quat::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Vec3 Quat::rotate(const Vec3& v) const {
  // v' = v + 2w(q x v) + 2 q x (q x v)
  const Vec3 q{x, y, z};
  const Vec3 t = cross(q, v) * 2.0;
  return v + t * w + cross(q, t);
}

Mat3 Mat3::from_quat(const Quat& q) {
  const double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  return {{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
           2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
           2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r.m[static_cast<std::size_t>(i * 3 + j)] = s;
    }
  return r;
}

Mat3 Mat3::transposed() const {
  return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
}

Transform Transform::inverse() const {
  const Quat inv = rotation.conjugate();
  return {inv, -inv.rotate(translation)};
}

HalfSpace HalfSpace::through(const Vec3& normal, const Vec3& point) {
  const Vec3 n = normalized(normal);
  return {n, dot(n, point)};
}

HalfSpace HalfSpace::from_unnormalized(const Vec3& normal, double offset) {
  const double len = norm(normal);
  return {normal / len, offset / len};
}

ConvexPolyhedron make_box(const Vec3& lo, const Vec3& hi) {
  ConvexPolyhedron box;
  box.vertices = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                  {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
  box.faces = {{0, 3, 2, 1},   // -z
               {4, 5, 6, 7},   // +z
               {0, 4, 7, 3},   // -x
               {1, 2, 6, 5},   // +x
               {0, 1, 5, 4},   // -y
               {3, 7, 6, 2}};  // +y
  return box;
}

ConvexPolyhedron make_tetrahedron(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  ConvexPolyhedron t;
  t.vertices = {a, b, c, d};
  if (dot(cross(b - a, c - a), d - a) > 0.0) {
    t.faces = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  } else {
    t.faces = {{0, 1, 2}, {0, 3, 1}, {1, 3, 2}, {0, 2, 3}};
  }
  return t;
}

namespace {

Vec3 vertex_mean(const ConvexPolyhedron& poly) {
  Vec3 sum;
  for (const Vec3& v : poly.vertices) sum += v;
  return poly.vertices.empty() ? sum : sum / static_cast<double>(poly.vertices.size());
}

// Signed volume and first moment about `ref`, accumulated over fan tetrahedra.
std::pair<double, Vec3> volume_moment(const ConvexPolyhedron& poly) {
  const Vec3 ref = vertex_mean(poly);
  double vol = 0.0;
  Vec3 moment;
  for (const auto& face : poly.faces) {
    if (face.size() < 3) continue;
    const Vec3 a = poly.vertices[static_cast<std::size_t>(face[0])] - ref;
    for (std::size_t k = 1; k + 1 < face.size(); ++k) {
      const Vec3 b = poly.vertices[static_cast<std::size_t>(face[k])] - ref;
      const Vec3 c = poly.vertices[static_cast<std::size_t>(face[k + 1])] - ref;
      const double v = dot(a, cross(b, c)) / 6.0;
      vol += v;
      moment += (a + b + c) * (v / 4.0);
    }
  }
  return {vol, moment + ref * vol};
}

}  // namespace

double volume(const ConvexPolyhedron& poly) { return volume_moment(poly).first; }

Vec3 centroid(const ConvexPolyhedron& poly) {
  const auto [vol, moment] = volume_moment(poly);
  if (vol <= 0.0) return vertex_mean(poly);
  return moment / vol;
}

Aabb bounds(std::span<const Vec3> points) {
  Aabb box;
  for (const Vec3& p : points) box.expand(p);
  return box;
}

Aabb bounds(const ConvexPolyhedron& poly) { return bounds(std::span<const Vec3>(poly.vertices)); }

HalfSpace face_plane(const ConvexPolyhedron& poly, std::size_t face) {
  const auto& loop = poly.faces[face];
  Vec3 n;
  Vec3 mean;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec3& cur = poly.vertices[static_cast<std::size_t>(loop[i])];
    const Vec3& nxt = poly.vertices[static_cast<std::size_t>(loop[(i + 1) % loop.size()])];
    n.x += (cur.y - nxt.y) * (cur.z + nxt.z);
    n.y += (cur.z - nxt.z) * (cur.x + nxt.x);
    n.z += (cur.x - nxt.x) * (cur.y + nxt.y);
    mean += cur;
  }
  mean = mean / static_cast<double>(loop.size());
  n = normalized(n);
  return {n, dot(n, mean)};
}

std::vector<HalfSpace> face_planes(const ConvexPolyhedron& poly) {
  std::vector<HalfSpace> planes;
  planes.reserve(poly.faces.size());
  for (std::size_t f = 0; f < poly.faces.size(); ++f) planes.push_back(face_plane(poly, f));
  return planes;
}

bool contains(const ConvexPolyhedron& poly, const Vec3& p, double tolerance) {
  if (poly.faces.empty()) return false;
  for (std::size_t f = 0; f < poly.faces.size(); ++f) {
    if (face_plane(poly, f).signed_distance(p) > tolerance) return false;
  }
  return true;
}

double interior_depth(const ConvexPolyhedron& poly, const Vec3& p) {
  double depth = HUGE_VAL;
  for (std::size_t f = 0; f < poly.faces.size(); ++f) {
    depth = std::min(depth, -face_plane(poly, f).signed_distance(p));
  }
  return depth;
}

bool is_valid(const ConvexPolyhedron& poly, double tolerance) {
  if (poly.faces.size() < 4 || poly.vertices.size() < 4) return false;
  std::map<std::pair<int, int>, int> edges;
  const int nv = static_cast<int>(poly.vertices.size());
  for (const auto& face : poly.faces) {
    if (face.size() < 3) return false;
    for (std::size_t i = 0; i < face.size(); ++i) {
      const int a = face[i];
      const int b = face[(i + 1) % face.size()];
      if (a < 0 || a >= nv || b < 0 || b >= nv || a == b) return false;
      if (++edges[{a, b}] > 1) return false;
    }
  }
  for (const auto& [edge, count] : edges) {
    auto it = edges.find({edge.second, edge.first});
    if (it == edges.end() || it->second != 1) return false;
  }
  for (std::size_t f = 0; f < poly.faces.size(); ++f) {
    const HalfSpace plane = face_plane(poly, f);
    for (const Vec3& v : poly.vertices) {
      if (plane.signed_distance(v) > tolerance) return false;
    }
  }
  return volume(poly) >= 0.0;
}

namespace {

enum class Side : unsigned char { Inside, On, Outside };

double polygon_area(const std::vector<Vec3>& pts) {
  Vec3 n;
  for (std::size_t i = 0; i < pts.size(); ++i) n += cross(pts[i], pts[(i + 1) % pts.size()]);
  return 0.5 * norm(n);
}

}  // namespace

std::optional<ConvexPolyhedron> clip_convex(const ConvexPolyhedron& poly, const HalfSpace& hs) {
  const std::size_t nv = poly.vertices.size();
  std::vector<double> dist(nv);
  std::vector<Side> side(nv);
  bool any_in = false;
  bool any_out = false;
  for (std::size_t i = 0; i < nv; ++i) {
    dist[i] = hs.signed_distance(poly.vertices[i]);
    if (dist[i] > tol::kClassify) {
      side[i] = Side::Outside;
      any_out = true;
    } else if (dist[i] < -tol::kClassify) {
      side[i] = Side::Inside;
      any_in = true;
    } else {
      side[i] = Side::On;
    }
  }
  if (!any_out) {
    if (volume(poly) < tol::kSliverVolume) return std::nullopt;
    return poly;
  }
  if (!any_in) return std::nullopt;

  ConvexPolyhedron out;
  std::vector<int> remap(nv, -1);
  std::vector<bool> on_plane;  // indexed by output vertex
  auto keep = [&](int old) {
    auto& slot = remap[static_cast<std::size_t>(old)];
    if (slot < 0) {
      slot = static_cast<int>(out.vertices.size());
      out.vertices.push_back(poly.vertices[static_cast<std::size_t>(old)]);
      on_plane.push_back(side[static_cast<std::size_t>(old)] == Side::On);
    }
    return slot;
  };
  std::map<std::pair<int, int>, int> cut_vertex;
  auto cut = [&](int a, int b) {
    const std::pair<int, int> key = std::minmax(a, b);
    auto it = cut_vertex.find(key);
    if (it != cut_vertex.end()) return it->second;
    // Interpolate from the canonical endpoint so both faces sharing the edge agree bit-for-bit.
    const auto ua = static_cast<std::size_t>(key.first);
    const auto ub = static_cast<std::size_t>(key.second);
    const double t = dist[ua] / (dist[ua] - dist[ub]);
    const Vec3 p = poly.vertices[ua] + (poly.vertices[ub] - poly.vertices[ua]) * t;
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(p);
    on_plane.push_back(true);
    cut_vertex.emplace(key, idx);
    return idx;
  };

  std::map<int, int> cap_next;
  bool cap_consistent = true;
  for (const auto& face : poly.faces) {
    std::vector<int> loop;
    for (std::size_t i = 0; i < face.size(); ++i) {
      const int a = face[i];
      const int b = face[(i + 1) % face.size()];
      const Side sa = side[static_cast<std::size_t>(a)];
      const Side sb = side[static_cast<std::size_t>(b)];
      if (sa != Side::Outside) loop.push_back(keep(a));
      if ((sa == Side::Inside && sb == Side::Outside) ||
          (sa == Side::Outside && sb == Side::Inside)) {
        loop.push_back(cut(a, b));
      }
    }
    if (loop.size() < 3) continue;
    std::vector<Vec3> pts;
    pts.reserve(loop.size());
    for (int idx : loop) pts.push_back(out.vertices[static_cast<std::size_t>(idx)]);
    if (polygon_area(pts) <= 0.0) continue;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int p = loop[i];
      const int q = loop[(i + 1) % loop.size()];
      if (on_plane[static_cast<std::size_t>(p)] && on_plane[static_cast<std::size_t>(q)]) {
        if (!cap_next.emplace(q, p).second) cap_consistent = false;
      }
    }
    out.faces.push_back(std::move(loop));
  }

  std::vector<int> cap;
  if (cap_consistent && !cap_next.empty()) {
    int start = cap_next.begin()->first;
    int cur = start;
    do {
      cap.push_back(cur);
      auto it = cap_next.find(cur);
      if (it == cap_next.end() || cap.size() > cap_next.size()) {
        cap_consistent = false;
        break;
      }
      cur = it->second;
    } while (cur != start);
    if (cap.size() != cap_next.size()) cap_consistent = false;
  }
  if (!cap_consistent) {
    // Fallback: order every on-plane vertex by angle about the plane normal.
    cap.clear();
    Vec3 mean;
    for (std::size_t i = 0; i < out.vertices.size(); ++i) {
      if (on_plane[i]) {
        cap.push_back(static_cast<int>(i));
        mean += out.vertices[i];
      }
    }
    mean = mean / static_cast<double>(cap.size());
    const Vec3 u = normalized(std::abs(hs.normal.x) < 0.9 ? cross(hs.normal, {1, 0, 0})
                                                           : cross(hs.normal, {0, 1, 0}));
    const Vec3 v = cross(hs.normal, u);
    std::sort(cap.begin(), cap.end(), [&](int a, int b) {
      const Vec3 da = out.vertices[static_cast<std::size_t>(a)] - mean;
      const Vec3 db = out.vertices[static_cast<std::size_t>(b)] - mean;
      return std::atan2(dot(da, v), dot(da, u)) < std::atan2(dot(db, v), dot(db, u));
    });
  }
  if (cap.size() >= 3) out.faces.push_back(std::move(cap));

  // Drop vertices no face references.
  std::vector<int> used(out.vertices.size(), -1);
  ConvexPolyhedron compact;
  for (auto& face : out.faces) {
    for (int& idx : face) {
      auto& slot = used[static_cast<std::size_t>(idx)];
      if (slot < 0) {
        slot = static_cast<int>(compact.vertices.size());
        compact.vertices.push_back(out.vertices[static_cast<std::size_t>(idx)]);
      }
      idx = slot;
    }
  }
  compact.faces = std::move(out.faces);
  if (compact.faces.size() < 4 || volume(compact) < tol::kSliverVolume) return std::nullopt;
  return compact;
}

ConvexPolyhedron transformed(const ConvexPolyhedron& poly, const Transform& xf) {
  ConvexPolyhedron out = poly;
  for (Vec3& v : out.vertices) v = xf.apply(v);
  return out;
}

namespace {

struct P2 {
  double u;
  double v;
};

double cross2(const P2& o, const P2& a, const P2& b) {
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

// Clips convex CCW `subject` by convex CCW `clip`.
std::vector<P2> clip_polygon_2d(std::vector<P2> subject, const std::vector<P2>& clip) {
  for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    const P2& a = clip[i];
    const P2& b = clip[(i + 1) % clip.size()];
    std::vector<P2> next;
    for (std::size_t k = 0; k < subject.size(); ++k) {
      const P2& p = subject[k];
      const P2& q = subject[(k + 1) % subject.size()];
      const double dp = cross2(a, b, p);
      const double dq = cross2(a, b, q);
      if (dp >= 0) next.push_back(p);
      if ((dp >= 0) != (dq >= 0)) {
        const double t = dp / (dp - dq);
        next.push_back({p.u + (q.u - p.u) * t, p.v + (q.v - p.v) * t});
      }
    }
    subject = std::move(next);
  }
  return subject;
}

}  // namespace

ContactPatch contact_patch(const ConvexPolyhedron& a, const ConvexPolyhedron& b) {
  const auto planes_a = face_planes(a);
  const auto planes_b = face_planes(b);
  double total_area = 0.0;
  Vec3 weighted;
  for (std::size_t fa = 0; fa < planes_a.size(); ++fa) {
    const HalfSpace& pa = planes_a[fa];
    for (std::size_t fb = 0; fb < planes_b.size(); ++fb) {
      const HalfSpace& pb = planes_b[fb];
      if (1.0 + dot(pa.normal, pb.normal) > tol::kAntiAligned) continue;
      bool coplanar = true;
      for (int idx : b.faces[fb]) {
        if (std::abs(pa.signed_distance(b.vertices[static_cast<std::size_t>(idx)])) >
            tol::kCoplanar) {
          coplanar = false;
          break;
        }
      }
      for (int idx : a.faces[fa]) {
        if (!coplanar) break;
        if (std::abs(pb.signed_distance(a.vertices[static_cast<std::size_t>(idx)])) >
            tol::kCoplanar) {
          coplanar = false;
        }
      }
      if (!coplanar) continue;

      // Basis (u, v, n) is right-handed with n = outward normal of a's face.
      const Vec3 n = pa.normal;
      const Vec3 u = normalized(std::abs(n.x) < 0.9 ? cross(n, {1, 0, 0}) : cross(n, {0, 1, 0}));
      const Vec3 v = cross(n, u);
      const Vec3 origin = n * pa.offset;
      std::vector<P2> poly_a;
      for (int idx : a.faces[fa]) {
        const Vec3 d = a.vertices[static_cast<std::size_t>(idx)] - origin;
        poly_a.push_back({dot(d, u), dot(d, v)});
      }
      std::vector<P2> poly_b;
      for (auto it = b.faces[fb].rbegin(); it != b.faces[fb].rend(); ++it) {
        const Vec3 d = b.vertices[static_cast<std::size_t>(*it)] - origin;
        poly_b.push_back({dot(d, u), dot(d, v)});
      }
      const auto overlap = clip_polygon_2d(poly_a, poly_b);
      if (overlap.size() < 3) continue;
      double area2 = 0.0;
      double cu = 0.0;
      double cv = 0.0;
      for (std::size_t i = 0; i < overlap.size(); ++i) {
        const P2& p = overlap[i];
        const P2& q = overlap[(i + 1) % overlap.size()];
        const double c = p.u * q.v - q.u * p.v;
        area2 += c;
        cu += (p.u + q.u) * c;
        cv += (p.v + q.v) * c;
      }
      const double area = 0.5 * area2;
      if (area <= 0.0) continue;
      const Vec3 center = origin + u * (cu / (3.0 * area2)) + v * (cv / (3.0 * area2));
      total_area += area;
      weighted += center * area;
    }
  }
  ContactPatch patch;
  patch.area = total_area;
  if (total_area > 0.0) patch.centroid = weighted / total_area;
  return patch;
}

double shared_face_area(const ConvexPolyhedron& a, const ConvexPolyhedron& b) {
  return contact_patch(a, b).area;
}

}  // namespace rubble
