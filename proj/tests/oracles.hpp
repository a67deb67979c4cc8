#pragma once

// Independent reference implementations used by the unit tests and the acceptance runner.
// None of these call into the code they check beyond plain data access.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "rubble/collection.hpp"
#include "rubble/fracture.hpp"
#include "rubble/geometry.hpp"

namespace oracle {

using rubble::Vec3;

struct VoronoiTally {
  long checked = 0;
  long agree = 0;
  long excluded = 0;
};

// Samples points in the box, assigns each to its nearest site by brute force and checks that
// exactly that site's cell contains it. Points within `band` of the bisector between the two
// nearest sites are skipped.
inline VoronoiTally check_voronoi(const rubble::VoronoiSites& sites,
                                  const std::vector<std::optional<rubble::ConvexPolyhedron>>& cells,
                                  const rubble::Aabb& box, long samples, std::uint64_t seed,
                                  double band = 1e-6) {
  std::vector<std::vector<rubble::HalfSpace>> planes;
  for (const auto& c : cells) planes.push_back(c ? rubble::face_planes(*c) : std::vector<rubble::HalfSpace>{});
  auto inside = [&](std::size_t i, const Vec3& p) {
    if (!cells[i]) return false;
    for (const auto& h : planes[i])
      if (h.signed_distance(p) > 1e-9) return false;
    return true;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.min.x, box.max.x), uy(box.min.y, box.max.y),
      uz(box.min.z, box.max.z);
  VoronoiTally t;
  const auto& s = sites.sites;
  for (long k = 0; k < samples; ++k) {
    const Vec3 p{ux(rng), uy(rng), uz(rng)};
    std::size_t best = 0, second = 0;
    double d_best = std::numeric_limits<double>::infinity(), d_second = d_best;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = rubble::norm2(p - s[i]);
      if (d < d_best) {
        second = best;
        d_second = d_best;
        best = i;
        d_best = d;
      } else if (d < d_second) {
        second = i;
        d_second = d;
      }
    }
    if (s.size() > 1) {
      const double gap = (d_second - d_best) / (2.0 * rubble::norm(s[second] - s[best]));
      if (gap < band) {
        ++t.excluded;
        continue;
      }
    }
    ++t.checked;
    bool ok = inside(best, p);
    for (std::size_t i = 0; i < cells.size() && ok; ++i)
      if (i != best && inside(i, p)) ok = false;
    t.agree += ok;
  }
  return t;
}

// A bare joint graph wrapped in a collection; fragments carry no geometry.
inline rubble::GeometryCollection graph_collection(int n, const std::vector<std::pair<int, int>>& edges,
                                                   const std::vector<double>& thresholds,
                                                   const std::vector<bool>& anchored) {
  rubble::GeometryCollection gc;
  gc.fragments.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) gc.fragments[static_cast<std::size_t>(i)].anchored = anchored[static_cast<std::size_t>(i)];
  gc.adjacency.resize(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < edges.size(); ++j) {
    rubble::Joint joint;
    joint.frag_a = edges[j].first;
    joint.frag_b = edges[j].second;
    joint.threshold = thresholds[j];
    joint.contact_area = 1.0;
    gc.joints.push_back(joint);
    gc.adjacency[static_cast<std::size_t>(edges[j].first)].push_back(static_cast<int>(j));
    gc.adjacency[static_cast<std::size_t>(edges[j].second)].push_back(static_cast<int>(j));
  }
  return gc;
}

struct ReplayState {
  std::vector<double> accumulated;
  std::vector<bool> broken;
  std::vector<bool> released;
};

// The release rule replayed literally: while some unreleased fragment has a joint that was
// unbroken when the strain arrived and whose accumulated strain exceeds its threshold, release
// that fragment and break all of its joints. Fragments are visited in the given order.
// Returns the newly released fragments, ascending.
inline std::set<int> replay_release(ReplayState& st, const std::vector<std::pair<int, int>>& edges,
                                    const std::vector<double>& thresholds,
                                    const std::vector<double>& strain, const std::vector<int>& order) {
  for (std::size_t j = 0; j < edges.size(); ++j) st.accumulated[j] += strain[j];
  const std::vector<bool> broken_at_arrival = st.broken;
  std::set<int> released;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int f : order) {
      if (st.released[static_cast<std::size_t>(f)]) continue;
      bool fires = false;
      for (std::size_t j = 0; j < edges.size(); ++j) {
        if (edges[j].first != f && edges[j].second != f) continue;
        fires = fires || (!broken_at_arrival[j] && st.accumulated[j] > thresholds[j]);
      }
      if (!fires) continue;
      st.released[static_cast<std::size_t>(f)] = true;
      released.insert(f);
      for (std::size_t j = 0; j < edges.size(); ++j)
        if (edges[j].first == f || edges[j].second == f) st.broken[j] = true;
      changed = true;
    }
  }
  return released;
}

// Unsupported fragments: repeated relaxation of "supported" until nothing changes.
inline std::set<int> replay_support(ReplayState& st, int n, const std::vector<std::pair<int, int>>& edges,
                                    const std::vector<bool>& anchored) {
  std::vector<bool> supported(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i)
    supported[static_cast<std::size_t>(i)] = anchored[static_cast<std::size_t>(i)] && !st.released[static_cast<std::size_t>(i)];
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      if (st.broken[j]) continue;
      const auto a = static_cast<std::size_t>(edges[j].first), b = static_cast<std::size_t>(edges[j].second);
      if (supported[a] != supported[b] && !st.released[a] && !st.released[b]) {
        supported[a] = supported[b] = true;
        changed = true;
      }
    }
  }
  std::set<int> out;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!st.released[k] && !supported[k]) {
      out.insert(i);
      st.released[k] = true;
      for (std::size_t j = 0; j < edges.size(); ++j)
        if (edges[j].first == i || edges[j].second == i) st.broken[j] = true;
    }
  }
  return out;
}

// Random connected graph on n nodes: a random spanning tree plus extra edges.
inline std::vector<std::pair<int, int>> random_connected_graph(int n, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> seen;
  for (int v = 1; v < n; ++v) {
    const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
    edges.emplace_back(u, v);
    seen.insert({u, v});
  }
  const int extra = std::uniform_int_distribution<int>(0, n * (n - 1) / 2 - (n - 1))(rng);
  for (int k = 0; k < extra; ++k) {
    int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) edges.emplace_back(a, b);
  }
  return edges;
}

// Ray against an axis-aligned box by the slab method; entry distance or nullopt.
inline std::optional<double> ray_box(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t1 < 0.0) return std::nullopt;
  return std::max(t0, 0.0);
}

}  // namespace oracle
