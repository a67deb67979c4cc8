#include "rubble/physics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

namespace rubble {

const RigidBody* WorldState::find_body(FragmentRef id) const {
  auto it = std::lower_bound(bodies.begin(), bodies.end(), id,
                             [](const RigidBody& b, const FragmentRef& r) { return b.id < r; });
  return (it != bodies.end() && it->id == id) ? &*it : nullptr;
}

RigidBody* WorldState::find_body(FragmentRef id) {
  return const_cast<RigidBody*>(std::as_const(*this).find_body(id));
}

RigidBody make_body(const GeometryCollection& gc, FragmentRef id) {
  const Fragment& frag = gc.fragments.at(static_cast<std::size_t>(id.fragment));
  RigidBody body;
  body.id = id;
  body.pose.translation = frag.centroid;
  body.mass = frag.volume * gc.material.density;
  body.local_shape = frag.polyhedron;
  for (Vec3& v : body.local_shape.vertices) {
    v -= frag.centroid;
    body.bounding_radius = std::max(body.bounding_radius, norm(v));
  }
  body.local_planes = face_planes(body.local_shape);
  // Box approximation of the inertia from the local bounding box.
  const Vec3 e = bounds(body.local_shape).extent();
  body.inertia = Vec3{e.y * e.y + e.z * e.z, e.x * e.x + e.z * e.z, e.x * e.x + e.y * e.y} *
                 (body.mass / 12.0);
  return body;
}

void spawn_bodies(WorldState& world, int collection, std::span<const int> fragments) {
  const auto& gc = world.collections.at(static_cast<std::size_t>(collection));
  for (int f : fragments) {
    const FragmentRef id{collection, f};
    if (world.find_body(id)) continue;
    RigidBody body = make_body(gc, id);
    auto pos = std::lower_bound(world.bodies.begin(), world.bodies.end(), id,
                                [](const RigidBody& b, const FragmentRef& r) { return b.id < r; });
    world.bodies.insert(pos, std::move(body));
  }
}

std::vector<Vec3> world_vertices(const RigidBody& body) {
  std::vector<Vec3> out;
  out.reserve(body.local_shape.vertices.size());
  for (const Vec3& v : body.local_shape.vertices) out.push_back(body.pose.apply(v));
  return out;
}

ConvexPolyhedron world_shape(const RigidBody& body) { return transformed(body.local_shape, body.pose); }

namespace {

Vec3 inverse_inertia_apply(const RigidBody& body, const Vec3& v) {
  const Vec3 local = body.pose.rotation.conjugate().rotate(v);
  const Vec3 scaled{local.x / body.inertia.x, local.y / body.inertia.y, local.z / body.inertia.z};
  return body.pose.rotation.rotate(scaled);
}

Vec3 inertia_apply(const RigidBody& body, const Vec3& v) {
  const Vec3 local = body.pose.rotation.conjugate().rotate(v);
  const Vec3 scaled{local.x * body.inertia.x, local.y * body.inertia.y, local.z * body.inertia.z};
  return body.pose.rotation.rotate(scaled);
}

void apply_impulse_at(RigidBody& body, const Vec3& r, const Vec3& impulse) {
  body.linear_velocity += impulse / body.mass;
  body.angular_velocity += inverse_inertia_apply(body, cross(r, impulse));
}

double effective_mass_inverse(const RigidBody& body, const Vec3& r, const Vec3& dir) {
  return 1.0 / body.mass + dot(dir, cross(inverse_inertia_apply(body, cross(r, dir)), r));
}

void check_finite(const RigidBody& body) {
  const Quat& q = body.pose.rotation;
  const bool ok = is_finite(body.pose.translation) && is_finite(body.linear_velocity) &&
                  is_finite(body.angular_velocity) && std::isfinite(q.w) &&
                  std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
  if (!ok) {
    throw PhysicsError("non-finite state in body (collection " + std::to_string(body.id.collection) +
                       ", fragment " + std::to_string(body.id.fragment) + ")");
  }
}

void integrate_velocity(RigidBody& body, const PhysicsConfig& cfg, double dt) {
  body.linear_velocity += cfg.gravity * dt;
  body.linear_velocity *= cfg.linear_damping;
  body.angular_velocity *= cfg.angular_damping;
}

void integrate_position(RigidBody& body, double dt) {
  body.pose.translation += body.linear_velocity * dt;
  const Vec3& w = body.angular_velocity;
  const Quat spin{0.0, w.x, w.y, w.z};
  Quat q = body.pose.rotation;
  const Quat dq = spin * q;
  q.w += 0.5 * dt * dq.w;
  q.x += 0.5 * dt * dq.x;
  q.y += 0.5 * dt * dq.y;
  q.z += 0.5 * dt * dq.z;
  body.pose.rotation = q.normalized();
}

struct Collider {
  RigidBody* body = nullptr;  // null for intact fragments
  std::size_t body_index = 0;
  std::vector<Vec3> vertices;
  std::vector<HalfSpace> planes;
  Aabb box;
  bool dynamic = false;
};

Collider body_collider(RigidBody& body, std::size_t index) {
  Collider c;
  c.body = &body;
  c.body_index = index;
  c.vertices = world_vertices(body);
  c.planes.reserve(body.local_planes.size());
  for (const HalfSpace& h : body.local_planes) {
    const Vec3 n = body.pose.rotation.rotate(h.normal);
    c.planes.push_back({n, h.offset + dot(n, body.pose.translation)});
  }
  c.box = bounds(std::span<const Vec3>(c.vertices));
  c.dynamic = !body.sleeping;
  return c;
}

// Separating-axis test over the face normals of both solids. When they overlap or lie within
// `margin` of each other, returns the normal pointing from a to b and the signed separation
// (negative = penetration).
bool near_contact(const Collider& a, const Collider& b, double margin, Vec3& normal,
                  double& separation) {
  double best = -HUGE_VAL;
  auto test = [&](const Collider& from, const Collider& other, double sign) {
    for (const HalfSpace& h : from.planes) {
      double lo = HUGE_VAL;
      for (const Vec3& v : other.vertices) lo = std::min(lo, dot(h.normal, v));
      const double s = lo - h.offset;
      if (s > margin) return false;
      if (s > best) {
        best = s;
        normal = h.normal * sign;
      }
    }
    return true;
  };
  if (!test(a, b, 1.0) || !test(b, a, -1.0)) return false;
  separation = best;
  return true;
}

// Manifold points: vertices of either solid lying inside the other. Falls back to the midpoint
// of the two supporting vertices for edge-edge contacts.
std::vector<Vec3> manifold(const Collider& a, const Collider& b, const Vec3& n, double margin) {
  std::vector<Vec3> points;
  auto gather = [&](const Collider& from, const Collider& into) {
    for (const Vec3& v : from.vertices) {
      bool inside = true;
      for (const HalfSpace& h : into.planes) {
        if (h.signed_distance(v) > margin) {
          inside = false;
          break;
        }
      }
      if (inside) points.push_back(v);
    }
  };
  gather(a, b);
  gather(b, a);
  if (!points.empty()) return points;
  Vec3 pa = a.vertices.front();
  for (const Vec3& v : a.vertices)
    if (dot(v, n) > dot(pa, n)) pa = v;
  Vec3 pb = b.vertices.front();
  for (const Vec3& v : b.vertices)
    if (dot(v, n) < dot(pb, n)) pb = v;
  return {(pa + pb) * 0.5};
}

// One contact between body a and either body b or the ground (b == nullptr).
struct Contact {
  RigidBody* a = nullptr;
  RigidBody* b = nullptr;
  Vec3 normal;  // from a to b
  Vec3 ra;
  Vec3 rb;
  double separation = 0.0;
  double target_vn = 0.0;
  double mass_n = 0.0;
  double jn = 0.0;
  Vec3 jt;
  bool primary = true;  // positional correction runs once per body pair
};

bool movable(const RigidBody* b) { return b && !b->sleeping; }

Vec3 velocity_at(const RigidBody* b, const Vec3& r) {
  if (!movable(b)) return {};
  return b->linear_velocity + cross(b->angular_velocity, r);
}

double inverse_mass_along(const RigidBody* b, const Vec3& r, const Vec3& dir) {
  return movable(b) ? effective_mass_inverse(*b, r, dir) : 0.0;
}

void apply(RigidBody* b, const Vec3& r, const Vec3& impulse) {
  if (movable(b)) apply_impulse_at(*b, r, impulse);
}

Vec3 relative_velocity(const Contact& c) { return velocity_at(c.b, c.rb) - velocity_at(c.a, c.ra); }

void prepare(Contact& c, const PhysicsConfig& cfg, double dt) {
  const double k = inverse_mass_along(c.a, c.ra, c.normal) + inverse_mass_along(c.b, c.rb, c.normal);
  c.mass_n = k > 0.0 ? 1.0 / k : 0.0;
  const double vn = dot(relative_velocity(c), c.normal);
  if (c.separation > 0.0 && !c.a) {
    // Ground contacts are speculative: the body may close exactly the remaining gap this step.
    c.target_vn = -c.separation / dt;
  } else if (c.separation > 0.0) {
    c.target_vn = 0.0;
  } else {
    c.target_vn = vn < -cfg.bounce_threshold ? -cfg.restitution * vn : 0.0;
  }
}

void solve(Contact& c, const PhysicsConfig& cfg) {
  if (c.mass_n == 0.0) return;
  const Vec3& n = c.normal;
  const double vn = dot(relative_velocity(c), n);
  const double old_jn = c.jn;
  c.jn = std::max(old_jn + (c.target_vn - vn) * c.mass_n, 0.0);
  const double djn = c.jn - old_jn;
  apply(c.a, c.ra, n * -djn);
  apply(c.b, c.rb, n * djn);

  const Vec3 v = relative_velocity(c);
  const Vec3 vt = v - n * dot(v, n);
  const double speed = norm(vt);
  if (speed < 1e-12) return;
  const Vec3 t = vt / speed;
  const double kt = inverse_mass_along(c.a, c.ra, t) + inverse_mass_along(c.b, c.rb, t);
  if (kt == 0.0) return;
  const Vec3 old_jt = c.jt;
  Vec3 jt = old_jt - t * (speed / kt);
  const double limit = cfg.friction * c.jn;
  const double mag = norm(jt);
  if (mag > limit) jt = jt * (limit / mag);
  c.jt = jt;
  const Vec3 djt = jt - old_jt;
  apply(c.a, c.ra, djt * -1.0);
  apply(c.b, c.rb, djt);
}

void ground_contacts(std::vector<RigidBody>& bodies, const PhysicsConfig& cfg,
                     std::vector<Contact>& out, std::vector<char>& touching) {
  const double margin = cfg.contact_slop;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    RigidBody& body = bodies[i];
    if (body.sleeping) continue;
    const std::vector<Vec3> verts = world_vertices(body);
    double min_y = HUGE_VAL;
    for (const Vec3& v : verts) min_y = std::min(min_y, v.y);
    if (min_y > margin) continue;
    for (const Vec3& v : verts) {
      if (v.y > margin) continue;
      Contact c;
      c.a = nullptr;
      c.b = &body;
      c.normal = {0.0, 1.0, 0.0};
      c.rb = v - body.pose.translation;
      c.separation = v.y;
      out.push_back(c);
    }
    touching[i] = 1;
  }
}

// Body-body and body-intact-fragment contacts. Candidate pairs come from a sweep over x and are
// emitted in sorted order.
void body_contacts(WorldState& world, std::vector<Contact>& out, std::vector<char>& touching) {
  const auto& cfg = world.config;
  const double margin = cfg.contact_margin;
  std::vector<Collider> colliders;
  colliders.reserve(world.bodies.size());
  for (std::size_t i = 0; i < world.bodies.size(); ++i)
    colliders.push_back(body_collider(world.bodies[i], i));
  for (const auto& gc : world.collections) {
    for (const auto& frag : gc.fragments) {
      if (frag.released) continue;
      const Aabb box = bounds(frag.polyhedron);
      Collider c;
      c.vertices = frag.polyhedron.vertices;
      c.box = box;
      colliders.push_back(std::move(c));
    }
  }
  std::vector<std::size_t> order(colliders.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double la = colliders[a].box.min.x;
    const double lb = colliders[b].box.min.x;
    return la != lb ? la < lb : a < b;
  });
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    const Aabb& bi = colliders[i].box;
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (colliders[j].box.min.x > bi.max.x + margin) break;
      if (!colliders[i].dynamic && !colliders[j].dynamic) continue;
      if (!bi.overlaps(colliders[j].box, margin)) continue;
      pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(pairs.begin(), pairs.end());

  // Intact fragments only need planes when something comes near them.
  std::size_t n_bodies = world.bodies.size();
  std::vector<const Fragment*> intact;
  for (const auto& gc : world.collections)
    for (const auto& frag : gc.fragments)
      if (!frag.released) intact.push_back(&frag);
  for (const auto& [i, j] : pairs) {
    for (std::size_t k : {i, j})
      if (k >= n_bodies && colliders[k].planes.empty())
        colliders[k].planes = face_planes(intact[k - n_bodies]->polyhedron);
    const Collider& a = colliders[i];
    const Collider& b = colliders[j];
    Vec3 n;
    double separation = 0.0;
    if (!near_contact(a, b, margin, n, separation)) continue;
    bool first = true;
    for (const Vec3& p : manifold(a, b, n, margin)) {
      Contact c;
      c.a = a.body;
      c.b = b.body;
      c.normal = n;
      if (a.body) c.ra = p - a.body->pose.translation;
      if (b.body) c.rb = p - b.body->pose.translation;
      c.separation = separation;
      c.primary = first;
      first = false;
      out.push_back(c);
    }
    if (a.body) touching[a.body_index] = 1;
    if (b.body) touching[b.body_index] = 1;
  }
}

// Pushes apart body pairs overlapping by more than the allowance. Shallow resting overlaps are
// left alone so piles can come to rest.
void correct_positions(const std::vector<Contact>& contacts, const PhysicsConfig& cfg) {
  for (const Contact& c : contacts) {
    if (!c.a || !c.primary) continue;  // ground handled by projection
    const double excess = -c.separation - cfg.penetration_allowance;
    if (excess <= 0.0) continue;
    const double wa = movable(c.a) ? 1.0 / c.a->mass : 0.0;
    const double wb = movable(c.b) ? 1.0 / c.b->mass : 0.0;
    if (wa + wb == 0.0) continue;
    const double shift = std::min(cfg.correction_rate * excess, cfg.max_separation_step);
    if (wa > 0.0) c.a->pose.translation -= c.normal * (shift * wa / (wa + wb));
    if (wb > 0.0) c.b->pose.translation += c.normal * (shift * wb / (wa + wb));
  }
}

void project_above_ground(RigidBody& body) {
  double min_y = HUGE_VAL;
  for (const Vec3& v : body.local_shape.vertices) min_y = std::min(min_y, body.pose.apply(v).y);
  if (min_y < 0.0) body.pose.translation.y -= min_y;
}

}  // namespace

double kinetic_energy(const RigidBody& body) {
  const Vec3& w = body.angular_velocity;
  return 0.5 * body.mass * norm2(body.linear_velocity) + 0.5 * dot(w, inertia_apply(body, w));
}

double kinetic_energy(const WorldState& world) {
  double e = 0.0;
  for (const auto& b : world.bodies) e += kinetic_energy(b);
  return e;
}

double mechanical_energy(const WorldState& world) {
  double e = 0.0;
  for (const auto& b : world.bodies)
    e += kinetic_energy(b) - b.mass * dot(world.config.gravity, b.pose.translation);
  return e;
}

double lowest_vertex_y(const WorldState& world) {
  double lowest = HUGE_VAL;
  for (const auto& b : world.bodies)
    for (const Vec3& v : world_vertices(b)) lowest = std::min(lowest, v.y);
  return lowest;
}

void apply_impulse(RigidBody& body, const Vec3& impulse) {
  body.sleeping = false;
  body.quiet_steps = 0;
  body.slow_steps = 0;
  body.linear_velocity += impulse / body.mass;
}

void step(WorldState& world, double dt) {
  if (!(dt > 0.0 && dt <= 0.05)) throw std::invalid_argument("step: dt must lie in (0, 0.05]");
  const PhysicsConfig& cfg = world.config;
  for (auto& body : world.bodies)
    if (!body.sleeping) integrate_velocity(body, cfg, dt);

  std::vector<char> touching(world.bodies.size(), 0);
  std::vector<Contact> contacts;
  if (!world.bodies.empty()) {
    body_contacts(world, contacts, touching);
    ground_contacts(world.bodies, cfg, contacts, touching);
  }
  for (Contact& c : contacts) prepare(c, cfg, dt);
  for (int it = 0; it < cfg.velocity_iterations; ++it)
    for (Contact& c : contacts) solve(c, cfg);

  for (auto& body : world.bodies)
    if (!body.sleeping) integrate_position(body, dt);
  correct_positions(contacts, cfg);

  for (std::size_t i = 0; i < world.bodies.size(); ++i) {
    RigidBody& body = world.bodies[i];
    if (body.sleeping) continue;
    project_above_ground(body);
    check_finite(body);
    const bool quiet = touching[i] && norm(body.linear_velocity) < cfg.sleep_speed &&
                       norm(body.angular_velocity) < cfg.sleep_speed;
    const bool slow = touching[i] && norm(body.linear_velocity) < cfg.jitter_speed &&
                      norm(body.angular_velocity) < cfg.jitter_speed;
    body.quiet_steps = quiet ? body.quiet_steps + 1 : 0;
    body.slow_steps = slow ? body.slow_steps + 1 : 0;
    if (body.quiet_steps >= cfg.sleep_steps || body.slow_steps >= cfg.jitter_steps) {
      body.sleeping = true;
      body.linear_velocity = {};
      body.angular_velocity = {};
    }
  }
  ++world.step_index;
}

SettleResult settle(WorldState& world, int max_steps, double energy_eps) {
  if (max_steps < 1) throw std::invalid_argument("settle: max_steps must be >= 1");
  SettleResult result;
  int calm = 0;
  while (result.steps < max_steps) {
    step(world, world.config.dt);
    ++result.steps;
    calm = kinetic_energy(world) < energy_eps ? calm + 1 : 0;
    if (calm >= 10) {
      result.settled = true;
      break;
    }
  }
  return result;
}

}  // namespace rubble
