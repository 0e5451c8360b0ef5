#include "phyre/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "phyre/error.hpp"

namespace phyre {

namespace {

struct WallPlane
{
  int id;
  Vec2 inward; ///< unit normal pointing into the world
  double offset;
};

std::array<WallPlane, 4> wall_planes(const WorldState& world)
{
  return {WallPlane{kFloorId, {0.0, 1.0}, 0.0},
          WallPlane{kLeftWallId, {1.0, 0.0}, 0.0},
          WallPlane{kRightWallId, {-1.0, 0.0}, -world.width},
          WallPlane{kCeilingId, {0.0, -1.0}, -world.height}};
}

void add_point(Stepper::Manifold& m, Vec2 point, double separation)
{
  Stepper::ManifoldPoint& p = m.points[m.count++];
  p = {};
  p.point = point;
  p.separation = separation;
}

bool circle_circle(const Primitive& a, const Primitive& b, double margin, Stepper::Manifold& m)
{
  const Vec2 d = b.center - a.center;
  const double dist = length(d);
  const double sep = dist - a.radius - b.radius;
  if (sep > margin)
  {
    return false;
  }
  m.normal = dist > 1e-12 ? d * (1.0 / dist) : Vec2{0.0, 1.0};
  add_point(m, a.center + m.normal * (a.radius + 0.5 * sep), sep);
  return true;
}

/// Normal points from the circle to the box.
bool circle_box(const Primitive& circle, const Primitive& box, double margin, Stepper::Manifold& m)
{
  bool inside = false;
  const Vec2 q = closest_point_on_box(box, circle.center, &inside);
  const Vec2 d = q - circle.center;
  const double dist = length(d);
  if (!inside && dist > 1e-12)
  {
    const double sep = dist - circle.radius;
    if (sep > margin)
    {
      return false;
    }
    m.normal = d * (1.0 / dist);
    add_point(m, q, sep);
    return true;
  }
  // Centre inside (or on) the box: push out through the nearest face.
  const Vec2 local = box.rotation.apply_inverse(circle.center - box.center);
  const double dx = box.half_width - std::abs(local.x);
  const double dy = box.half_height - std::abs(local.y);
  Vec2 outward;
  double depth;
  if (dx <= dy)
  {
    outward = box.rotation.axis_x() * (local.x >= 0.0 ? 1.0 : -1.0);
    depth = dx;
  }
  else
  {
    outward = box.rotation.axis_y() * (local.y >= 0.0 ? 1.0 : -1.0);
    depth = dy;
  }
  m.normal = -outward;
  add_point(m, q, -depth - circle.radius);
  return true;
}

struct FaceQuery
{
  double separation;
  Vec2 direction; ///< reference face normal, pointing towards the incident box
  double extent_n;
  double extent_t;
};

FaceQuery best_face(const Primitive& ref, const Primitive& other)
{
  FaceQuery best{-1e300, {}, 0.0, 0.0};
  const Vec2 axes[2] = {ref.rotation.axis_x(), ref.rotation.axis_y()};
  const double ext_n[2] = {ref.half_width, ref.half_height};
  const double ext_t[2] = {ref.half_height, ref.half_width};
  for (int k = 0; k < 2; ++k)
  {
    const Vec2 u = axes[k];
    const double d = dot(other.center - ref.center, u);
    const double other_ext = std::abs(dot(other.rotation.axis_x(), u)) * other.half_width +
                             std::abs(dot(other.rotation.axis_y(), u)) * other.half_height;
    const double sep = std::abs(d) - ext_n[k] - other_ext;
    if (sep > best.separation)
    {
      best = {sep, d >= 0.0 ? u : -u, ext_n[k], ext_t[k]};
    }
  }
  return best;
}

bool box_box(const Primitive& a, const Primitive& b, double margin, Stepper::Manifold& m)
{
  const FaceQuery fa = best_face(a, b);
  if (fa.separation > margin)
  {
    return false;
  }
  const FaceQuery fb = best_face(b, a);
  if (fb.separation > margin)
  {
    return false;
  }
  const bool ref_is_a = !(fb.separation > 0.95 * fa.separation + 0.01);
  const Primitive& ref = ref_is_a ? a : b;
  const Primitive& inc = ref_is_a ? b : a;
  const FaceQuery& f = ref_is_a ? fa : fb;

  // Incident face: the face of `inc` most anti-parallel to the reference normal.
  const Vec2 iax = inc.rotation.axis_x();
  const Vec2 iay = inc.rotation.axis_y();
  Vec2 inc_normal;
  Vec2 inc_tangent;
  double inc_n, inc_t;
  if (std::abs(dot(iax, f.direction)) >= std::abs(dot(iay, f.direction)))
  {
    inc_normal = dot(iax, f.direction) > 0.0 ? -iax : iax;
    inc_tangent = iay;
    inc_n = inc.half_width;
    inc_t = inc.half_height;
  }
  else
  {
    inc_normal = dot(iay, f.direction) > 0.0 ? -iay : iay;
    inc_tangent = iax;
    inc_n = inc.half_height;
    inc_t = inc.half_width;
  }
  const Vec2 edge_center = inc.center + inc_normal * inc_n;
  Vec2 v1 = edge_center - inc_tangent * inc_t;
  Vec2 v2 = edge_center + inc_tangent * inc_t;

  const Vec2 face_center = ref.center + f.direction * f.extent_n;
  const Vec2 t = perp(f.direction);
  double s1 = dot(v1 - face_center, t);
  double s2 = dot(v2 - face_center, t);
  // Clip the incident edge to the reference face's side planes.
  for (double bound : {f.extent_t, -f.extent_t})
  {
    const double sign = bound > 0.0 ? 1.0 : -1.0;
    const double d1 = sign * (s1 - bound);
    const double d2 = sign * (s2 - bound);
    if (d1 > 0.0 && d2 > 0.0)
    {
      return false;
    }
    if (d1 > 0.0 || d2 > 0.0)
    {
      const double lambda = d1 / (d1 - d2);
      const Vec2 clipped = v1 + (v2 - v1) * lambda;
      if (d1 > 0.0)
      {
        v1 = clipped;
      }
      else
      {
        v2 = clipped;
      }
      s1 = dot(v1 - face_center, t);
      s2 = dot(v2 - face_center, t);
    }
  }

  m.normal = ref_is_a ? f.direction : -f.direction;
  for (Vec2 v : {v1, v2})
  {
    const double sep = dot(v - face_center, f.direction);
    if (sep <= margin)
    {
      add_point(m, v - f.direction * (0.5 * sep), sep);
    }
  }
  return m.count > 0;
}

bool collide_primitives(const Primitive& a, const Primitive& b, double margin, Stepper::Manifold& m)
{
  if (a.is_circle && b.is_circle)
  {
    return circle_circle(a, b, margin, m);
  }
  if (a.is_circle)
  {
    return circle_box(a, b, margin, m);
  }
  if (b.is_circle)
  {
    if (!circle_box(b, a, margin, m))
    {
      return false;
    }
    m.normal = -m.normal;
    return true;
  }
  return box_box(a, b, margin, m);
}

bool collide_wall(const Primitive& p, const WallPlane& wall, double margin, Stepper::Manifold& m)
{
  m.normal = -wall.inward;
  if (p.is_circle)
  {
    const double sep = dot(wall.inward, p.center) - wall.offset - p.radius;
    if (sep > margin)
    {
      return false;
    }
    add_point(m, p.center - wall.inward * (p.radius + 0.5 * sep), sep);
    return true;
  }
  const Vec2 ax = p.rotation.axis_x() * p.half_width;
  const Vec2 ay = p.rotation.axis_y() * p.half_height;
  const Vec2 verts[4] = {p.center - ax - ay, p.center + ax - ay, p.center + ax + ay,
                         p.center - ax + ay};
  double seps[4];
  for (int i = 0; i < 4; ++i)
  {
    seps[i] = dot(wall.inward, verts[i]) - wall.offset;
  }
  // Keep the two deepest corners.
  int order[4] = {0, 1, 2, 3};
  std::stable_sort(order, order + 4, [&](int x, int y) { return seps[x] < seps[y]; });
  for (int k = 0; k < 2; ++k)
  {
    const int i = order[k];
    if (seps[i] <= margin)
    {
      add_point(m, verts[i] - wall.inward * (0.5 * seps[i]), seps[i]);
    }
  }
  return m.count > 0;
}

double point_speed(const Stepper::SolverBody& b)
{
  return length(b.velocity + b.drift) + std::abs(b.omega) * b.radius;
}

bool aabbs_touch(const Aabb& a, const Aabb& b, double margin)
{
  return a.lo.x - margin <= b.hi.x && b.lo.x - margin <= a.hi.x && a.lo.y - margin <= b.hi.y &&
         b.lo.y - margin <= a.hi.y;
}

} // namespace

Stepper::Stepper(PhysicsParams params) : params_(params) {}

void Stepper::load(const WorldState& world)
{
  bodies_.resize(world.bodies.size());
  for (std::size_t i = 0; i < world.bodies.size(); ++i)
  {
    const Body& src = world.bodies[i];
    SolverBody& b = bodies_[i];
    b.position = src.position();
    b.angle = src.pose.angle;
    b.radius = bounding_radius(src.shape);
    if (src.dynamic)
    {
      b.velocity = {src.velocity.vx, src.velocity.vy};
      b.omega = src.velocity.omega;
      b.mass = src.mass;
      b.inertia = src.inertia;
      b.inv_mass = 1.0 / src.mass;
      b.inv_inertia = src.inertia > 0.0 ? 1.0 / src.inertia : 0.0;
      b.drift = {0.0, 0.5 * params_.gravity * params_.dt};
    }
    else
    {
      b.velocity = {};
      b.omega = 0.0;
      b.mass = 0.0;
      b.inertia = 0.0;
      b.inv_mass = 0.0;
      b.inv_inertia = 0.0;
      b.drift = {};
    }
    b.start_velocity = b.velocity;
    b.start_omega = b.omega;
  }
}

void Stepper::collide(const WorldState& world, double margin_override)
{
  manifolds_.clear();
  const std::size_t n = world.bodies.size();
  std::vector<Aabb> boxes(n);
  std::vector<PrimitiveList> prims(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    boxes[i] = bounding_box(world.bodies[i]);
    prims[i] = primitives(world.bodies[i]);
  }
  // A body can be pushed by any neighbour it may reach this step, so each pair's margin
  // also covers the fastest neighbour of either body.
  std::vector<double> speed(n, 0.0);
  std::vector<double> reach(n, 0.0);
  if (margin_override < 0.0)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      speed[i] = point_speed(bodies_[i]);
    }
    for (std::size_t i = 0; i < n; ++i)
    {
      for (std::size_t j = i + 1; j < n; ++j)
      {
        const double m = params_.touch_tolerance + (speed[i] + speed[j]) * params_.dt;
        if (aabbs_touch(boxes[i], boxes[j], m))
        {
          reach[i] = std::max(reach[i], speed[j]);
          reach[j] = std::max(reach[j], speed[i]);
        }
      }
    }
  }
  auto margin_for = [&](std::size_t i, std::size_t j) {
    if (margin_override >= 0.0)
    {
      return margin_override;
    }
    double s = speed[i] + reach[i];
    if (j < n)
    {
      s += speed[j] + reach[j];
    }
    return params_.touch_tolerance + s * params_.dt;
  };

  for (std::size_t i = 0; i < n; ++i)
  {
    const bool dyn_i = world.bodies[i].dynamic;
    for (std::size_t j = i + 1; j < n; ++j)
    {
      if (!dyn_i && !world.bodies[j].dynamic)
      {
        continue;
      }
      const double margin = margin_for(i, j);
      if (!aabbs_touch(boxes[i], boxes[j], margin))
      {
        continue;
      }
      for (const Primitive& pa : prims[i])
      {
        for (const Primitive& pb : prims[j])
        {
          Manifold m;
          m.a = static_cast<int>(i);
          m.b = static_cast<int>(j);
          if (collide_primitives(pa, pb, margin, m))
          {
            manifolds_.push_back(m);
          }
        }
      }
    }
    if (!params_.walls || !dyn_i)
    {
      continue;
    }
    const double margin = margin_for(i, n);
    for (const WallPlane& wall : wall_planes(world))
    {
      for (const Primitive& p : prims[i])
      {
        Manifold m;
        m.a = static_cast<int>(i);
        m.b = wall.id;
        if (collide_wall(p, wall, margin, m))
        {
          manifolds_.push_back(m);
        }
      }
    }
  }
}

void Stepper::prepare()
{
  static const SolverBody kWall{};
  const double dt = params_.dt;
  for (Manifold& m : manifolds_)
  {
    const SolverBody& a = bodies_[m.a];
    const SolverBody& b = m.b >= 0 ? bodies_[m.b] : kWall;
    const Vec2 n = m.normal;
    const Vec2 t{n.y, -n.x};
    for (int k = 0; k < m.count; ++k)
    {
      ManifoldPoint& p = m.points[k];
      p.ra = p.point - a.position;
      p.rb = m.b >= 0 ? p.point - b.position : Vec2{};
      const double rna = cross(p.ra, n);
      const double rnb = cross(p.rb, n);
      const double kn = a.inv_mass + b.inv_mass + a.inv_inertia * rna * rna + b.inv_inertia * rnb * rnb;
      p.normal_mass = kn > 0.0 ? 1.0 / kn : 0.0;
      const double rta = cross(p.ra, t);
      const double rtb = cross(p.rb, t);
      const double kt = a.inv_mass + b.inv_mass + a.inv_inertia * rta * rta + b.inv_inertia * rtb * rtb;
      p.tangent_mass = kt > 0.0 ? 1.0 / kt : 0.0;

      const Vec2 dv = (b.velocity + cross(b.omega, p.rb) + b.drift) -
                      (a.velocity + cross(a.omega, p.ra) + a.drift);
      const double vn = dot(dv, n);
      const bool bounce = vn < -params_.restitution_threshold;
      if (p.separation > params_.linear_slop)
      {
        // Speculative: allow closing exactly the gap during this step. Any bounce waits
        // until the bodies actually meet.
        p.target = -p.separation / dt;
      }
      else if (bounce)
      {
        p.target = -params_.restitution * vn;
      }
      else
      {
        p.target = p.separation > 0.0 ? -p.separation / dt : 0.0;
      }
      p.normal_impulse = 0.0;
      p.tangent_impulse = 0.0;
    }
    m.block = false;
    if (m.count == 2)
    {
      const ManifoldPoint& p1 = m.points[0];
      const ManifoldPoint& p2 = m.points[1];
      const double rn1a = cross(p1.ra, n), rn1b = cross(p1.rb, n);
      const double rn2a = cross(p2.ra, n), rn2b = cross(p2.rb, n);
      m.k11 = a.inv_mass + b.inv_mass + a.inv_inertia * rn1a * rn1a + b.inv_inertia * rn1b * rn1b;
      m.k22 = a.inv_mass + b.inv_mass + a.inv_inertia * rn2a * rn2a + b.inv_inertia * rn2b * rn2b;
      m.k12 = a.inv_mass + b.inv_mass + a.inv_inertia * rn1a * rn2a + b.inv_inertia * rn1b * rn2b;
      const double det = m.k11 * m.k22 - m.k12 * m.k12;
      if (m.k11 * m.k11 < 1000.0 * det && det > 0.0)
      {
        m.block = true;
        const double inv = 1.0 / det;
        m.m11 = m.k22 * inv;
        m.m22 = m.k11 * inv;
        m.m12 = -m.k12 * inv;
      }
    }
  }
}

void Stepper::solve()
{
  SolverBody wall{};
  for (int it = 0; it < params_.iterations; ++it)
  {
    for (Manifold& m : manifolds_)
    {
      SolverBody& a = bodies_[m.a];
      SolverBody& b = m.b >= 0 ? bodies_[m.b] : wall;
      const Vec2 n = m.normal;
      const Vec2 t{n.y, -n.x};
      auto relative = [&](const ManifoldPoint& p) {
        return (b.velocity + cross(b.omega, p.rb) + b.drift) -
               (a.velocity + cross(a.omega, p.ra) + a.drift);
      };
      auto apply = [&](const ManifoldPoint& p, Vec2 impulse) {
        a.velocity -= impulse * a.inv_mass;
        a.omega -= a.inv_inertia * cross(p.ra, impulse);
        b.velocity += impulse * b.inv_mass;
        b.omega += b.inv_inertia * cross(p.rb, impulse);
      };

      for (int k = 0; k < m.count; ++k)
      {
        ManifoldPoint& p = m.points[k];
        const double vt = dot(relative(p), t);
        const double limit = params_.friction * p.normal_impulse;
        const double updated = std::clamp(p.tangent_impulse - p.tangent_mass * vt, -limit, limit);
        const double delta = updated - p.tangent_impulse;
        p.tangent_impulse = updated;
        apply(p, t * delta);
      }

      if (!m.block)
      {
        for (int k = 0; k < m.count; ++k)
        {
          ManifoldPoint& p = m.points[k];
          const double vn = dot(relative(p), n);
          const double updated = std::max(p.normal_impulse + p.normal_mass * (p.target - vn), 0.0);
          const double delta = updated - p.normal_impulse;
          p.normal_impulse = updated;
          apply(p, n * delta);
        }
        continue;
      }

      // Two-point block solve of the normal LCP.
      ManifoldPoint& p1 = m.points[0];
      ManifoldPoint& p2 = m.points[1];
      const double a1 = p1.normal_impulse;
      const double a2 = p2.normal_impulse;
      const double b1 = dot(relative(p1), n) - p1.target - (m.k11 * a1 + m.k12 * a2);
      const double b2 = dot(relative(p2), n) - p2.target - (m.k12 * a1 + m.k22 * a2);
      double x1 = -(m.m11 * b1 + m.m12 * b2);
      double x2 = -(m.m12 * b1 + m.m22 * b2);
      bool found = x1 >= 0.0 && x2 >= 0.0;
      if (!found)
      {
        x1 = -b1 / m.k11;
        x2 = 0.0;
        found = x1 >= 0.0 && m.k12 * x1 + b2 >= 0.0;
      }
      if (!found)
      {
        x1 = 0.0;
        x2 = -b2 / m.k22;
        found = x2 >= 0.0 && m.k12 * x2 + b1 >= 0.0;
      }
      if (!found)
      {
        x1 = 0.0;
        x2 = 0.0;
        found = b1 >= 0.0 && b2 >= 0.0;
      }
      if (found)
      {
        apply(p1, n * (x1 - a1));
        apply(p2, n * (x2 - a2));
        p1.normal_impulse = x1;
        p2.normal_impulse = x2;
      }
    }
  }
}

void Stepper::store(WorldState& world) const
{
  for (std::size_t i = 0; i < world.bodies.size(); ++i)
  {
    Body& dst = world.bodies[i];
    if (!dst.dynamic)
    {
      continue;
    }
    const SolverBody& b = bodies_[i];
    dst.pose = {b.position.x, b.position.y, b.angle};
    dst.velocity = {b.velocity.x, b.velocity.y, b.omega};
  }
}

void Stepper::guard_energy()
{
  // Energy change of the step as a function of s, where s blends from the gravity-only
  // velocities (s = 0, never gains energy) to the solved ones (s = 1).
  const double g = params_.gravity;
  const double dt = params_.dt;
  double qa = 0.0, qb = 0.0, qc = 0.0;
  for (const SolverBody& b : bodies_)
  {
    if (b.inv_mass == 0.0)
    {
      continue;
    }
    const Vec2 free{b.start_velocity.x, b.start_velocity.y - g * dt};
    const Vec2 d = b.velocity - free;
    const double dw = b.omega - b.start_omega;
    qa += 0.5 * b.mass * dot(d, d) + 0.5 * b.inertia * dw * dw;
    qb += b.mass * dot(free, d) + b.inertia * b.start_omega * dw + b.mass * g * dt * d.y;
    qc += 0.5 * b.mass * (dot(free, free) - dot(b.start_velocity, b.start_velocity)) +
          b.mass * g * dt * (free.y + b.drift.y);
  }
  if (qa + qb + qc <= 0.0 || qa <= 0.0)
  {
    return;
  }
  double s = 0.0;
  if (qc < 0.0)
  {
    s = std::clamp((-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa), 0.0, 1.0);
  }
  for (SolverBody& b : bodies_)
  {
    if (b.inv_mass == 0.0)
    {
      continue;
    }
    const Vec2 free{b.start_velocity.x, b.start_velocity.y - g * dt};
    b.velocity = free + (b.velocity - free) * s;
    b.omega = b.start_omega + (b.omega - b.start_omega) * s;
  }
}

double Stepper::energy() const
{
  double e = 0.0;
  for (const SolverBody& b : bodies_)
  {
    e += 0.5 * b.mass * dot(b.velocity, b.velocity) + 0.5 * b.inertia * b.omega * b.omega +
         b.mass * params_.gravity * b.position.y;
  }
  return e;
}

bool Stepper::needs_correction() const
{
  const double dt = params_.dt;
  for (const Manifold& m : manifolds_)
  {
    const SolverBody& a = bodies_[m.a];
    static const SolverBody kWall{};
    const SolverBody& b = m.b >= 0 ? bodies_[m.b] : kWall;
    for (int k = 0; k < m.count; ++k)
    {
      const ManifoldPoint& p = m.points[k];
      const Vec2 dv = (b.velocity + cross(b.omega, p.rb)) - (a.velocity + cross(a.omega, p.ra));
      if (p.separation + dot(dv, m.normal) * dt < -params_.linear_slop)
      {
        return true;
      }
    }
  }
  return false;
}

void Stepper::correct_positions(WorldState& world, double budget)
{
  collide(world, params_.touch_tolerance);
  const std::size_t n = bodies_.size();
  std::vector<Vec2> shift(n);
  std::vector<double> turn(n, 0.0);
  static const SolverBody kWall{};
  for (int it = 0; it < kCorrectionIterations; ++it)
  {
    for (const Manifold& m : manifolds_)
    {
      const SolverBody& a = bodies_[m.a];
      const SolverBody& b = m.b >= 0 ? bodies_[m.b] : kWall;
      const Vec2 zero{};
      const Vec2 shift_b = m.b >= 0 ? shift[m.b] : zero;
      const double turn_b = m.b >= 0 ? turn[m.b] : 0.0;
      for (int k = 0; k < m.count; ++k)
      {
        const ManifoldPoint& p = m.points[k];
        const Vec2 ra = p.point - a.position;
        const Vec2 rb = m.b >= 0 ? p.point - b.position : Vec2{};
        const Vec2 moved = (shift_b + cross(turn_b, rb)) - (shift[m.a] + cross(turn[m.a], ra));
        const double sep = p.separation + dot(moved, m.normal);
        const double c = std::clamp(params_.baumgarte * (sep + params_.linear_slop),
                                    -kMaxCorrection, 0.0);
        if (c >= 0.0)
        {
          continue;
        }
        const double rna = cross(ra, m.normal);
        const double rnb = cross(rb, m.normal);
        const double kn = a.inv_mass + b.inv_mass + a.inv_inertia * rna * rna +
                          b.inv_inertia * rnb * rnb;
        if (kn <= 0.0)
        {
          continue;
        }
        const Vec2 impulse = m.normal * (-c / kn);
        shift[m.a] -= impulse * a.inv_mass;
        turn[m.a] -= a.inv_inertia * cross(ra, impulse);
        if (m.b >= 0)
        {
          shift[m.b] += impulse * b.inv_mass;
          turn[m.b] += b.inv_inertia * cross(rb, impulse);
        }
      }
    }
  }
  // Raising bodies out of each other costs potential energy; never spend more than the
  // step has already dissipated.
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    cost += bodies_[i].mass * params_.gravity * shift[i].y;
  }
  double scale = 1.0;
  if (cost > budget)
  {
    scale = budget > 0.0 ? budget / cost : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i)
  {
    bodies_[i].position += shift[i] * scale;
    bodies_[i].angle += turn[i] * scale;
  }
}

void Stepper::step(WorldState& world)
{
  const double dt = params_.dt;
  if (asleep_)
  {
    world.time += dt;
    return;
  }
  load(world);
  const double start_energy = energy();
  for (std::size_t i = 0; i < bodies_.size(); ++i)
  {
    if (world.bodies[i].dynamic)
    {
      bodies_[i].velocity.y -= params_.gravity * dt;
    }
  }
  collide(world);
  // Exact-gravity drift is only valid for bodies in free flight; bodies with candidate
  // contacts integrate semi-implicitly so the contact solve never adds energy.
  for (const Manifold& m : manifolds_)
  {
    bodies_[m.a].drift = {};
    if (m.b >= 0)
    {
      bodies_[m.b].drift = {};
    }
  }
  prepare();
  solve();
  guard_energy();
  for (std::size_t i = 0; i < bodies_.size(); ++i)
  {
    if (!world.bodies[i].dynamic)
    {
      continue;
    }
    SolverBody& b = bodies_[i];
    const double speed = length(b.velocity);
    if (speed > params_.speed_cap)
    {
      b.velocity = b.velocity * (params_.speed_cap / speed);
    }
    if (b.radius > 0.0 && std::abs(b.omega) * b.radius > params_.speed_cap)
    {
      b.omega = std::copysign(params_.speed_cap / b.radius, b.omega);
    }
  }
  const bool correct = needs_correction();
  for (std::size_t i = 0; i < bodies_.size(); ++i)
  {
    if (world.bodies[i].dynamic)
    {
      SolverBody& b = bodies_[i];
      b.position += (b.velocity + b.drift) * dt;
      b.angle += b.omega * dt;
    }
  }
  if (correct)
  {
    store(world);
    correct_positions(world, start_energy - energy());
  }
  for (std::size_t i = 0; i < bodies_.size(); ++i)
  {
    const SolverBody& b = bodies_[i];
    if (!std::isfinite(b.position.x) || !std::isfinite(b.position.y) || !std::isfinite(b.angle) ||
        !std::isfinite(b.velocity.x) || !std::isfinite(b.velocity.y) || !std::isfinite(b.omega))
    {
      throw Error(ErrorCode::NumericalDivergence,
                  "body " + std::to_string(world.bodies[i].id) + " left the finite range");
    }
  }
  store(world);
  world.time += dt;
  update_sleep(world);
}

void Stepper::update_sleep(WorldState& world)
{
  if (params_.sleep_time <= 0.0)
  {
    return;
  }
  double fastest = 0.0;
  for (std::size_t i = 0; i < bodies_.size(); ++i)
  {
    if (world.bodies[i].dynamic)
    {
      const SolverBody& b = bodies_[i];
      fastest = std::max(fastest, length(b.velocity) + std::abs(b.omega) * b.radius);
    }
  }
  quiet_steps_ = fastest < params_.sleep_speed ? quiet_steps_ + 1 : 0;
  if (static_cast<double>(quiet_steps_) * params_.dt >= params_.sleep_time - 1e-12)
  {
    asleep_ = true;
    for (Body& b : world.bodies)
    {
      b.velocity = {};
    }
  }
}

std::vector<Contact> contacts(const WorldState& world, const PhysicsParams& params)
{
  Stepper stepper(params);
  WorldState copy = world;
  // Loading only fills the solver bodies; no step is taken.
  stepper.collide(copy, params.touch_tolerance);
  std::vector<Contact> out;
  for (const Stepper::Manifold& m : stepper.manifolds())
  {
    const int id_a = world.bodies[m.a].id;
    const int id_b = m.b >= 0 ? world.bodies[m.b].id : m.b;
    for (int k = 0; k < m.count; ++k)
    {
      const Stepper::ManifoldPoint& p = m.points[k];
      if (p.separation > params.touch_tolerance)
      {
        continue;
      }
      Contact c{id_a, id_b, p.point, m.normal, -p.separation};
      if (m.b >= 0 && id_b < id_a)
      {
        std::swap(c.body_a, c.body_b);
        c.normal = -c.normal;
      }
      out.push_back(c);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Contact& x, const Contact& y) {
    if (x.body_a != y.body_a)
    {
      return x.body_a < y.body_a;
    }
    return x.body_b < y.body_b;
  });
  return out;
}

WorldState step(const WorldState& world, double dt, const PhysicsParams& params)
{
  if (!(dt > 0.0))
  {
    throw Error(ErrorCode::ConfigInvalid, "dt must be positive");
  }
  PhysicsParams p = params;
  p.dt = dt;
  Stepper stepper(p);
  WorldState next = world;
  stepper.step(next);
  return next;
}

bool goal_contact(const WorldState& world, const Goal& goal, const PhysicsParams& params)
{
  const Body* subject = world.find(goal.subject_id);
  const Body* object = world.find(goal.object_id);
  if (subject == nullptr || object == nullptr)
  {
    throw Error(ErrorCode::BadGoal, "goal refers to a missing body");
  }
  return distance(*subject, *object) <= params.touch_tolerance;
}

namespace {

void snapshot(const WorldState& world, std::vector<double>& out)
{
  out.clear();
  for (const Body& b : world.bodies)
  {
    out.insert(out.end(), {b.pose.x, b.pose.y, b.pose.angle, b.velocity.vx, b.velocity.vy,
                           b.velocity.omega});
  }
}

} // namespace

SimulationResult simulate(const WorldState& world, const Goal& goal, double time_limit,
                          int frame_stride, const PhysicsParams& params)
{
  validate_world(world);
  validate_goal(world, goal);
  const double dt = params.dt;
  const long dwell_steps = std::lround(goal.dwell / dt);
  const long total_steps = static_cast<long>(std::floor(time_limit / dt + 1e-9));
  const double t0 = world.time;

  Stepper stepper(params);
  WorldState state = world;
  SimulationResult result;
  if (frame_stride > 0)
  {
    result.frames.push_back(state);
  }
  // Only the subject and object matter for the goal test; look them up once.
  std::size_t subject = 0, object = 0;
  for (std::size_t i = 0; i < state.bodies.size(); ++i)
  {
    if (state.bodies[i].id == goal.subject_id)
    {
      subject = i;
    }
    if (state.bodies[i].id == goal.object_id)
    {
      object = i;
    }
  }

  std::vector<double> before, after;
  long n = 0;
  long start = -1;
  for (;; ++n)
  {
    const bool touching =
      distance(state.bodies[subject], state.bodies[object]) <= params.touch_tolerance;
    if (touching)
    {
      if (start < 0)
      {
        start = n;
      }
      if (n - start >= dwell_steps)
      {
        result.solved = true;
        break;
      }
    }
    else
    {
      start = -1;
    }
    if (n >= total_steps)
    {
      break;
    }
    snapshot(state, before);
    stepper.step(state);
    state.time = t0 + static_cast<double>(n + 1) * dt;
    if (frame_stride > 0 && (n + 1) % frame_stride == 0)
    {
      result.frames.push_back(state);
    }
    snapshot(state, after);
    if (after == before)
    {
      // Stepping is a pure function of poses and velocities, so nothing changes from here on.
      long last = total_steps;
      if (touching)
      {
        result.solved = start + dwell_steps <= total_steps;
        last = result.solved ? start + dwell_steps : total_steps;
      }
      for (long k = n + 2; k <= last; ++k)
      {
        if (frame_stride > 0 && k % frame_stride == 0)
        {
          state.time = t0 + static_cast<double>(k) * dt;
          result.frames.push_back(state);
        }
      }
      n = last;
      state.time = t0 + static_cast<double>(n) * dt;
      break;
    }
  }
  result.end_time = static_cast<double>(n) * dt;
  if (result.solved)
  {
    result.first_satisfied_at = static_cast<double>(start) * dt;
  }
  if (result.frames.empty() || result.frames.back().time != state.time)
  {
    result.frames.push_back(state);
  }
  return result;
}

double total_energy(const WorldState& world, const PhysicsParams& params)
{
  double e = 0.0;
  for (const Body& b : world.bodies)
  {
    if (!b.dynamic)
    {
      continue;
    }
    const double v2 = b.velocity.vx * b.velocity.vx + b.velocity.vy * b.velocity.vy;
    e += 0.5 * b.mass * v2 + 0.5 * b.inertia * b.velocity.omega * b.velocity.omega +
         b.mass * params.gravity * b.pose.y;
  }
  return e;
}

} // namespace phyre
