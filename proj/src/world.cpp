#include "phyre/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "phyre/error.hpp"

namespace phyre {

namespace {

constexpr double kBoundsSlack = 1e-9;

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void box_vertices(const Primitive& box, Vec2 out[4])
{
  const Vec2 ax = box.rotation.axis_x() * box.half_width;
  const Vec2 ay = box.rotation.axis_y() * box.half_height;
  out[0] = box.center - ax - ay;
  out[1] = box.center + ax - ay;
  out[2] = box.center + ax + ay;
  out[3] = box.center - ax + ay;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b)
{
  const Vec2 ab = b - a;
  const double len2 = length_squared(ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return length(p - (a + ab * t));
}

/// Projection interval of a box onto a unit axis.
void project(const Primitive& box, Vec2 axis, double& lo, double& hi)
{
  const double c = dot(box.center, axis);
  const double r = std::abs(dot(box.rotation.axis_x(), axis)) * box.half_width +
                   std::abs(dot(box.rotation.axis_y(), axis)) * box.half_height;
  lo = c - r;
  hi = c + r;
}

double box_box_separation(const Primitive& a, const Primitive& b)
{
  const Vec2 axes[4] = {a.rotation.axis_x(), a.rotation.axis_y(), b.rotation.axis_x(),
                        b.rotation.axis_y()};
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec2& axis : axes)
  {
    double alo, ahi, blo, bhi;
    project(a, axis, alo, ahi);
    project(b, axis, blo, bhi);
    const double sep = std::max(blo - ahi, alo - bhi);
    best = std::max(best, sep);
  }
  if (best <= 0.0)
  {
    return best;
  }
  // Separated: the exact gap between two convex polygons is attained at a vertex.
  Vec2 va[4], vb[4];
  box_vertices(a, va);
  box_vertices(b, vb);
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i)
  {
    for (int j = 0; j < 4; ++j)
    {
      d = std::min(d, point_segment_distance(va[i], vb[j], vb[(j + 1) % 4]));
      d = std::min(d, point_segment_distance(vb[i], va[j], va[(j + 1) % 4]));
    }
  }
  return d;
}

double circle_box_separation(const Primitive& circle, const Primitive& box)
{
  bool inside = false;
  const Vec2 q = closest_point_on_box(box, circle.center, &inside);
  const double d = length(circle.center - q);
  return inside ? -d - circle.radius : d - circle.radius;
}

bool finite(const Pose& p) { return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.angle); }

} // namespace

std::string_view to_string(BodyKind kind)
{
  switch (kind)
  {
  case BodyKind::Ball: return "Ball";
  case BodyKind::Bar: return "Bar";
  case BodyKind::StandingStick: return "StandingStick";
  case BodyKind::Jar: return "Jar";
  case BodyKind::Custom: return "Custom";
  }
  return "Custom";
}

std::string_view to_string(Role role)
{
  switch (role)
  {
  case Role::GoalSubject: return "GoalSubject";
  case Role::GoalObject: return "GoalObject";
  case Role::Confounding: return "Confounding";
  case Role::UserPlaced: return "UserPlaced";
  }
  return "Confounding";
}

BodyKind body_kind_from_string(std::string_view name)
{
  for (BodyKind k : {BodyKind::Ball, BodyKind::Bar, BodyKind::StandingStick, BodyKind::Jar,
                     BodyKind::Custom})
  {
    if (to_string(k) == name)
    {
      return k;
    }
  }
  throw Error(ErrorCode::ParseError, "unknown body kind '" + std::string(name) + "'");
}

Role role_from_string(std::string_view name)
{
  for (Role r : {Role::GoalSubject, Role::GoalObject, Role::Confounding, Role::UserPlaced})
  {
    if (to_string(r) == name)
    {
      return r;
    }
  }
  throw Error(ErrorCode::ParseError, "unknown role '" + std::string(name) + "'");
}

const Body* WorldState::find(int id) const
{
  for (const Body& b : bodies)
  {
    if (b.id == id)
    {
      return &b;
    }
  }
  return nullptr;
}

Body* WorldState::find(int id)
{
  for (Body& b : bodies)
  {
    if (b.id == id)
    {
      return &b;
    }
  }
  return nullptr;
}

void validate_shape(const Shape& shape)
{
  auto check_box = [](const Box& b) {
    if (!(b.half_width > 0.0) || !(b.half_height > 0.0) || !std::isfinite(b.half_width) ||
        !std::isfinite(b.half_height))
    {
      throw Error(ErrorCode::BadShape, "box half extents must be positive and finite");
    }
  };
  std::visit(Overloaded{
               [](const Circle& c) {
                 if (!(c.radius > 0.0) || !std::isfinite(c.radius))
                 {
                   throw Error(ErrorCode::BadShape, "circle radius must be positive and finite");
                 }
               },
               check_box,
               [&](const Compound& c) {
                 if (c.parts.empty())
                 {
                   throw Error(ErrorCode::BadShape, "compound needs at least one part");
                 }
                 for (const BoxPart& p : c.parts)
                 {
                   check_box(p.box);
                   if (!std::isfinite(p.offset.x) || !std::isfinite(p.offset.y))
                   {
                     throw Error(ErrorCode::BadShape, "compound part offsets must be finite");
                   }
                 }
               },
             },
             shape);
}

MassProperties mass_properties(const Shape& shape)
{
  auto box_props = [](const Box& b, Vec2 offset) {
    const double m = 4.0 * b.half_width * b.half_height * kDensity;
    const double i = m * (b.half_width * b.half_width + b.half_height * b.half_height) / 3.0;
    return MassProperties{m, i, offset};
  };
  return std::visit(
    Overloaded{
      [](const Circle& c) {
        const double m = std::numbers::pi * c.radius * c.radius * kDensity;
        return MassProperties{m, 0.5 * m * c.radius * c.radius, {}};
      },
      [&](const Box& b) { return box_props(b, {}); },
      [&](const Compound& c) {
        MassProperties total;
        Vec2 moment;
        for (const BoxPart& p : c.parts)
        {
          const MassProperties part = box_props(p.box, p.offset);
          total.mass += part.mass;
          moment += p.offset * part.mass;
        }
        total.centroid = moment * (1.0 / total.mass);
        for (const BoxPart& p : c.parts)
        {
          const MassProperties part = box_props(p.box, p.offset);
          total.inertia += part.inertia + part.mass * length_squared(p.offset - total.centroid);
        }
        return total;
      },
    },
    shape);
}

Shape vocabulary_shape(BodyKind kind, double scale)
{
  if (!(scale > 0.0 && scale <= 1.0))
  {
    throw Error(ErrorCode::BadScale, "scale must lie in (0, 1]");
  }
  switch (kind)
  {
  case BodyKind::Ball: return Circle{scale * kMaxBallRadius};
  case BodyKind::Bar: return Box{scale * kWorldSize / 2.0, kBarHalfThickness};
  case BodyKind::StandingStick: return Box{kBarHalfThickness, scale * kWorldSize / 2.0};
  case BodyKind::Jar:
  {
    const double w = scale * kWorldSize / 2.0;
    const double h = w;
    const double t = kJarWallFraction * w;
    Compound jar;
    jar.parts.push_back({Box{w / 2.0, t / 2.0}, {0.0, -h / 2.0 + t / 2.0}});
    const double wall_hh = (h - t) / 2.0;
    const double wall_y = -h / 2.0 + t + wall_hh;
    jar.parts.push_back({Box{t / 2.0, wall_hh}, {-(w / 2.0 - t / 2.0), wall_y}});
    jar.parts.push_back({Box{t / 2.0, wall_hh}, {w / 2.0 - t / 2.0, wall_y}});
    const Vec2 c = mass_properties(jar).centroid;
    for (BoxPart& p : jar.parts)
    {
      p.offset -= c;
    }
    return jar;
  }
  case BodyKind::Custom: break;
  }
  throw Error(ErrorCode::BadShape, "custom bodies have no vocabulary shape");
}

Body make_body(Shape shape, Vec2 position, double angle, bool dynamic, Role role, int id)
{
  validate_shape(shape);
  const MassProperties mp = mass_properties(shape);
  Body b;
  b.id = id;
  b.shape = std::move(shape);
  b.pose = {position.x, position.y, angle};
  b.dynamic = dynamic;
  b.mass = mp.mass;
  b.inertia = mp.inertia;
  b.role = role;
  return b;
}

Body body_from_vocabulary(BodyKind kind, double scale, Vec2 position, double angle, bool dynamic,
                          Role role, int id)
{
  Body b = make_body(vocabulary_shape(kind, scale), position, angle, dynamic, role, id);
  b.kind = kind;
  b.scale = scale;
  if (!inside_bounds(b))
  {
    throw Error(ErrorCode::OutOfBounds, std::string(to_string(kind)) + " extends past the world bounds");
  }
  return b;
}

PrimitiveList primitives(const Body& body)
{
  PrimitiveList out;
  const Transform xf = body.transform();
  std::visit(Overloaded{
               [&](const Circle& c) {
                 Primitive& p = out.items[out.count++];
                 p.is_circle = true;
                 p.center = xf.position;
                 p.rotation = xf.rotation;
                 p.radius = c.radius;
               },
               [&](const Box& b) {
                 Primitive& p = out.items[out.count++];
                 p.is_circle = false;
                 p.center = xf.position;
                 p.rotation = xf.rotation;
                 p.half_width = b.half_width;
                 p.half_height = b.half_height;
               },
               [&](const Compound& c) {
                 for (const BoxPart& part : c.parts)
                 {
                   if (out.count == 3)
                   {
                     throw Error(ErrorCode::BadShape, "compounds are limited to three parts");
                   }
                   Primitive& p = out.items[out.count++];
                   p.is_circle = false;
                   p.center = xf.apply(part.offset);
                   p.rotation = xf.rotation;
                   p.half_width = part.box.half_width;
                   p.half_height = part.box.half_height;
                 }
               },
             },
             body.shape);
  return out;
}

Aabb bounding_box(const Body& body)
{
  Aabb box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
           {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const Primitive& p : primitives(body))
  {
    Vec2 ext;
    if (p.is_circle)
    {
      ext = {p.radius, p.radius};
    }
    else
    {
      const double c = std::abs(p.rotation.c);
      const double s = std::abs(p.rotation.s);
      ext = {c * p.half_width + s * p.half_height, s * p.half_width + c * p.half_height};
    }
    box.lo.x = std::min(box.lo.x, p.center.x - ext.x);
    box.lo.y = std::min(box.lo.y, p.center.y - ext.y);
    box.hi.x = std::max(box.hi.x, p.center.x + ext.x);
    box.hi.y = std::max(box.hi.y, p.center.y + ext.y);
  }
  return box;
}

double bounding_radius(const Shape& shape)
{
  return std::visit(Overloaded{
                      [](const Circle& c) { return c.radius; },
                      [](const Box& b) { return std::hypot(b.half_width, b.half_height); },
                      [](const Compound& c) {
                        double r = 0.0;
                        for (const BoxPart& p : c.parts)
                        {
                          r = std::max(r, length(p.offset) +
                                            std::hypot(p.box.half_width, p.box.half_height));
                        }
                        return r;
                      },
                    },
                    shape);
}

Vec2 closest_point_on_box(const Primitive& box, Vec2 point, bool* inside)
{
  const Vec2 local = box.rotation.apply_inverse(point - box.center);
  Vec2 q{std::clamp(local.x, -box.half_width, box.half_width),
         std::clamp(local.y, -box.half_height, box.half_height)};
  const bool is_inside = std::abs(local.x) < box.half_width && std::abs(local.y) < box.half_height;
  if (is_inside)
  {
    // Project to the nearest face.
    const double dx = box.half_width - std::abs(local.x);
    const double dy = box.half_height - std::abs(local.y);
    if (dx <= dy)
    {
      q.x = local.x >= 0.0 ? box.half_width : -box.half_width;
    }
    else
    {
      q.y = local.y >= 0.0 ? box.half_height : -box.half_height;
    }
  }
  if (inside != nullptr)
  {
    *inside = is_inside;
  }
  return box.center + box.rotation.apply(q);
}

bool contains_point(const Primitive& prim, Vec2 point)
{
  if (prim.is_circle)
  {
    return length_squared(point - prim.center) <= prim.radius * prim.radius;
  }
  const Vec2 local = prim.rotation.apply_inverse(point - prim.center);
  return std::abs(local.x) <= prim.half_width && std::abs(local.y) <= prim.half_height;
}

bool contains_point(const Body& body, Vec2 point)
{
  for (const Primitive& p : primitives(body))
  {
    if (contains_point(p, point))
    {
      return true;
    }
  }
  return false;
}

double signed_separation(const Primitive& a, const Primitive& b)
{
  if (a.is_circle && b.is_circle)
  {
    return length(a.center - b.center) - a.radius - b.radius;
  }
  if (a.is_circle)
  {
    return circle_box_separation(a, b);
  }
  if (b.is_circle)
  {
    return circle_box_separation(b, a);
  }
  return box_box_separation(a, b);
}

double signed_separation(const Body& a, const Body& b)
{
  double best = std::numeric_limits<double>::infinity();
  const PrimitiveList pa = primitives(a);
  const PrimitiveList pb = primitives(b);
  for (const Primitive& x : pa)
  {
    for (const Primitive& y : pb)
    {
      best = std::min(best, signed_separation(x, y));
    }
  }
  return best;
}

double distance(const Body& a, const Body& b) { return std::max(0.0, signed_separation(a, b)); }

bool overlap(const Body& a, const Body& b) { return signed_separation(a, b) < -kOverlapTolerance; }

bool inside_bounds(const Body& body, double width, double height)
{
  const Aabb box = bounding_box(body);
  return box.lo.x >= -kBoundsSlack && box.lo.y >= -kBoundsSlack && box.hi.x <= width + kBoundsSlack &&
         box.hi.y <= height + kBoundsSlack;
}

void validate_world(const WorldState& world)
{
  std::set<int> ids;
  for (const Body& b : world.bodies)
  {
    if (!ids.insert(b.id).second)
    {
      throw Error(ErrorCode::BadShape, "duplicate body id " + std::to_string(b.id));
    }
    validate_shape(b.shape);
    if (!finite(b.pose))
    {
      throw Error(ErrorCode::NumericalDivergence, "non-finite pose for body " + std::to_string(b.id));
    }
    if (b.dynamic && !(b.mass > 0.0))
    {
      throw Error(ErrorCode::BadShape, "dynamic body needs positive mass");
    }
    if (!b.dynamic && (b.velocity != Velocity{}))
    {
      throw Error(ErrorCode::BadShape, "static body " + std::to_string(b.id) + " has a velocity");
    }
  }
}

void validate_goal(const WorldState& world, const Goal& goal)
{
  if (goal.subject_id == goal.object_id)
  {
    throw Error(ErrorCode::BadGoal, "goal subject and object must differ");
  }
  if (world.find(goal.subject_id) == nullptr || world.find(goal.object_id) == nullptr)
  {
    throw Error(ErrorCode::BadGoal, "goal refers to a missing body");
  }
  if (!(goal.dwell >= 0.0))
  {
    throw Error(ErrorCode::BadGoal, "dwell must be non-negative");
  }
}

} // namespace phyre
