#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "phyre/geometry.hpp"

namespace phyre {

inline constexpr double kWorldSize = 256.0;
/// Largest radius a vocabulary ball (or a placed ball) can have.
inline constexpr double kMaxBallRadius = 32.0;
/// Strict-interior tolerance for the overlap predicate.
inline constexpr double kOverlapTolerance = 1e-6;
inline constexpr double kBarHalfThickness = 3.0;
inline constexpr double kJarWallFraction = 0.15;
inline constexpr double kDensity = 1.0;

enum class BodyKind
{
  Ball,
  Bar,
  StandingStick,
  Jar,
  Custom,
};

enum class Role
{
  GoalSubject,
  GoalObject,
  Confounding,
  UserPlaced,
};

std::string_view to_string(BodyKind kind);
std::string_view to_string(Role role);
BodyKind body_kind_from_string(std::string_view name);
Role role_from_string(std::string_view name);

struct Circle
{
  double radius = 0.0;
  bool operator==(const Circle&) const = default;
};

struct Box
{
  double half_width = 0.0;
  double half_height = 0.0;
  bool operator==(const Box&) const = default;
};

struct BoxPart
{
  Box box;
  Vec2 offset; ///< relative to the body's centre of mass, in the body frame
  bool operator==(const BoxPart&) const = default;
};

struct Compound
{
  std::vector<BoxPart> parts;
  bool operator==(const Compound&) const = default;
};

using Shape = std::variant<Circle, Box, Compound>;

struct Pose
{
  double x = 0.0;
  double y = 0.0;
  double angle = 0.0;
  bool operator==(const Pose&) const = default;
};

struct Velocity
{
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
  bool operator==(const Velocity&) const = default;
};

/// A rigid body. The pose is the pose of the centre of mass.
struct Body
{
  int id = 0;
  BodyKind kind = BodyKind::Custom;
  double scale = 0.0; ///< vocabulary scale; 0 for custom shapes
  Shape shape;
  Pose pose;
  Velocity velocity;
  bool dynamic = true;
  double mass = 0.0;
  double inertia = 0.0;
  Role role = Role::Confounding;

  Vec2 position() const { return {pose.x, pose.y}; }
  Transform transform() const { return {position(), Rot(pose.angle)}; }
  bool operator==(const Body&) const = default;
};

struct WorldState
{
  std::vector<Body> bodies;
  double width = kWorldSize;
  double height = kWorldSize;
  double time = 0.0;

  const Body* find(int id) const;
  Body* find(int id);
  bool operator==(const WorldState&) const = default;
};

enum class Relation
{
  Touching,
};

struct Goal
{
  int subject_id = 0;
  Relation relation = Relation::Touching;
  int object_id = 1;
  double dwell = 3.0;
  bool operator==(const Goal&) const = default;
};

/// Axis-aligned bounding box.
struct Aabb
{
  Vec2 lo;
  Vec2 hi;
};

/// A single convex piece of a body placed in world space.
struct Primitive
{
  bool is_circle = true;
  Vec2 center;
  Rot rotation;
  double radius = 0.0;
  double half_width = 0.0;
  double half_height = 0.0;
};

/// Up to three primitives; enough for every vocabulary shape.
struct PrimitiveList
{
  Primitive items[3];
  int count = 0;

  const Primitive* begin() const { return items; }
  const Primitive* end() const { return items + count; }
};

/// Builds a body from the shape vocabulary with its centre of mass at `position`.
/// Throws Error{BadScale} for scale outside (0, 1] and Error{OutOfBounds} when the
/// shape does not fit inside the world.
Body body_from_vocabulary(BodyKind kind, double scale, Vec2 position, double angle, bool dynamic,
                          Role role, int id = 0);

/// Builds a body from an explicit shape; mass and inertia come from unit density.
Body make_body(Shape shape, Vec2 position, double angle, bool dynamic, Role role, int id = 0);

/// Shape for a vocabulary entry (centred on its centre of mass).
Shape vocabulary_shape(BodyKind kind, double scale);

struct MassProperties
{
  double mass = 0.0;
  double inertia = 0.0; ///< about the centre of mass
  Vec2 centroid;        ///< in the shape's own frame
};

MassProperties mass_properties(const Shape& shape);
void validate_shape(const Shape& shape);

PrimitiveList primitives(const Body& body);
Aabb bounding_box(const Body& body);
/// Largest distance from the centre of mass to any point of the shape.
double bounding_radius(const Shape& shape);

bool contains_point(const Primitive& prim, Vec2 point);
bool contains_point(const Body& body, Vec2 point);

/// Signed separation between two primitives: the gap when apart, minus the
/// penetration depth when they intersect.
double signed_separation(const Primitive& a, const Primitive& b);
double signed_separation(const Body& a, const Body& b);

/// Exact distance between the closed shapes (0 when they intersect).
double distance(const Body& a, const Body& b);

/// True iff the bodies intersect by more than kOverlapTolerance.
bool overlap(const Body& a, const Body& b);

bool inside_bounds(const Body& body, double width = kWorldSize, double height = kWorldSize);

/// Checks the world invariants (unique ids, finite poses, positive masses, statics at rest).
void validate_world(const WorldState& world);
void validate_goal(const WorldState& world, const Goal& goal);

/// Closest point on a (rotated) box primitive to `point`, and whether `point` is inside.
Vec2 closest_point_on_box(const Primitive& box, Vec2 point, bool* inside = nullptr);

} // namespace phyre
