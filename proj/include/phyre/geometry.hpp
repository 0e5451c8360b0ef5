#pragma once

#include <cmath>

namespace phyre {

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2& operator+=(Vec2 o)
  {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o)
  {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return {v.x * s, v.y * s}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
/// Cross product of a scalar angular rate with a vector (w x v).
constexpr Vec2 cross(double w, Vec2 v) { return {-w * v.y, w * v.x}; }
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline double length(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr double length_squared(Vec2 v) { return dot(v, v); }

/// 2D rotation stored as (cos, sin).
struct Rot
{
  double c = 1.0;
  double s = 0.0;

  Rot() = default;
  explicit Rot(double angle) : c(std::cos(angle)), s(std::sin(angle)) {}

  Vec2 apply(Vec2 v) const { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
  Vec2 apply_inverse(Vec2 v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }
  Vec2 axis_x() const { return {c, s}; }
  Vec2 axis_y() const { return {-s, c}; }
};

struct Transform
{
  Vec2 position;
  Rot rotation;

  Vec2 apply(Vec2 local) const { return position + rotation.apply(local); }
  Vec2 apply_inverse(Vec2 world) const { return rotation.apply_inverse(world - position); }
};

} // namespace phyre
