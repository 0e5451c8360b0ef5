#include "archetypes.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "phyre/error.hpp"

namespace phyre::detail {
namespace {

double draw(const TaskTemplate& t, KeyedRng& rng, const std::string& name)
{
  const ParamRange r = t.range(name);
  return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi);
}

ParamRange unit_range(double lo, double hi, double scale)
{
  const double a = std::clamp(std::min(lo, hi) / scale, 0.0, 1.0);
  const double b = std::clamp(std::max(lo, hi) / scale, 0.0, 1.0);
  return {a, b};
}

/// Hint from world-space bounds (x, y in world units, r in world units).
BallHint hint(double x0, double x1, double y0, double y1, double r0, double r1)
{
  return {unit_range(x0, x1, kWorldSize), unit_range(y0, y1, kWorldSize),
          unit_range(r0, r1, kMaxBallRadius)};
}

struct Scene
{
  WorldState world;

  int add(BodyKind kind, double scale, Vec2 at, double angle, bool dynamic, Role role)
  {
    const int id = static_cast<int>(world.bodies.size());
    world.bodies.push_back(body_from_vocabulary(kind, scale, at, angle, dynamic, role, id));
    return id;
  }

  /// Static bar lying on the floor from x = left to the right wall.
  int floor_pad(double left, Role role)
  {
    const double hw = (kWorldSize - left) / 2.0;
    return add(BodyKind::Bar, hw / (kWorldSize / 2.0), {left + hw, kBarHalfThickness}, 0.0, false,
               role);
  }

  /// Static bar whose top surface is at `top` and whose end nearer the centre is at `edge`.
  /// `inward` is +1 when the ledge sticks out to the right, -1 to the left.
  int ledge(double edge, double top, double scale, int inward)
  {
    const double hw = scale * kWorldSize / 2.0;
    return add(BodyKind::Bar, scale, {edge - inward * hw, top - kBarHalfThickness}, 0.0, false,
               Role::Confounding);
  }

  /// Jar resting on the floor with its centre line at x.
  int floor_jar(double scale, double x, bool dynamic, Role role)
  {
    const Shape shape = vocabulary_shape(BodyKind::Jar, scale);
    double bottom = 0.0;
    for (const BoxPart& p : std::get<Compound>(shape).parts)
    {
      bottom = std::min(bottom, p.offset.y - p.box.half_height);
    }
    return add(BodyKind::Jar, scale, {x, -bottom}, 0.0, dynamic, role);
  }
};

void mirror(Candidate& c)
{
  for (Body& b : c.world.bodies)
  {
    b.pose.x = kWorldSize - b.pose.x;
    b.pose.angle = -b.pose.angle;
    b.velocity.vx = -b.velocity.vx;
    b.velocity.omega = -b.velocity.omega;
  }
  for (BallHint& h : c.hints)
  {
    h.x = {1.0 - h.x.hi, 1.0 - h.x.lo};
  }
}

bool flip(const TaskTemplate& t, KeyedRng& rng)
{
  return t.ranges.count("mirror") != 0 && draw(t, rng, "mirror") >= 0.5;
}

Candidate finish(Scene& s, int subject, int object, std::vector<BallHint> hints, bool mirrored)
{
  Candidate c{std::move(s.world), Goal{subject, Relation::Touching, object, 3.0}, std::move(hints)};
  if (mirrored)
  {
    mirror(c);
  }
  return c;
}

// A ball rests near the end of a ledge above a target pad; knocking it off lands it there.
Candidate ledge_knock(const TaskTemplate& t, KeyedRng& rng)
{
  const double ledge_scale = draw(t, rng, "ledge_scale");
  const double top = draw(t, rng, "ledge_top");
  const double edge = draw(t, rng, "ledge_edge");
  const double ball_scale = draw(t, rng, "ball_scale");
  const double inset = draw(t, rng, "ball_inset");
  const double gap = draw(t, rng, "pad_gap");
  const bool mirrored = flip(t, rng);

  Scene s;
  const double r = ball_scale * kMaxBallRadius;
  const Vec2 c{edge - inset - r, top + r};
  const int ball = s.add(BodyKind::Ball, ball_scale, c, 0.0, true, Role::GoalSubject);
  const int pad = s.floor_pad(edge + gap, Role::GoalObject);
  s.ledge(edge, top, ledge_scale, 1);
  return finish(s, ball, pad, {hint(c.x - r - 24.0, c.x + 2.0, c.y + r + 2.0, kWorldSize, 6.0, 32.0)},
                mirrored);
}

// A standing stick that reaches a target pad when it topples.
Candidate topple_stick(const TaskTemplate& t, KeyedRng& rng)
{
  const double stick_scale = draw(t, rng, "stick_scale");
  const double x = draw(t, rng, "stick_x");
  const double reach = draw(t, rng, "pad_reach");
  const bool mirrored = flip(t, rng);

  Scene s;
  const double hh = stick_scale * kWorldSize / 2.0;
  const int stick = s.add(BodyKind::StandingStick, stick_scale, {x, hh}, 0.0, true, Role::GoalSubject);
  const int pad = s.floor_pad(x + kBarHalfThickness + reach * 2.0 * hh, Role::GoalObject);
  return finish(s, stick, pad,
                {hint(x - kBarHalfThickness - 28.0, x - 1.0, 2.0 * hh + 4.0, kWorldSize, 8.0, 32.0)},
                mirrored);
}

// A ball falls straight down beside a target pad; something must deflect it sideways.
Candidate deflect_fall(const TaskTemplate& t, KeyedRng& rng)
{
  const double ball_scale = draw(t, rng, "ball_scale");
  const double x = draw(t, rng, "ball_x");
  const double y = draw(t, rng, "ball_y");
  const double dist = draw(t, rng, "pad_distance");
  const double decoy_scale = draw(t, rng, "decoy_scale");
  const double decoy_x = draw(t, rng, "decoy_x");
  const bool mirrored = flip(t, rng);

  Scene s;
  const double r = ball_scale * kMaxBallRadius;
  const int ball = s.add(BodyKind::Ball, ball_scale, {x, y}, 0.0, true, Role::GoalSubject);
  const int pad = s.floor_pad(x + r + dist, Role::GoalObject);
  const double dr = decoy_scale * kMaxBallRadius;
  s.add(BodyKind::Ball, decoy_scale, {std::min(decoy_x, x - r - dr - 4.0), dr}, 0.0, true,
        Role::Confounding);
  return finish(s, ball, pad, {hint(x - r - 30.0, x - 1.0, 0.0, y - r - 2.0, 6.0, 32.0)}, mirrored);
}

// A ball on a ledge above a jar; a gentle push drops it in.
Candidate jar_drop(const TaskTemplate& t, KeyedRng& rng)
{
  const double jar_scale = draw(t, rng, "jar_scale");
  const double edge = draw(t, rng, "ledge_edge");
  const double rise = draw(t, rng, "ledge_rise");
  const double ledge_scale = draw(t, rng, "ledge_scale");
  const double ball_fraction = draw(t, rng, "ball_fraction");
  const double inset = draw(t, rng, "ball_inset");
  const double offset = draw(t, rng, "jar_offset");
  const bool mirrored = flip(t, rng);

  Scene s;
  const double w = jar_scale * kWorldSize / 2.0;
  const double r = ball_fraction * w;
  const double top = w + rise;
  const Vec2 c{edge - inset - r, top + r};
  const int ball = s.add(BodyKind::Ball, r / kMaxBallRadius, c, 0.0, true, Role::GoalSubject);
  const int jar = s.floor_jar(jar_scale, edge + offset * w + w / 2.0, false, Role::GoalObject);
  s.ledge(edge, top, ledge_scale, 1);
  return finish(s, ball, jar, {hint(c.x - r - 24.0, c.x + 2.0, c.y + r + 2.0, kWorldSize, 4.0, 32.0)},
                mirrored);
}

// A bar lies on a ledge with one end overhanging; weighing that end down tips it onto a pad.
Candidate bar_tip(const TaskTemplate& t, KeyedRng& rng)
{
  const double ledge_scale = draw(t, rng, "ledge_scale");
  const double top = draw(t, rng, "ledge_top");
  const double edge = draw(t, rng, "ledge_edge");
  const double bar_scale = draw(t, rng, "bar_scale");
  const double support = draw(t, rng, "bar_support");
  const double gap = draw(t, rng, "pad_gap");
  const bool mirrored = flip(t, rng);

  Scene s;
  const double hw = bar_scale * kWorldSize / 2.0;
  const Vec2 c{edge - support, top + kBarHalfThickness};
  const int bar = s.add(BodyKind::Bar, bar_scale, c, 0.0, true, Role::GoalSubject);
  const int pad = s.floor_pad(edge + gap, Role::GoalObject);
  s.ledge(edge, top, ledge_scale, 1);
  return finish(s, bar, pad, {hint(edge + 2.0, c.x + hw, top + 10.0, kWorldSize, 10.0, 32.0)},
                mirrored);
}

enum class Item
{
  Ball,
  Bar,
  Stick,
};

/// Puts an item at the inner edge of a ledge and returns its id and a hint for the ball
/// that knocks it inward. `inward` is the direction of the funnel centre.
int place_on_ledge(Scene& s, Item item, double scale, double inset, double edge, double top,
                   int inward, Role role, BallHint& out)
{
  const double d = inward;
  switch (item)
  {
  case Item::Ball:
  {
    const double r = scale * kMaxBallRadius;
    const Vec2 c{edge - d * (inset + r), top + r};
    out = hint(c.x - d * (r + 24.0), c.x + d * 2.0, c.y + r + 2.0, kWorldSize, 6.0, 32.0);
    return s.add(BodyKind::Ball, scale, c, 0.0, true, role);
  }
  case Item::Bar:
  {
    const double hw = scale * kWorldSize / 2.0;
    const Vec2 c{edge - d * inset, top + kBarHalfThickness};
    out = hint(edge + d * 2.0, c.x + d * hw, top + 10.0, kWorldSize, 10.0, 32.0);
    return s.add(BodyKind::Bar, scale, c, 0.0, true, role);
  }
  case Item::Stick:
  {
    const double hh = scale * kWorldSize / 2.0;
    const Vec2 c{edge - d * (inset + kBarHalfThickness), top + hh};
    out = hint(c.x - d * (kBarHalfThickness + 28.0), c.x - d, top + 2.0 * hh + 4.0, kWorldSize, 8.0,
               32.0);
    return s.add(BodyKind::StandingStick, scale, c, 0.0, true, role);
  }
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown item");
}

// Two objects on opposite ledges above a V-shaped trough; both must be knocked in to meet.
Candidate funnel(const TaskTemplate& t, KeyedRng& rng, Item subject, Item object)
{
  const double cx = draw(t, rng, "center_x");
  const double angle = draw(t, rng, "ramp_angle");
  const double ramp_scale = draw(t, rng, "ramp_scale");
  const double gap = draw(t, rng, "ledge_gap");
  const double top_left = draw(t, rng, "ledge_top_left");
  const double top_right = draw(t, rng, "ledge_top_right");
  const double ledge_scale = draw(t, rng, "ledge_scale");
  const double subject_scale = draw(t, rng, "subject_scale");
  const double subject_inset = draw(t, rng, "subject_inset");
  const double object_scale = draw(t, rng, "object_scale");
  const double object_inset = draw(t, rng, "object_inset");
  const bool mirrored = flip(t, rng);

  Scene s;
  std::vector<BallHint> hints(2);
  const int a = place_on_ledge(s, subject, subject_scale, subject_inset, cx - gap / 2.0, top_left, 1,
                               Role::GoalSubject, hints[0]);
  const int b = place_on_ledge(s, object, object_scale, object_inset, cx + gap / 2.0, top_right, -1,
                               Role::GoalObject, hints[1]);
  s.ledge(cx - gap / 2.0, top_left, ledge_scale, 1);
  s.ledge(cx + gap / 2.0, top_right, ledge_scale, -1);
  const double hw = ramp_scale * kWorldSize / 2.0;
  const double cy = hw * std::sin(angle) + kBarHalfThickness * std::cos(angle) + 0.5;
  s.add(BodyKind::Bar, ramp_scale, {cx - hw * std::cos(angle), cy}, -angle, false, Role::Confounding);
  s.add(BodyKind::Bar, ramp_scale, {cx + hw * std::cos(angle), cy}, angle, false, Role::Confounding);
  return finish(s, a, b, std::move(hints), mirrored);
}

// Two standing sticks too far apart for either to reach the other alone.
Candidate topple_pair(const TaskTemplate& t, KeyedRng& rng)
{
  const double stick_scale = draw(t, rng, "stick_scale");
  const double x = draw(t, rng, "left_x");
  const double spacing = draw(t, rng, "spacing");
  const bool mirrored = flip(t, rng);

  Scene s;
  const double hh = stick_scale * kWorldSize / 2.0;
  const double len = 2.0 * hh;
  const double lo = len + 12.0;
  const double hi = 2.0 * len - 20.0;
  const double xb = x + lo + spacing * (hi - lo);
  const int a = s.add(BodyKind::StandingStick, stick_scale, {x, hh}, 0.0, true, Role::GoalSubject);
  const int b = s.add(BodyKind::StandingStick, stick_scale, {xb, hh}, 0.0, true, Role::GoalObject);
  const double t3 = kBarHalfThickness;
  return finish(s, a, b,
                {hint(x - t3 - 28.0, x - 1.0, len + 4.0, kWorldSize, 8.0, 32.0),
                 hint(xb + 1.0, xb + t3 + 28.0, len + 4.0, kWorldSize, 8.0, 32.0)},
                mirrored);
}

Candidate funnel_balls(const TaskTemplate& t, KeyedRng& rng) { return funnel(t, rng, Item::Ball, Item::Ball); }
Candidate funnel_ball_bar(const TaskTemplate& t, KeyedRng& rng) { return funnel(t, rng, Item::Ball, Item::Bar); }
Candidate funnel_ball_stick(const TaskTemplate& t, KeyedRng& rng) { return funnel(t, rng, Item::Ball, Item::Stick); }
Candidate funnel_bars(const TaskTemplate& t, KeyedRng& rng) { return funnel(t, rng, Item::Bar, Item::Bar); }

const std::map<std::string, Generator>& registry()
{
  static const std::map<std::string, Generator> table{
      {"ledge_knock", ledge_knock},   {"topple_stick", topple_stick},
      {"deflect_fall", deflect_fall}, {"jar_drop", jar_drop},
      {"bar_tip", bar_tip},           {"funnel_balls", funnel_balls},
      {"topple_pair", topple_pair},   {"funnel_ball_bar", funnel_ball_bar},
      {"funnel_ball_stick", funnel_ball_stick}, {"funnel_bars", funnel_bars},
  };
  return table;
}

} // namespace

Generator find_generator(const std::string& archetype)
{
  const auto it = registry().find(archetype);
  return it == registry().end() ? nullptr : it->second;
}

std::vector<std::string> generator_names()
{
  std::vector<std::string> names;
  for (const auto& [name, gen] : registry())
  {
    names.push_back(name);
  }
  return names;
}

} // namespace phyre::detail
