#include "phyre/scene_json.hpp"

#include "phyre/error.hpp"

namespace phyre {

namespace {

template <typename T>
T field(const Json& j, const char* name)
{
  auto it = j.find(name);
  if (it == j.end())
  {
    throw Error(ErrorCode::ParseError, std::string("missing field '") + name + "'");
  }
  try
  {
    return it->get<T>();
  }
  catch (const nlohmann::json::exception& e)
  {
    throw Error(ErrorCode::ParseError, std::string("field '") + name + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* name, T fallback)
{
  auto it = j.find(name);
  return it == j.end() ? fallback : it->get<T>();
}

Json shape_json(const Shape& shape)
{
  if (const auto* c = std::get_if<Circle>(&shape))
  {
    return {{"type", "circle"}, {"radius", c->radius}};
  }
  if (const auto* b = std::get_if<Box>(&shape))
  {
    return {{"type", "box"}, {"half_width", b->half_width}, {"half_height", b->half_height}};
  }
  Json parts = Json::array();
  for (const BoxPart& p : std::get<Compound>(shape).parts)
  {
    parts.push_back({{"half_width", p.box.half_width},
                     {"half_height", p.box.half_height},
                     {"dx", p.offset.x},
                     {"dy", p.offset.y}});
  }
  return {{"type", "compound"}, {"parts", parts}};
}

Shape shape_from_json(const Json& j)
{
  const auto type = field<std::string>(j, "type");
  if (type == "circle")
  {
    return Circle{field<double>(j, "radius")};
  }
  if (type == "box")
  {
    return Box{field<double>(j, "half_width"), field<double>(j, "half_height")};
  }
  if (type == "compound")
  {
    Compound c;
    for (const Json& p : field<Json>(j, "parts"))
    {
      c.parts.push_back({Box{field<double>(p, "half_width"), field<double>(p, "half_height")},
                         Vec2{field<double>(p, "dx"), field<double>(p, "dy")}});
    }
    return c;
  }
  throw Error(ErrorCode::ParseError, "unknown shape type '" + type + "'");
}

} // namespace

Json to_json(const Body& body)
{
  Json j = {{"id", body.id},
            {"kind", std::string(to_string(body.kind))},
            {"scale", body.scale},
            {"x", body.pose.x},
            {"y", body.pose.y},
            {"angle", body.pose.angle},
            {"vx", body.velocity.vx},
            {"vy", body.velocity.vy},
            {"omega", body.velocity.omega},
            {"dynamic", body.dynamic},
            {"role", std::string(to_string(body.role))},
            {"shape", shape_json(body.shape)}};
  return j;
}

Body body_from_json(const Json& j)
{
  const BodyKind kind = body_kind_from_string(field<std::string>(j, "kind"));
  const Vec2 pos{field<double>(j, "x"), field<double>(j, "y")};
  const double angle = field_or(j, "angle", 0.0);
  const bool dynamic = field<bool>(j, "dynamic");
  const Role role = role_from_string(field<std::string>(j, "role"));
  const int id = field<int>(j, "id");
  Body b = kind == BodyKind::Custom
             ? make_body(shape_from_json(field<Json>(j, "shape")), pos, angle, dynamic, role, id)
             : body_from_vocabulary(kind, field<double>(j, "scale"), pos, angle, dynamic, role, id);
  if (dynamic)
  {
    b.velocity = {field_or(j, "vx", 0.0), field_or(j, "vy", 0.0), field_or(j, "omega", 0.0)};
  }
  return b;
}

Json to_json(const WorldState& world)
{
  Json bodies = Json::array();
  for (const Body& b : world.bodies)
  {
    bodies.push_back(to_json(b));
  }
  return {{"width", world.width}, {"height", world.height}, {"time", world.time}, {"bodies", bodies}};
}

WorldState world_from_json(const Json& j)
{
  WorldState w;
  w.width = field_or(j, "width", kWorldSize);
  w.height = field_or(j, "height", kWorldSize);
  w.time = field_or(j, "time", 0.0);
  for (const Json& b : field<Json>(j, "bodies"))
  {
    w.bodies.push_back(body_from_json(b));
  }
  validate_world(w);
  return w;
}

Json to_json(const Goal& goal)
{
  return {{"subject", goal.subject_id}, {"relation", "Touching"}, {"object", goal.object_id},
          {"dwell", goal.dwell}};
}

Goal goal_from_json(const Json& j)
{
  if (field_or<std::string>(j, "relation", "Touching") != "Touching")
  {
    throw Error(ErrorCode::ParseError, "only the Touching relation is supported");
  }
  return {field<int>(j, "subject"), Relation::Touching, field<int>(j, "object"),
          field_or(j, "dwell", 3.0)};
}

Json to_json(const Action& action)
{
  Json coords = Json::array();
  for (int i = 0; i < action.dims(); ++i)
  {
    coords.push_back(action.coords[i]);
  }
  return coords;
}

Action action_from_json(const Json& j, Tier tier)
{
  if (!j.is_array())
  {
    throw Error(ErrorCode::ParseError, "action must be an array of numbers");
  }
  Action a;
  a.tier = tier;
  if (static_cast<int>(j.size()) != a.dims())
  {
    throw Error(ErrorCode::TierMismatch, "tier " + std::string(to_string(tier)) + " actions have " +
                                           std::to_string(a.dims()) + " coordinates");
  }
  for (int i = 0; i < a.dims(); ++i)
  {
    if (!j[i].is_number())
    {
      throw Error(ErrorCode::ParseError, "action coordinates must be numbers");
    }
    a.coords[i] = j[i].get<double>();
  }
  return a;
}

Json to_json(const Task& task)
{
  return {{"id", task.id},
          {"template", task.template_id},
          {"tier", std::string(to_string(task.tier))},
          {"time_limit", task.time_limit},
          {"goal", to_json(task.goal)},
          {"scene", to_json(task.world)},
          {"solution", to_json(task.solution)},
          {"constants", constants_json()}};
}

Task task_from_json(const Json& j)
{
  Task t;
  t.id = field<std::string>(j, "id");
  t.template_id = field_or<std::string>(j, "template", template_of(t.id));
  t.tier = tier_from_string(field<std::string>(j, "tier"));
  t.time_limit = field_or(j, "time_limit", kDefaultTimeLimit);
  t.goal = goal_from_json(field<Json>(j, "goal"));
  t.world = world_from_json(field<Json>(j, "scene"));
  validate_goal(t.world, t.goal);
  if (j.contains("solution"))
  {
    t.solution = action_from_json(j["solution"], t.tier);
  }
  else
  {
    t.solution.tier = t.tier;
  }
  return t;
}

Json to_json(const TaskTemplate& t)
{
  Json ranges = Json::object();
  for (const auto& [name, r] : t.ranges)
  {
    ranges[name] = Json::array({r.lo, r.hi});
  }
  return {{"id", t.id},
          {"tier", std::string(to_string(t.tier))},
          {"archetype", t.archetype},
          {"count", t.count},
          {"seed", t.seed},
          {"time_limit", t.time_limit},
          {"ranges", ranges}};
}

TaskTemplate template_from_json(const Json& j)
{
  TaskTemplate t;
  t.id = field<std::string>(j, "id");
  t.tier = tier_from_string(field<std::string>(j, "tier"));
  t.archetype = field<std::string>(j, "archetype");
  t.count = field_or(j, "count", 20);
  t.seed = field_or<std::uint64_t>(j, "seed", 0);
  t.time_limit = field_or(j, "time_limit", kDefaultTimeLimit);
  if (t.count < 1)
  {
    throw Error(ErrorCode::ConfigInvalid, "template " + t.id + ": count must be >= 1");
  }
  if (j.contains("ranges"))
  {
    for (const auto& [name, value] : j["ranges"].items())
    {
      if (value.is_number())
      {
        const double v = value.get<double>();
        t.ranges[name] = {v, v};
      }
      else if (value.is_array() && value.size() == 2)
      {
        t.ranges[name] = {value[0].get<double>(), value[1].get<double>()};
      }
      else
      {
        throw Error(ErrorCode::ParseError, "range '" + name + "' must be a number or [lo, hi]");
      }
    }
  }
  return t;
}

Json constants_json(const PhysicsParams& params)
{
  return {{"dt", params.dt},
          {"iterations", params.iterations},
          {"gravity", params.gravity},
          {"restitution", params.restitution},
          {"friction", params.friction},
          {"touch_tolerance", params.touch_tolerance},
          {"speed_cap", params.speed_cap},
          {"sleep_speed", params.sleep_speed},
          {"sleep_time", params.sleep_time},
          {"world_size", kWorldSize},
          {"max_ball_radius", kMaxBallRadius}};
}

} // namespace phyre
