#pragma once

#include <json.hpp>

#include "phyre/physics.hpp"
#include "phyre/task.hpp"
#include "phyre/world.hpp"

namespace phyre {

using Json = nlohmann::json;

/// Scene schema: bodies carry kind, scale, pose (centre of mass), velocity, dynamic flag
/// and role. The derived shape is always written so viewers need no vocabulary; on input
/// it is only read for "Custom" bodies.
Json to_json(const Body& body);
Body body_from_json(const Json& j);

Json to_json(const WorldState& world);
WorldState world_from_json(const Json& j);

Json to_json(const Goal& goal);
Goal goal_from_json(const Json& j);

Json to_json(const Action& action);
Action action_from_json(const Json& j, Tier tier);

Json to_json(const Task& task);
Task task_from_json(const Json& j);

Json to_json(const TaskTemplate& t);
TaskTemplate template_from_json(const Json& j);

/// The fixed simulation constants, stamped into task and results files.
Json constants_json(const PhysicsParams& params = {});

} // namespace phyre
