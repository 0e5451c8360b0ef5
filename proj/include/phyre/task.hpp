#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "phyre/physics.hpp"
#include "phyre/world.hpp"

namespace phyre {

enum class Tier
{
  B,    ///< one ball, 3D action
  TwoB, ///< two balls, 6D action
};

std::string_view to_string(Tier tier);
Tier tier_from_string(std::string_view name);
int action_dims(Tier tier);

/// One or two balls, each encoded as (x, y, r) in the unit cube.
struct Action
{
  Tier tier = Tier::B;
  std::array<double, 6> coords{};

  static Action single(double x, double y, double r);
  static Action pair(double x1, double y1, double r1, double x2, double y2, double r2);

  int dims() const { return action_dims(tier); }
  int balls() const { return tier == Tier::B ? 1 : 2; }
  bool operator==(const Action&) const = default;
};

inline constexpr double kDefaultTimeLimit = 16.0;

struct Task
{
  std::string id;          ///< "<template>:<index>", e.g. "B03:007"
  std::string template_id;
  Tier tier = Tier::B;
  WorldState world;
  Goal goal;
  double time_limit = kDefaultTimeLimit;
  /// A stable solution found while authoring the task.
  Action solution;

  bool operator==(const Task&) const = default;
};

struct ParamRange
{
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const ParamRange&) const = default;
};

/// Parameterized generator of a task family. The archetype names the C++ generator;
/// the ranges are its knobs.
struct TaskTemplate
{
  std::string id;
  Tier tier = Tier::B;
  std::string archetype;
  int count = 20;
  std::uint64_t seed = 0;
  double time_limit = kDefaultTimeLimit;
  std::map<std::string, ParamRange> ranges;

  /// Range for `name`; throws Error{ConfigInvalid} when missing.
  ParamRange range(const std::string& name) const;
};

inline constexpr int kMaxInstanceRetries = 100;

/// Deterministic task `index` of the template. Throws Error{IndexOutOfRange} or
/// Error{InvalidInstance}.
Task instantiate_template(const TaskTemplate& t, int index);

std::vector<Task> instantiate_all(const TaskTemplate& t);

/// Archetype names known to instantiate_template.
std::vector<std::string> archetype_names();

TaskTemplate load_template(const std::filesystem::path& file);
/// All *.json templates of a directory, sorted by id.
std::vector<TaskTemplate> load_templates(const std::filesystem::path& dir);
void save_template(const TaskTemplate& t, const std::filesystem::path& file);

Task load_task(const std::filesystem::path& file);
void save_task(const Task& task, const std::filesystem::path& file);
/// All *.json tasks of a directory, sorted by id.
std::vector<Task> load_tasks(const std::filesystem::path& dir);

/// Directory holding the shipped templates (`PHYRE_DATA_DIR` overrides the build default).
std::filesystem::path default_template_dir();

/// Template id part of a task id.
std::string template_of(std::string_view task_id);

} // namespace phyre
