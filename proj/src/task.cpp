#include "phyre/task.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "archetypes.hpp"
#include "phyre/environment.hpp"
#include "phyre/error.hpp"
#include "phyre/rng.hpp"
#include "phyre/scene_json.hpp"
#include "phyre/solvability.hpp"

namespace phyre {

std::string_view to_string(Tier tier)
{
  return tier == Tier::B ? "B" : "2B";
}

Tier tier_from_string(std::string_view name)
{
  if (name == "B")
  {
    return Tier::B;
  }
  if (name == "2B")
  {
    return Tier::TwoB;
  }
  throw Error(ErrorCode::ParseError, "unknown tier '" + std::string(name) + "'");
}

int action_dims(Tier tier)
{
  return tier == Tier::B ? 3 : 6;
}

Action Action::single(double x, double y, double r)
{
  return {Tier::B, {x, y, r, 0.0, 0.0, 0.0}};
}

Action Action::pair(double x1, double y1, double r1, double x2, double y2, double r2)
{
  return {Tier::TwoB, {x1, y1, r1, x2, y2, r2}};
}

ParamRange TaskTemplate::range(const std::string& name) const
{
  const auto it = ranges.find(name);
  if (it == ranges.end())
  {
    throw Error(ErrorCode::ConfigInvalid, "template " + id + " has no range '" + name + "'");
  }
  return it->second;
}

namespace {

// Sampling budget when looking for an authored solution, per candidate scene.
constexpr int kHintedSearch = 800;
constexpr int kUniformSearch = 200;

Action sample_hinted(Tier tier, const std::vector<detail::BallHint>& hints, KeyedRng& rng)
{
  Action a;
  a.tier = tier;
  for (int i = 0; i < a.balls(); ++i)
  {
    const detail::BallHint& h = hints.at(i);
    a.coords[3 * i] = rng.uniform(h.x.lo, h.x.hi);
    a.coords[3 * i + 1] = rng.uniform(h.y.lo, h.y.hi);
    a.coords[3 * i + 2] = rng.uniform(h.r.lo, h.r.hi);
  }
  return a;
}

bool find_solution(Task& task, const std::vector<detail::BallHint>& hints, KeyedRng& rng)
{
  for (int k = 0; k < kHintedSearch + kUniformSearch; ++k)
  {
    const Action a = k < kHintedSearch ? sample_hinted(task.tier, hints, rng)
                                       : random_action(task.tier, rng);
    if (validate_action(task, a) != ActionStatus::Valid || !solves(task, a))
    {
      continue;
    }
    if (is_stable_solution(task, a))
    {
      task.solution = a;
      return true;
    }
  }
  return false;
}

bool scene_ok(const WorldState& world, const Goal& goal)
{
  validate_world(world);
  validate_goal(world, goal);
  for (std::size_t i = 0; i < world.bodies.size(); ++i)
  {
    if (!inside_bounds(world.bodies[i]))
    {
      return false;
    }
    for (std::size_t j = i + 1; j < world.bodies.size(); ++j)
    {
      const Body& a = world.bodies[i];
      const Body& b = world.bodies[j];
      if ((a.dynamic || b.dynamic) && overlap(a, b))
      {
        return false;
      }
    }
  }
  return true;
}

std::string task_id(const std::string& template_id, int index)
{
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", index);
  return template_id + ":" + buf;
}

} // namespace

Task instantiate_template(const TaskTemplate& t, int index)
{
  if (index < 0 || index >= t.count)
  {
    throw Error(ErrorCode::IndexOutOfRange,
                "template " + t.id + " has " + std::to_string(t.count) + " tasks, asked for " +
                    std::to_string(index));
  }
  const detail::Generator gen = detail::find_generator(t.archetype);
  if (gen == nullptr)
  {
    throw Error(ErrorCode::ConfigInvalid, "unknown archetype '" + t.archetype + "'");
  }
  const std::uint64_t key = mix_key(fnv1a(t.id) ^ t.seed, static_cast<std::uint64_t>(index));
  for (int attempt = 0; attempt < kMaxInstanceRetries; ++attempt)
  {
    KeyedRng rng(mix_key(key, static_cast<std::uint64_t>(attempt)));
    detail::Candidate c;
    try
    {
      c = gen(t, rng);
      if (!scene_ok(c.world, c.goal))
      {
        continue;
      }
    }
    catch (const Error& e)
    {
      if (e.code() == ErrorCode::ConfigInvalid)
      {
        throw;
      }
      continue;
    }
    Task task;
    task.id = task_id(t.id, index);
    task.template_id = t.id;
    task.tier = t.tier;
    task.world = std::move(c.world);
    task.goal = c.goal;
    task.time_limit = t.time_limit;
    task.solution.tier = t.tier;
    if (solved_without_action(task))
    {
      continue;
    }
    KeyedRng search(mix_key(rng.key(), 0x736f6c7665ULL));
    if (find_solution(task, c.hints, search))
    {
      return task;
    }
  }
  throw Error(ErrorCode::InvalidInstance, "no valid instance for " + task_id(t.id, index) +
                                              " after " + std::to_string(kMaxInstanceRetries) +
                                              " draws");
}

std::vector<Task> instantiate_all(const TaskTemplate& t)
{
  std::vector<Task> tasks;
  tasks.reserve(t.count);
  for (int i = 0; i < t.count; ++i)
  {
    tasks.push_back(instantiate_template(t, i));
  }
  return tasks;
}

std::vector<std::string> archetype_names()
{
  return detail::generator_names();
}

namespace {

Json read_json(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in)
  {
    throw Error(ErrorCode::ParseError, "cannot open " + file.string());
  }
  try
  {
    return Json::parse(in);
  }
  catch (const Json::exception& e)
  {
    throw Error(ErrorCode::ParseError, file.string() + ": " + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& file)
{
  if (file.has_parent_path())
  {
    std::filesystem::create_directories(file.parent_path());
  }
  std::ofstream out(file);
  if (!out)
  {
    throw Error(ErrorCode::ParseError, "cannot write " + file.string());
  }
  out << j.dump(2) << '\n';
}

std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir)
{
  if (!std::filesystem::is_directory(dir))
  {
    throw Error(ErrorCode::ParseError, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
  {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
    {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

} // namespace

TaskTemplate load_template(const std::filesystem::path& file)
{
  return template_from_json(read_json(file));
}

std::vector<TaskTemplate> load_templates(const std::filesystem::path& dir)
{
  std::vector<TaskTemplate> out;
  for (const auto& f : json_files(dir))
  {
    out.push_back(load_template(f));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

void save_template(const TaskTemplate& t, const std::filesystem::path& file)
{
  write_json(to_json(t), file);
}

Task load_task(const std::filesystem::path& file)
{
  return task_from_json(read_json(file));
}

void save_task(const Task& task, const std::filesystem::path& file)
{
  write_json(to_json(task), file);
}

std::vector<Task> load_tasks(const std::filesystem::path& dir)
{
  std::vector<Task> out;
  for (const auto& f : json_files(dir))
  {
    out.push_back(load_task(f));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::filesystem::path default_template_dir()
{
  if (const char* env = std::getenv("PHYRE_DATA_DIR"); env != nullptr && *env != '\0')
  {
    return std::filesystem::path(env) / "templates";
  }
  return std::filesystem::path(PHYRE_DATA_DIR) / "templates";
}

std::string template_of(std::string_view task_id)
{
  const auto pos = task_id.find(':');
  return std::string(task_id.substr(0, pos));
}

} // namespace phyre
