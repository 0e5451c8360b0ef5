#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "phyre/environment.hpp"
#include "phyre/error.hpp"
#include "phyre/scene_json.hpp"
#include "phyre/solvability.hpp"
#include "phyre/task.hpp"

using namespace phyre;

namespace {

const std::vector<TaskTemplate>& shipped()
{
  static const std::vector<TaskTemplate> templates = load_templates(default_template_dir());
  return templates;
}

std::filesystem::path shipped_task_dir()
{
  return default_template_dir().parent_path() / "tasks";
}

} // namespace

TEST(Template, ShippedSuiteHasFiveTemplatesPerTier)
{
  int b = 0, two_b = 0;
  for (const TaskTemplate& t : shipped())
  {
    EXPECT_EQ(t.count, 20) << t.id;
    (t.tier == Tier::B ? b : two_b) += 1;
    const auto names = archetype_names();
    EXPECT_NE(std::find(names.begin(), names.end(), t.archetype), names.end()) << t.archetype;
  }
  EXPECT_EQ(b, 5);
  EXPECT_EQ(two_b, 5);
}

TEST(Template, IndexOutOfRange)
{
  const TaskTemplate& t = shipped().front();
  for (int index : {-1, t.count})
  {
    try
    {
      instantiate_template(t, index);
      FAIL() << index;
    }
    catch (const Error& e)
    {
      EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
    }
  }
}

TEST(Template, UnknownArchetypeAndMissingRangeAreConfigErrors)
{
  TaskTemplate t = shipped().front();
  t.archetype = "no_such_thing";
  try
  {
    instantiate_template(t, 0);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
  }
  EXPECT_THROW(shipped().front().range("no_such_range"), Error);
}

TEST(Template, InstantiationIsDeterministic)
{
  for (const TaskTemplate& t : shipped())
  {
    EXPECT_EQ(instantiate_template(t, 3), instantiate_template(t, 3)) << t.id;
  }
}

TEST(Template, SeedChangesTheTasks)
{
  TaskTemplate t = shipped().front();
  const Task a = instantiate_template(t, 0);
  t.seed += 1;
  EXPECT_NE(a.world, instantiate_template(t, 0).world);
}

TEST(Template, JsonRoundTrip)
{
  for (const TaskTemplate& t : shipped())
  {
    const TaskTemplate back = template_from_json(to_json(t));
    EXPECT_EQ(back.id, t.id);
    EXPECT_EQ(back.tier, t.tier);
    EXPECT_EQ(back.archetype, t.archetype);
    EXPECT_EQ(back.count, t.count);
    EXPECT_EQ(back.seed, t.seed);
    EXPECT_EQ(back.ranges, t.ranges);
  }
}

TEST(Task, IdsAndTemplateOf)
{
  const Task t = instantiate_template(shipped().front(), 7);
  EXPECT_EQ(t.id, t.template_id + ":007");
  EXPECT_EQ(template_of(t.id), t.template_id);
}

TEST(Task, JsonAndFileRoundTripAreExact)
{
  const Task t = instantiate_template(shipped().back(), 2);
  EXPECT_EQ(task_from_json(to_json(t)), t);
  const auto file = std::filesystem::temp_directory_path() / "phyre_task_roundtrip.json";
  save_task(t, file);
  EXPECT_EQ(load_task(file), t);
}

TEST(Task, ActionJsonRejectsWrongLength)
{
  EXPECT_THROW(action_from_json(Json::array({0.1, 0.2}), Tier::B), Error);
  EXPECT_THROW(action_from_json(Json::array({0.1, 0.2, 0.3}), Tier::TwoB), Error);
  EXPECT_EQ(action_from_json(Json::array({0.1, 0.2, 0.3}), Tier::B), Action::single(0.1, 0.2, 0.3));
}

// Shipped files are what the generator produces, every task needs an action, and the
// authored solution is a stable one.
TEST(ShippedTasks, MatchGeneratorAndCarryStableSolutions)
{
  const std::vector<Task> files = load_tasks(shipped_task_dir());
  ASSERT_EQ(files.size(), 200u);
  std::set<std::string> ids;
  for (const Task& task : files)
  {
    ids.insert(task.id);
  }
  EXPECT_EQ(ids.size(), files.size());
  for (const TaskTemplate& t : shipped())
  {
    for (int i = 0; i < t.count; ++i)
    {
      const Task generated = instantiate_template(t, i);
      const auto it = std::find_if(files.begin(), files.end(), [&](const Task& f) { return f.id == generated.id; });
      ASSERT_NE(it, files.end()) << generated.id;
      EXPECT_EQ(*it, generated) << generated.id;
      EXPECT_FALSE(solved_without_action(generated)) << generated.id;
      EXPECT_TRUE(is_stable_solution(generated, generated.solution)) << generated.id;
    }
  }
}

TEST(ShippedTasks, TasksWithinATemplateDiffer)
{
  for (const TaskTemplate& t : shipped())
  {
    const Task a = instantiate_template(t, 0);
    const Task b = instantiate_template(t, 1);
    EXPECT_NE(a.world, b.world) << t.id;
    EXPECT_EQ(a.goal, b.goal) << t.id;
  }
}
