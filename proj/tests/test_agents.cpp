#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "phyre/agents.hpp"
#include "phyre/environment.hpp"
#include "phyre/error.hpp"

using namespace phyre;

namespace {

constexpr int kActions = 300;

const std::vector<Task>& few_tasks()
{
  static const std::vector<Task> tasks = [] {
    std::vector<Task> out;
    const auto dir = default_template_dir().parent_path() / "tasks";
    for (const char* name : {"B01_000", "B01_001", "B02_000", "B02_001", "B03_000"})
    {
      out.push_back(load_task(dir / (std::string(name) + ".json")));
    }
    return out;
  }();
  return tasks;
}

std::vector<const Task*> pointers(const std::vector<Task>& tasks)
{
  std::vector<const Task*> out;
  for (const Task& t : tasks)
  {
    out.push_back(&t);
  }
  return out;
}

OutcomeCache& shared_cache()
{
  static OutcomeCache cache(sample_actions(Tier::B, kActions, 11));
  return cache;
}

bool is_permutation_of_indices(const std::vector<int>& r, int n)
{
  std::vector<int> sorted = r;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> want(n);
  std::iota(want.begin(), want.end(), 0);
  return sorted == want;
}

} // namespace

TEST(ActionSet, DeterministicAndPrefixStable)
{
  const ActionSet a = sample_actions(Tier::B, 100, 3);
  const ActionSet b = sample_actions(Tier::B, 50, 3);
  for (int i = 0; i < 50; ++i)
  {
    EXPECT_EQ(a.actions[i], b.actions[i]);
  }
  EXPECT_NE(sample_actions(Tier::B, 10, 4).actions, sample_actions(Tier::B, 10, 3).actions);
  for (const Action& x : sample_actions(Tier::TwoB, 100, 3).actions)
  {
    EXPECT_EQ(x.tier, Tier::TwoB);
    for (int i = 0; i < 6; ++i)
    {
      EXPECT_GE(x.coords[i], 0.0);
      EXPECT_LT(x.coords[i], 1.0);
    }
  }
  EXPECT_THROW(sample_actions(Tier::B, 0, 1), Error);
}

TEST(OutcomeCache, AgreesWithDirectSimulationAndMemoizes)
{
  OutcomeCache cache(sample_actions(Tier::B, 40, 5));
  const Task& t = few_tasks()[0];
  const std::vector<Outcome> row = cache.row(t);
  const long sims = cache.simulations();
  EXPECT_EQ(sims, 40);
  for (int i = 0; i < 40; ++i)
  {
    const Action& a = cache.actions().actions[i];
    const Outcome direct = validate_action(t, a) != ActionStatus::Valid ? Outcome::Invalid
                           : solves(t, a)                                ? Outcome::Solve
                                                                         : Outcome::Fail;
    EXPECT_EQ(row[i], direct) << i;
  }
  cache.row(t);
  EXPECT_EQ(cache.simulations(), sims);
  EXPECT_THROW(cache.get(t, 40), Error);
}

TEST(RunAgent, InvalidAttemptsAreFreeAndSolvedAtCountsValidOnes)
{
  OutcomeCache& cache = shared_cache();
  const Task& t = few_tasks()[0];
  const std::vector<Outcome> row = cache.row(t);
  std::vector<int> invalid, fail, solve;
  for (int i = 0; i < kActions; ++i)
  {
    (row[i] == Outcome::Invalid ? invalid : row[i] == Outcome::Fail ? fail : solve).push_back(i);
  }
  ASSERT_GE(invalid.size(), 2u);
  ASSERT_GE(fail.size(), 3u);
  std::vector<int> head = {invalid[0], fail[0], invalid[1], fail[1], fail[2]};
  if (!solve.empty())
  {
    head.push_back(solve[0]);
  }
  FixedAgent agent(kActions, head);
  const auto logs = run_agent(agent, {&t}, cache);
  ASSERT_EQ(logs.size(), 1u);
  const AttemptLog& log = logs[0];
  EXPECT_FALSE(log.entries[0].valid);
  EXPECT_TRUE(log.entries[1].valid);
  if (!solve.empty())
  {
    ASSERT_TRUE(log.solved_at.has_value());
    EXPECT_EQ(*log.solved_at, 4);
    EXPECT_EQ(log.entries.size(), head.size());
    EXPECT_TRUE(log.entries.back().reward);
  }
}

TEST(RunAgent, BudgetLimitsValidAttempts)
{
  OutcomeCache& cache = shared_cache();
  const Task& t = few_tasks()[1];
  const std::vector<Outcome> row = cache.row(t);
  std::vector<int> head;
  for (int i = 0; i < kActions; ++i)
  {
    if (row[i] != Outcome::Solve)
    {
      head.push_back(i);
    }
  }
  FixedAgent agent(kActions, head);
  const auto logs = run_agent(agent, {&t}, cache, 7);
  const AttemptLog& log = logs[0];
  EXPECT_FALSE(log.solved_at.has_value());
  EXPECT_EQ(std::count_if(log.entries.begin(), log.entries.end(), [](const AttemptEntry& e) { return e.valid; }),
            7);
}

TEST(RunAgent, OrderIsSeededShuffleOfSortedIds)
{
  RandomAgent agent(kActions, 1);
  const auto tasks = pointers(few_tasks());
  std::vector<const Task*> reversed(tasks.rbegin(), tasks.rend());
  const auto a = run_agent(agent, tasks, shared_cache(), 100, 42);
  const auto b = run_agent(agent, reversed, shared_cache(), 100, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    EXPECT_EQ(a[i].task_id, b[i].task_id);
    EXPECT_EQ(a[i].solved_at, b[i].solved_at);
  }
}

TEST(RandomAgent, PermutationPerTask)
{
  RandomAgent agent(kActions, 9);
  const auto r0 = agent.rank(few_tasks()[0]);
  EXPECT_TRUE(is_permutation_of_indices(r0, kActions));
  EXPECT_EQ(r0, agent.rank(few_tasks()[0]));
  EXPECT_NE(r0, agent.rank(few_tasks()[1]));
}

TEST(Oracle, SolvesFirstWheneverTheSetCan)
{
  OutcomeCache& cache = shared_cache();
  OracleAgent oracle(cache);
  RandomAgent rand(kActions, 3);
  const auto tasks = pointers(few_tasks());
  const auto lo = run_agent(oracle, tasks, cache);
  const auto lr = run_agent(rand, tasks, cache);
  for (std::size_t i = 0; i < tasks.size(); ++i)
  {
    const std::vector<Outcome> row = cache.row(*tasks[i]);
    const bool solvable = std::count(row.begin(), row.end(), Outcome::Solve) > 0;
    const auto& log = *std::find_if(lo.begin(), lo.end(), [&](const AttemptLog& l) { return l.task_id == tasks[i]->id; });
    const auto& other = *std::find_if(lr.begin(), lr.end(), [&](const AttemptLog& l) { return l.task_id == tasks[i]->id; });
    EXPECT_EQ(log.solved_at.has_value(), solvable);
    if (solvable)
    {
      EXPECT_EQ(*log.solved_at, 1);
    }
    if (other.solved_at)
    {
      ASSERT_TRUE(log.solved_at.has_value());
      EXPECT_LE(*log.solved_at, *other.solved_at);
    }
  }
  EXPECT_GE(auccess(success_curve(lo)), auccess(success_curve(lr)));
}

TEST(Mem, TrainCountsTasksAndSuccesses)
{
  OutcomeCache& cache = shared_cache();
  const auto tasks = pointers(few_tasks());
  const MemPolicy p = mem_train(cache, tasks, Setting::CrossTemplate);
  ASSERT_EQ(p.trials.size(), 1u);
  std::vector<double> n(kActions, 0), c(kActions, 0);
  for (const Task* t : tasks)
  {
    const auto row = cache.row(*t);
    for (int a = 0; a < kActions; ++a)
    {
      n[a] += 1;
      c[a] += row[a] == Outcome::Solve;
    }
  }
  EXPECT_EQ(p.trials.at(""), n);
  EXPECT_EQ(p.successes.at(""), c);
  const auto scores = p.scores("anything:000");
  const auto order = mem_rank(p, "anything:000");
  EXPECT_TRUE(is_permutation_of_indices(order, kActions));
  for (int k = 1; k < kActions; ++k)
  {
    EXPECT_GE(scores[order[k - 1]], scores[order[k]]);
    if (scores[order[k - 1]] == scores[order[k]])
    {
      EXPECT_LT(order[k - 1], order[k]);
    }
  }
}

TEST(Mem, WithinTemplateTablesAndUnknownTemplate)
{
  const auto tasks = pointers(few_tasks());
  const MemPolicy p = mem_train(shared_cache(), tasks, Setting::WithinTemplate);
  EXPECT_EQ(p.trials.size(), 3u);
  try
  {
    p.scores("B09:000");
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::UnknownTemplate);
  }
}

TEST(Mem, OnlineUpdateAddsWeightedCounts)
{
  MemPolicy p = mem_train(shared_cache(), pointers(few_tasks()), Setting::CrossTemplate);
  const MemPolicy before = p;
  AttemptLog log;
  log.entries = {{4, false, false}, {5, true, false}, {6, true, true}};
  mem_update_online(p, "B01:000", log, 0.0);
  EXPECT_EQ(p.trials, before.trials);
  mem_update_online(p, "B01:000", log, 2.5);
  EXPECT_EQ(p.trials.at("")[4], before.trials.at("")[4]);
  EXPECT_EQ(p.trials.at("")[5], before.trials.at("")[5] + 2.5);
  EXPECT_EQ(p.successes.at("")[5], before.successes.at("")[5]);
  EXPECT_EQ(p.trials.at("")[6], before.trials.at("")[6] + 2.5);
  EXPECT_EQ(p.successes.at("")[6], before.successes.at("")[6] + 2.5);
  EXPECT_THROW(mem_update_online(p, "B01:000", log, -1.0), Error);
}

TEST(Mem, ZeroOnlineWeightReproducesOfflineExactly)
{
  OutcomeCache& cache = shared_cache();
  const auto all = pointers(few_tasks());
  const std::vector<const Task*> train(all.begin(), all.begin() + 2);
  const std::vector<const Task*> test(all.begin() + 2, all.end());
  MemAgent offline(cache, Setting::CrossTemplate, 0.0);
  MemAgent online(cache, Setting::CrossTemplate, 0.0);
  MemAgent learning(cache, Setting::CrossTemplate, 1.0);
  offline.train(train);
  online.train(train);
  learning.train(train);
  EXPECT_EQ(offline.name(), "MEM");
  EXPECT_EQ(learning.name(), "MEM-O");
  const auto a = run_agent(offline, test, cache, 100, 1);
  const auto b = run_agent(online, test, cache, 100, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    EXPECT_EQ(a[i].solved_at, b[i].solved_at);
    EXPECT_EQ(a[i].entries.size(), b[i].entries.size());
  }
  EXPECT_EQ(online.policy().trials, offline.policy().trials);
  run_agent(learning, test, cache, 100, 1);
  EXPECT_NE(learning.policy().trials, offline.policy().trials);
}
