#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "phyre/evaluation.hpp"
#include "phyre/task.hpp"

namespace phyre {

inline constexpr int kTestActionSetSize = 10000;
inline constexpr int kDeskActionSetSize = 1000;

struct ActionSet
{
  Tier tier = Tier::B;
  std::uint64_t seed = 0;
  std::vector<Action> actions;

  int size() const { return static_cast<int>(actions.size()); }
};

/// n i.i.d. uniform actions; action i depends only on (tier, seed, i).
ActionSet sample_actions(Tier tier, int n, std::uint64_t seed);

enum class Outcome : std::int8_t
{
  Unknown = -1,
  Invalid = 0,
  Fail = 1,
  Solve = 2,
};

/// Memoized simulation outcomes of one action set on any number of tasks.
class OutcomeCache
{
public:
  explicit OutcomeCache(ActionSet actions);

  const ActionSet& actions() const { return actions_; }
  Outcome get(const Task& task, int index);
  /// Outcomes of every action on the task.
  std::vector<Outcome> row(const Task& task);
  long simulations() const { return simulations_; }

private:
  std::vector<Outcome>& slot(const std::string& task_id);

  ActionSet actions_;
  std::map<std::string, std::vector<Outcome>> table_;
  long simulations_ = 0;
  std::mutex mutex_;
};

class Agent
{
public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  /// Offline training on the given tasks.
  virtual void train(const std::vector<const Task*>& tasks) { (void)tasks; }
  /// Permutation of the action-set indices, best first.
  virtual std::vector<int> rank(const Task& task) = 0;
  /// Called after each test task, before the next one is ranked.
  virtual void on_task_end(const Task& task, const AttemptLog& log)
  {
    (void)task;
    (void)log;
  }
};

/// Tries the agent's ranking on each task in a seeded shuffled order. Invalid actions are
/// logged but do not use budget. Logs come back in the order the tasks were attempted.
std::vector<AttemptLog> run_agent(Agent& agent, const std::vector<const Task*>& tasks,
                                  OutcomeCache& outcomes, int budget = kAttemptBudget,
                                  std::uint64_t order_seed = 0);

/// Seeded random permutation per task.
class RandomAgent : public Agent
{
public:
  RandomAgent(int action_count, std::uint64_t seed) : count_(action_count), seed_(seed) {}
  std::string name() const override { return "RAND"; }
  std::vector<int> rank(const Task& task) override;

private:
  int count_;
  std::uint64_t seed_;
};

/// Per-action trial and success counts; offline every training task is a trial. WithinTemplate keeps one table per template,
/// CrossTemplate a single table under the empty key.
struct MemPolicy
{
  Setting setting = Setting::CrossTemplate;
  int action_count = 0;
  std::map<std::string, std::vector<double>> trials;
  std::map<std::string, std::vector<double>> successes;

  /// p_a for the table serving `task_id`; throws Error{UnknownTemplate}.
  std::vector<double> scores(const std::string& task_id) const;
  std::string table_key(const std::string& task_id) const;
};

MemPolicy mem_train(OutcomeCache& outcomes, const std::vector<const Task*>& tasks, Setting setting);
/// Indices by p_a descending, ties by index.
std::vector<int> mem_rank(const MemPolicy& policy, const std::string& task_id);
/// n_a += w and c_a += w * reward for every valid attempt in the log.
void mem_update_online(MemPolicy& policy, const std::string& task_id, const AttemptLog& log,
                       double weight);

/// MEM; with a positive online weight it is MEM-O.
class MemAgent : public Agent
{
public:
  MemAgent(OutcomeCache& outcomes, Setting setting, double online_weight = 0.0);
  std::string name() const override { return weight_ > 0.0 ? "MEM-O" : "MEM"; }
  void train(const std::vector<const Task*>& tasks) override;
  std::vector<int> rank(const Task& task) override;
  void on_task_end(const Task& task, const AttemptLog& log) override;
  const MemPolicy& policy() const { return policy_; }

private:
  OutcomeCache& outcomes_;
  MemPolicy policy_;
  double weight_;
};

/// Solving actions first (by simulation), then the rest, each group in index order.
std::vector<int> oracle_rank(OutcomeCache& outcomes, const Task& task);

class OracleAgent : public Agent
{
public:
  explicit OracleAgent(OutcomeCache& outcomes) : outcomes_(outcomes) {}
  std::string name() const override { return "ORACLE"; }
  std::vector<int> rank(const Task& task) override { return oracle_rank(outcomes_, task); }

private:
  OutcomeCache& outcomes_;
};

/// Ranks a fixed list first, then everything else in index order (testing helper and a
/// way to replay a known ranking).
class FixedAgent : public Agent
{
public:
  FixedAgent(int action_count, std::vector<int> head) : count_(action_count), head_(std::move(head)) {}
  std::string name() const override { return "FIXED"; }
  std::vector<int> rank(const Task& task) override;

private:
  int count_;
  std::vector<int> head_;
};

} // namespace phyre
