#include "phyre/agents.hpp"

#include <algorithm>
#include <numeric>

#include "phyre/environment.hpp"
#include "phyre/error.hpp"
#include "phyre/rng.hpp"
#include "phyre/solvability.hpp"

namespace phyre {

ActionSet sample_actions(Tier tier, int n, std::uint64_t seed)
{
  if (n < 1)
  {
    throw Error(ErrorCode::ConfigInvalid, "action set needs at least one action");
  }
  ActionSet set;
  set.tier = tier;
  set.seed = seed;
  set.actions.reserve(n);
  const std::uint64_t key = mix_key(seed, static_cast<std::uint64_t>(tier) + 1);
  for (int i = 0; i < n; ++i)
  {
    KeyedRng rng(mix_key(key, static_cast<std::uint64_t>(i)));
    set.actions.push_back(random_action(tier, rng));
  }
  return set;
}

OutcomeCache::OutcomeCache(ActionSet actions) : actions_(std::move(actions)) {}

std::vector<Outcome>& OutcomeCache::slot(const std::string& task_id)
{
  auto it = table_.find(task_id);
  if (it == table_.end())
  {
    it = table_.emplace(task_id, std::vector<Outcome>(actions_.actions.size(), Outcome::Unknown)).first;
  }
  return it->second;
}

Outcome OutcomeCache::get(const Task& task, int index)
{
  if (index < 0 || index >= actions_.size())
  {
    throw Error(ErrorCode::IndexOutOfRange, "action index " + std::to_string(index));
  }
  {
    std::lock_guard lock(mutex_);
    const Outcome known = slot(task.id)[index];
    if (known != Outcome::Unknown)
    {
      return known;
    }
  }
  const Action& a = actions_.actions[index];
  Outcome o = Outcome::Invalid;
  if (validate_action(task, a) == ActionStatus::Valid)
  {
    o = solves(task, a) ? Outcome::Solve : Outcome::Fail;
  }
  std::lock_guard lock(mutex_);
  slot(task.id)[index] = o;
  ++simulations_;
  return o;
}

std::vector<Outcome> OutcomeCache::row(const Task& task)
{
  std::vector<Outcome> out(actions_.actions.size());
  for (int i = 0; i < actions_.size(); ++i)
  {
    out[i] = get(task, i);
  }
  return out;
}

std::vector<AttemptLog> run_agent(Agent& agent, const std::vector<const Task*>& tasks,
                                  OutcomeCache& outcomes, int budget, std::uint64_t order_seed)
{
  std::vector<const Task*> order = tasks;
  std::sort(order.begin(), order.end(), [](const Task* a, const Task* b) { return a->id < b->id; });
  KeyedRng rng(mix_key(order_seed, 0x6f72646572ULL));
  for (std::size_t i = order.size(); i > 1; --i)
  {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<AttemptLog> logs;
  logs.reserve(order.size());
  for (const Task* task : order)
  {
    AttemptLog log;
    log.task_id = task->id;
    int used = 0;
    for (int index : agent.rank(*task))
    {
      if (used >= budget)
      {
        break;
      }
      const Outcome o = outcomes.get(*task, index);
      AttemptEntry e;
      e.action_index = index;
      e.valid = o != Outcome::Invalid;
      if (!e.valid)
      {
        log.entries.push_back(e);
        continue;
      }
      ++used;
      e.reward = o == Outcome::Solve;
      log.entries.push_back(e);
      if (e.reward)
      {
        log.solved_at = used;
        break;
      }
    }
    agent.on_task_end(*task, log);
    logs.push_back(std::move(log));
  }
  return logs;
}

std::vector<int> RandomAgent::rank(const Task& task)
{
  std::vector<int> idx(count_);
  std::iota(idx.begin(), idx.end(), 0);
  KeyedRng rng(mix_key(seed_, fnv1a(task.id)));
  for (std::size_t i = idx.size(); i > 1; --i)
  {
    std::swap(idx[i - 1], idx[rng.below(i)]);
  }
  return idx;
}

std::string MemPolicy::table_key(const std::string& task_id) const
{
  return setting == Setting::WithinTemplate ? template_of(task_id) : std::string();
}

std::vector<double> MemPolicy::scores(const std::string& task_id) const
{
  const std::string key = table_key(task_id);
  const auto n = trials.find(key);
  if (n == trials.end())
  {
    throw Error(ErrorCode::UnknownTemplate, "no table for template '" + key + "'");
  }
  const std::vector<double>& c = successes.at(key);
  std::vector<double> p(action_count, 0.0);
  for (int a = 0; a < action_count; ++a)
  {
    p[a] = n->second[a] > 0.0 ? c[a] / n->second[a] : 0.0;
  }
  return p;
}

MemPolicy mem_train(OutcomeCache& outcomes, const std::vector<const Task*>& tasks, Setting setting)
{
  MemPolicy policy;
  policy.setting = setting;
  policy.action_count = outcomes.actions().size();
  for (const Task* task : tasks)
  {
    const std::string key = policy.table_key(task->id);
    auto& n = policy.trials[key];
    auto& c = policy.successes[key];
    n.resize(policy.action_count, 0.0);
    c.resize(policy.action_count, 0.0);
    const std::vector<Outcome> row = outcomes.row(*task);
    // p_a is the fraction of training tasks solved, so an action invalid in a task
    // counts as a miss there.
    for (int a = 0; a < policy.action_count; ++a)
    {
      n[a] += 1.0;
      c[a] += row[a] == Outcome::Solve ? 1.0 : 0.0;
    }
  }
  return policy;
}

std::vector<int> mem_rank(const MemPolicy& policy, const std::string& task_id)
{
  const std::vector<double> p = policy.scores(task_id);
  std::vector<int> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return p[a] > p[b]; });
  return idx;
}

void mem_update_online(MemPolicy& policy, const std::string& task_id, const AttemptLog& log,
                       double weight)
{
  if (weight < 0.0)
  {
    throw Error(ErrorCode::ConfigInvalid, "online weight must be non-negative");
  }
  if (weight == 0.0)
  {
    return;
  }
  const std::string key = policy.table_key(task_id);
  auto& n = policy.trials[key];
  auto& c = policy.successes[key];
  n.resize(policy.action_count, 0.0);
  c.resize(policy.action_count, 0.0);
  for (const AttemptEntry& e : log.entries)
  {
    if (e.valid)
    {
      n[e.action_index] += weight;
      c[e.action_index] += e.reward ? weight : 0.0;
    }
  }
}

MemAgent::MemAgent(OutcomeCache& outcomes, Setting setting, double online_weight)
  : outcomes_(outcomes), weight_(online_weight)
{
  policy_.setting = setting;
  policy_.action_count = outcomes.actions().size();
}

void MemAgent::train(const std::vector<const Task*>& tasks)
{
  policy_ = mem_train(outcomes_, tasks, policy_.setting);
}

std::vector<int> MemAgent::rank(const Task& task)
{
  return mem_rank(policy_, task.id);
}

void MemAgent::on_task_end(const Task& task, const AttemptLog& log)
{
  mem_update_online(policy_, task.id, log, weight_);
}

std::vector<int> oracle_rank(OutcomeCache& outcomes, const Task& task)
{
  const std::vector<Outcome> row = outcomes.row(task);
  std::vector<int> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_partition(idx.begin(), idx.end(), [&](int a) { return row[a] == Outcome::Solve; });
  return idx;
}

std::vector<int> FixedAgent::rank(const Task&)
{
  std::vector<int> out = head_;
  std::vector<bool> seen(count_, false);
  for (int i : head_)
  {
    seen.at(i) = true;
  }
  for (int i = 0; i < count_; ++i)
  {
    if (!seen[i])
    {
      out.push_back(i);
    }
  }
  return out;
}

} // namespace phyre
