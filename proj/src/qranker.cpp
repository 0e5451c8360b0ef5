#include "phyre/qranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

#include "phyre/environment.hpp"
#include "phyre/error.hpp"
#include "phyre/rng.hpp"

namespace phyre {

void TrainConfig::validate() const
{
  if (steps < 1)
  {
    throw Error(ErrorCode::ConfigInvalid, "steps must be at least 1");
  }
  if (!(learning_rate > 0.0))
  {
    throw Error(ErrorCode::ConfigInvalid, "learning rate must be positive");
  }
  if (batch_size < 1 || (balanced && batch_size % 2 != 0))
  {
    throw Error(ErrorCode::ConfigInvalid, "batch size must be positive (and even when balanced)");
  }
  if (observations_per_batch < 1)
  {
    throw Error(ErrorCode::ConfigInvalid, "observations_per_batch must be at least 1");
  }
}

std::vector<float> task_observation(const Task& task, int size)
{
  return downsample_observation<float>(rasterize(task.world, task.goal), size);
}

void TrainingSet::add(const Task& task, const std::vector<Action>& actions, const std::vector<bool>& rewards)
{
  if (actions.size() != rewards.size())
  {
    throw Error(ErrorCode::ShapeMismatch, "one reward per action expected");
  }
  if (task.tier != tier)
  {
    throw Error(ErrorCode::TierMismatch, "task " + task.id + " is not in the training tier");
  }
  Observation o;
  o.task_id = task.id;
  o.image = task_observation(task, input_size);
  for (std::size_t i = 0; i < actions.size(); ++i)
  {
    if (actions[i].tier != tier)
    {
      throw Error(ErrorCode::TierMismatch, "action tier differs from the training tier");
    }
    (rewards[i] ? o.positives : o.negatives).push_back(actions[i]);
  }
  observations.push_back(std::move(o));
}

long TrainingSet::positive_count() const
{
  long n = 0;
  for (const auto& o : observations)
  {
    n += static_cast<long>(o.positives.size());
  }
  return n;
}

long TrainingSet::negative_count() const
{
  long n = 0;
  for (const auto& o : observations)
  {
    n += static_cast<long>(o.negatives.size());
  }
  return n;
}

TrainingSet training_set_from_cache(OutcomeCache& outcomes, const std::vector<const Task*>& tasks,
                                    int input_size)
{
  TrainingSet set;
  set.tier = outcomes.actions().tier;
  set.input_size = input_size;
  for (const Task* task : tasks)
  {
    const std::vector<Outcome> row = outcomes.row(*task);
    std::vector<Action> actions;
    std::vector<bool> rewards;
    for (std::size_t i = 0; i < row.size(); ++i)
    {
      if (row[i] != Outcome::Invalid)
      {
        actions.push_back(outcomes.actions().actions[i]);
        rewards.push_back(row[i] == Outcome::Solve);
      }
    }
    set.add(*task, actions, rewards);
  }
  return set;
}

void TrainLog::write_csv(const std::filesystem::path& file) const
{
  std::ofstream out(file);
  if (!out)
  {
    throw Error(ErrorCode::ParseError, "cannot write " + file.string());
  }
  out << "step,learning_rate,loss\n";
  for (std::size_t i = 0; i < loss.size(); ++i)
  {
    out << i << ',' << learning_rate[i] << ',' << loss[i] << '\n';
  }
}

namespace {

struct Pick
{
  int observation;
  const Action* action;
  float label;
};

/// k distinct entries of `pool` (all of them when k >= size), in pool order.
std::vector<int> choose(const std::vector<int>& pool, int k, KeyedRng& rng)
{
  std::vector<int> p = pool;
  const int n = std::min<int>(k, static_cast<int>(p.size()));
  for (int i = 0; i < n; ++i)
  {
    std::swap(p[i], p[i + rng.below(p.size() - i)]);
  }
  p.resize(n);
  std::sort(p.begin(), p.end());
  return p;
}

std::vector<Pick> sample_batch(const TrainingSet& data, const TrainConfig& config,
                               const std::vector<int>& with_pos, const std::vector<int>& with_neg,
                               const std::vector<int>& with_any, KeyedRng& rng)
{
  std::vector<Pick> batch;
  batch.reserve(config.batch_size);
  auto draw_from = [&](const std::vector<int>& obs, bool positive) {
    const int o = obs[rng.below(obs.size())];
    const auto& list = positive ? data.observations[o].positives : data.observations[o].negatives;
    batch.push_back({o, &list[rng.below(list.size())], positive ? 1.0f : 0.0f});
  };
  if (config.balanced)
  {
    const std::vector<int> pos = choose(with_pos, config.observations_per_batch, rng);
    const std::vector<int> neg = choose(with_neg, config.observations_per_batch, rng);
    for (int i = 0; i < config.batch_size / 2; ++i)
    {
      draw_from(pos, true);
      draw_from(neg, false);
    }
  }
  else
  {
    const std::vector<int> obs = choose(with_any, config.observations_per_batch, rng);
    for (int i = 0; i < config.batch_size; ++i)
    {
      const int o = obs[rng.below(obs.size())];
      const auto& ob = data.observations[o];
      const std::size_t n = ob.positives.size() + ob.negatives.size();
      const std::size_t j = rng.below(n);
      if (j < ob.positives.size())
      {
        batch.push_back({o, &ob.positives[j], 1.0f});
      }
      else
      {
        batch.push_back({o, &ob.negatives[j - ob.positives.size()], 0.0f});
      }
    }
  }
  return batch;
}

} // namespace

QNet<float> train(const TrainingSet& data, const QNetConfig& net_config, const TrainConfig& config,
                  TrainLog* log)
{
  config.validate();
  if (net_config.tier != data.tier)
  {
    throw Error(ErrorCode::TierMismatch, "network tier differs from the training data");
  }
  if (net_config.input_size != data.input_size)
  {
    throw Error(ErrorCode::ShapeMismatch, "network input size differs from the training data");
  }
  std::vector<int> with_pos, with_neg, with_any;
  for (int i = 0; i < static_cast<int>(data.observations.size()); ++i)
  {
    const auto& o = data.observations[i];
    if (!o.positives.empty())
    {
      with_pos.push_back(i);
    }
    if (!o.negatives.empty())
    {
      with_neg.push_back(i);
    }
    if (!o.positives.empty() || !o.negatives.empty())
    {
      with_any.push_back(i);
    }
  }
  if (config.balanced && (with_pos.empty() || with_neg.empty()))
  {
    throw Error(ErrorCode::NoPositives, "balanced training needs positive and negative triplets");
  }
  if (with_any.empty())
  {
    throw Error(ErrorCode::NoPositives, "training set is empty");
  }

  QNet<float> net(net_config);
  std::vector<float>& p = net.params();
  std::vector<float> grad(p.size()), m(p.size(), 0.0f), v(p.size(), 0.0f);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const std::uint64_t key = mix_key(config.seed, 0x747261696eULL);
  for (int step = 0; step < config.steps; ++step)
  {
    KeyedRng rng(mix_key(key, static_cast<std::uint64_t>(step)));
    const std::vector<Pick> batch = sample_batch(data, config, with_pos, with_neg, with_any, rng);
    std::map<int, std::vector<QNet<float>::Example>> by_obs;
    for (const Pick& pick : batch)
    {
      by_obs[pick.observation].push_back({pick.action, pick.label});
    }
    std::fill(grad.begin(), grad.end(), 0.0f);
    const float scale = 1.0f / static_cast<float>(batch.size());
    double total = 0.0;
    for (const auto& [o, examples] : by_obs)
    {
      total += net.accumulate_gradient(data.observations[o].image, examples, scale, grad);
    }
    const double lr = config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * step / config.steps));
    const double c1 = 1.0 - std::pow(beta1, step + 1);
    const double c2 = 1.0 - std::pow(beta2, step + 1);
    for (std::size_t i = 0; i < p.size(); ++i)
    {
      m[i] = static_cast<float>(beta1 * m[i] + (1.0 - beta1) * grad[i]);
      v[i] = static_cast<float>(beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i]);
      p[i] -= static_cast<float>(lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps));
    }
    if (log != nullptr)
    {
      log->loss.push_back(total / static_cast<double>(batch.size()));
      log->learning_rate.push_back(lr);
    }
  }
  return net;
}

template <class T>
void online_update(QNet<T>& net, const std::vector<T>& observation, const std::vector<Action>& positives,
                   const std::vector<Action>& negatives, int k_steps, double learning_rate)
{
  if (k_steps < 0)
  {
    throw Error(ErrorCode::ConfigInvalid, "k_steps must be non-negative");
  }
  if (k_steps == 0 || learning_rate == 0.0 || (positives.empty() && negatives.empty()))
  {
    return;
  }
  const bool both = !positives.empty() && !negatives.empty();
  std::vector<typename QNet<T>::Example> pos, neg;
  for (const Action& a : positives)
  {
    pos.push_back({&a, T(1)});
  }
  for (const Action& a : negatives)
  {
    neg.push_back({&a, T(0)});
  }
  std::vector<T> grad(net.params().size());
  for (int k = 0; k < k_steps; ++k)
  {
    std::fill(grad.begin(), grad.end(), T(0));
    const T half = both ? T(0.5) : T(1);
    if (!pos.empty())
    {
      net.accumulate_gradient(observation, pos, half / static_cast<T>(pos.size()), grad);
    }
    if (!neg.empty())
    {
      net.accumulate_gradient(observation, neg, half / static_cast<T>(neg.size()), grad);
    }
    std::vector<T>& p = net.params();
    for (std::size_t i = 0; i < p.size(); ++i)
    {
      p[i] -= static_cast<T>(learning_rate) * grad[i];
    }
  }
}

template void online_update(QNet<float>&, const std::vector<float>&, const std::vector<Action>&,
                            const std::vector<Action>&, int, double);
template void online_update(QNet<double>&, const std::vector<double>&, const std::vector<Action>&,
                            const std::vector<Action>&, int, double);

QRankerAgent::QRankerAgent(OutcomeCache& outcomes, QNetConfig net_config, TrainConfig train_config,
                           OnlineConfig online)
  : outcomes_(outcomes), train_config_(train_config), online_(online), net_(net_config)
{
  if (net_config.tier != outcomes.actions().tier)
  {
    throw Error(ErrorCode::TierMismatch, "network tier differs from the action set");
  }
  train_config_.validate();
  if (online.steps < 0 || online.learning_rate < 0.0)
  {
    throw Error(ErrorCode::ConfigInvalid, "online steps and learning rate must be non-negative");
  }
}

void QRankerAgent::train(const std::vector<const Task*>& tasks)
{
  const TrainingSet data = training_set_from_cache(outcomes_, tasks, net_.config().input_size);
  log_ = {};
  net_ = phyre::train(data, net_.config(), train_config_, &log_);
}

std::vector<int> QRankerAgent::rank(const Task& task)
{
  const std::vector<float> obs = task_observation(task, net_.config().input_size);
  const std::vector<float> s = net_.score_batch(obs, outcomes_.actions().actions);
  std::vector<int> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s[a] > s[b]; });
  return idx;
}

void QRankerAgent::on_task_end(const Task& task, const AttemptLog& log)
{
  if (online_.steps == 0 || online_.learning_rate == 0.0)
  {
    return;
  }
  std::vector<Action> pos, neg;
  for (const AttemptEntry& e : log.entries)
  {
    if (e.valid)
    {
      (e.reward ? pos : neg).push_back(outcomes_.actions().actions[e.action_index]);
    }
  }
  online_update(net_, task_observation(task, net_.config().input_size), pos, neg, online_.steps,
                online_.learning_rate);
}

} // namespace phyre
