#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phyre/agents.hpp"
#include "phyre/qnet.hpp"

namespace phyre {

struct TrainConfig
{
  int batch_size = 64;
  int steps = 20000;
  double learning_rate = 3e-4; ///< annealed to zero along a half cosine
  bool balanced = true;
  /// Distinct observations a batch draws from; each observation is encoded once per step.
  int observations_per_batch = 8;
  std::uint64_t seed = 0;

  /// Throws Error{ConfigInvalid}.
  void validate() const;
};

/// Observation-action-reward triplets grouped by observation.
struct TrainingSet
{
  struct Observation
  {
    std::string task_id;
    std::vector<float> image; ///< downsampled one-hot planes
    std::vector<Action> positives;
    std::vector<Action> negatives;
  };

  Tier tier = Tier::B;
  int input_size = 64;
  std::vector<Observation> observations;

  /// Adds one task's initial observation with its labelled actions.
  void add(const Task& task, const std::vector<Action>& actions, const std::vector<bool>& rewards);
  long positive_count() const;
  long negative_count() const;
};

/// Initial-scene observation of a task, downsampled to `size`.
std::vector<float> task_observation(const Task& task, int size);

/// Triplets for every valid action of the cache's set on each task.
TrainingSet training_set_from_cache(OutcomeCache& outcomes, const std::vector<const Task*>& tasks,
                                    int input_size = 64);

/// Mean batch loss per step, for the training-curve CSV.
struct TrainLog
{
  std::vector<double> loss;
  std::vector<double> learning_rate;
  void write_csv(const std::filesystem::path& file) const;
};

/// Adam on binary cross-entropy. Throws Error{NoPositives} when balanced and the set has no
/// positive (or no negative) triplet, Error{ConfigInvalid}, Error{TierMismatch}.
QNet<float> train(const TrainingSet& data, const QNetConfig& net_config, const TrainConfig& config,
                  TrainLog* log = nullptr);

/// `k_steps` plain gradient steps on one task's outcomes, positives and negatives weighted
/// equally when both occur. k_steps = 0 or lr = 0 leaves the parameters untouched.
template <class T>
void online_update(QNet<T>& net, const std::vector<T>& observation, const std::vector<Action>& positives,
                   const std::vector<Action>& negatives, int k_steps, double learning_rate);

struct OnlineConfig
{
  int steps = 5;
  double learning_rate = 0.0; ///< 0 disables online updates
};

/// Scores every action of the cache's set with a trained network and ranks by score.
class QRankerAgent : public Agent
{
public:
  QRankerAgent(OutcomeCache& outcomes, QNetConfig net_config, TrainConfig train_config,
               OnlineConfig online = {});

  std::string name() const override { return online_.learning_rate > 0.0 ? "DQN-O" : "DQN"; }
  void train(const std::vector<const Task*>& tasks) override;
  std::vector<int> rank(const Task& task) override;
  void on_task_end(const Task& task, const AttemptLog& log) override;

  const QNet<float>& net() const { return net_; }
  void set_net(const QNet<float>& net) { net_ = net; }
  const TrainLog& train_log() const { return log_; }

private:
  OutcomeCache& outcomes_;
  TrainConfig train_config_;
  OnlineConfig online_;
  QNet<float> net_;
  TrainLog log_;
};

} // namespace phyre
