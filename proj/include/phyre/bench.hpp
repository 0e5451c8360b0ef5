#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phyre/agents.hpp"
#include "phyre/evaluation.hpp"
#include "phyre/qranker.hpp"
#include "phyre/scene_json.hpp"

namespace phyre {

/// Agent names understood by make_agent.
inline const std::vector<std::string> kAgentNames{"RAND", "MEM", "MEM-O", "DQN", "DQN-O", "ORACLE"};

struct BenchConfig
{
  Tier tier = Tier::B;
  Setting setting = Setting::CrossTemplate;
  std::vector<int> folds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string agent = "RAND";
  /// MEM-O count weight, or DQN-O online learning rate.
  double online_weight = 0.0;
  int online_steps = 5;
  int action_set_size = kTestActionSetSize;
  /// Agents rank only the first `rank_size` actions of the set (0 = all).
  int rank_size = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t action_seed = 0;
  std::uint64_t agent_seed = 0;
  TrainConfig train;
  FusionPoint fusion = FusionPoint::PreFinal;
  int input_size = 64;
  std::filesystem::path task_dir;
  std::filesystem::path output_dir;
  /// Train on train+val and report test metrics; otherwise train on train, report val.
  bool final_run = false;

  /// Throws Error{ConfigInvalid}.
  void validate() const;
  Json to_json() const;
  static BenchConfig from_json(const Json& j);
  std::uint64_t hash() const;
};

/// Default location of the materialized task files.
std::filesystem::path default_task_dir();

/// Task ids use ':'; file names use '_'.
std::string task_file_name(const std::string& task_id);

/// Instantiates every template of `template_dir` into `task_dir`; returns the tasks written.
std::vector<Task> build_tasks(const std::filesystem::path& template_dir, const std::filesystem::path& task_dir);

/// Tasks of one tier from a directory; throws Error{MissingTasks} when there are none.
std::vector<Task> load_tier_tasks(const std::filesystem::path& task_dir, Tier tier);

/// Throws Error{ConfigInvalid} for an unknown name.
std::unique_ptr<Agent> make_agent(const BenchConfig& config, OutcomeCache& outcomes, int fold);

/// Restricts another agent's ranking to action indices below `limit`.
class PrefixAgent : public Agent
{
public:
  PrefixAgent(std::unique_ptr<Agent> inner, int limit) : inner_(std::move(inner)), limit_(limit) {}
  std::string name() const override { return inner_->name(); }
  void train(const std::vector<const Task*>& tasks) override { inner_->train(tasks); }
  std::vector<int> rank(const Task& task) override;
  void on_task_end(const Task& task, const AttemptLog& log) override { inner_->on_task_end(task, log); }

private:
  std::unique_ptr<Agent> inner_;
  int limit_;
};

struct FoldResult
{
  int fold = 0;
  std::string split; ///< "val" or "test"
  std::vector<AttemptLog> logs;
  SuccessCurve curve{};
  double auccess = 0.0;
};

struct BenchResult
{
  BenchConfig config;
  std::vector<FoldResult> folds;
  Summary summary;
  /// One-sided p-values that this agent beats (key) a stored baseline, and the reverse.
  std::map<std::string, std::pair<double, double>> wilcoxon;

  std::vector<double> auccess_values() const;
};

/// Fills every task's outcome row, spreading tasks over `threads` workers.
void prefetch_outcomes(OutcomeCache& outcomes, const std::vector<const Task*>& tasks, int threads = 0);

/// One fold: train, then attempt the evaluation split.
FoldResult evaluate_fold(const BenchConfig& config, const std::vector<Task>& tasks, int fold,
                         OutcomeCache& outcomes);

/// Runs all folds. A shared cache must hold the config's action set.
BenchResult run_benchmark(const BenchConfig& config, const std::vector<Task>& tasks,
                          OutcomeCache* shared = nullptr);
/// Loads tasks from config.task_dir, runs, and writes results into config.output_dir
/// (comparing against any baseline results already there).
BenchResult run_benchmark(const BenchConfig& config);

std::string results_stem(const BenchConfig& config);
Json to_json(const BenchResult& result);
void write_results(const BenchResult& result, const std::filesystem::path& dir);
/// Per-fold AUCCESS recomputed from the attempt logs stored in a results document.
std::vector<double> recompute_auccess(const Json& results);

/// Wilcoxon comparisons against other results files in `dir` with the same tier, setting,
/// split and folds.
void compare_with_baselines(BenchResult& result, const std::filesystem::path& dir);

enum class SweepAxis
{
  RankSize,
  OnlineWeight,
};

std::string_view to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(std::string_view name);

inline constexpr int kSweepFolds = 3;

struct SweepPoint
{
  double value = 0.0;
  std::vector<double> auccess; ///< per fold
  Summary summary;
};

struct SweepReport
{
  BenchConfig config;
  SweepAxis axis = SweepAxis::RankSize;
  std::vector<SweepPoint> points;
};

/// Re-runs the first three folds on validation tasks for each value of the knob.
SweepReport sweep(const BenchConfig& config, const std::vector<Task>& tasks, SweepAxis axis,
                  const std::vector<double>& values, OutcomeCache* shared = nullptr);
Json to_json(const SweepReport& report);
void write_sweep(const SweepReport& report, const std::filesystem::path& dir);

} // namespace phyre
