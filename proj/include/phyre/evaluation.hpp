#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phyre/task.hpp"

namespace phyre {

enum class Setting
{
  WithinTemplate,
  CrossTemplate,
};

std::string_view to_string(Setting setting);
Setting setting_from_string(std::string_view name);

inline constexpr int kFoldCount = 10;
inline constexpr double kTrainFraction = 0.8;
inline constexpr double kValFraction = 0.1;
inline constexpr double kTestFraction = 0.1;

struct FoldSplit
{
  int fold_index = 0;
  Setting setting = Setting::WithinTemplate;
  std::vector<std::string> train; ///< sorted task ids
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Sizes of an 80/10/10 split of n items; val and test get at least one item each.
std::array<int, 3> split_sizes(int n);

/// One fold of the task universe. Throws Error{TooFewTasks} when a template has fewer than
/// three tasks (WithinTemplate) or Error{TooFewTemplates} when there are fewer than three
/// templates (CrossTemplate).
FoldSplit make_fold(const std::vector<std::string>& task_ids, Setting setting, int fold,
                    std::uint64_t seed);

std::vector<FoldSplit> make_folds(const std::vector<std::string>& task_ids, Setting setting,
                                  int n_folds = kFoldCount, std::uint64_t seed = 0);

inline constexpr int kAttemptBudget = 100;

struct AttemptEntry
{
  int action_index = -1; ///< index in the ranked action set
  bool valid = false;
  bool reward = false;
};

struct AttemptLog
{
  std::string task_id;
  std::vector<AttemptEntry> entries;
  std::optional<int> solved_at; ///< 1-based rank among valid attempts
};

/// s_1 .. s_100 stored at indices 0 .. 99.
using SuccessCurve = std::array<double, kAttemptBudget>;

SuccessCurve success_curve(const std::vector<AttemptLog>& logs);

/// w_k = ln(k + 1) - ln(k).
double auccess_weight(int k);

double auccess(const SuccessCurve& curve);

/// Share of the total AUCCESS weight carried by the first k attempts.
double weight_share(int k);

/// One-sided Wilcoxon signed-rank test of "a greater than b" on paired samples. Zero
/// differences are dropped; ties get average ranks. Exact null distribution for up to 15
/// non-zero differences, normal approximation (tie-corrected, no continuity correction)
/// above that. Returns 1 when every difference is zero.
double wilcoxon_one_sided(const std::vector<double>& a, const std::vector<double>& b);

inline constexpr double kSignificanceLevel = 0.01;
inline constexpr int kExactWilcoxonLimit = 15;

struct Summary
{
  double mean = 0.0;
  double stddev = 0.0; ///< sample standard deviation
  double median = 0.0;
};

Summary summarize(const std::vector<double>& values);

} // namespace phyre
