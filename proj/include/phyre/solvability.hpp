#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phyre/environment.hpp"
#include "phyre/rng.hpp"
#include "phyre/task.hpp"

namespace phyre {

/// Shift applied to the ball centres when checking stability, in world units.
inline constexpr double kStabilityShift = 0.5;

/// True iff the action solves the task and so do all eight shifts of its ball centres by
/// (+-0.5, 0), (0, +-0.5) and (+-0.5, +-0.5). A shift that makes the action invalid counts
/// as a failure. Throws Error{InvalidAction} when the action itself is invalid.
bool is_stable_solution(const Task& task, const Action& action);

/// The eight shifted copies of an action, in a fixed order.
std::vector<Action> stability_shifts(const Action& action);

/// Uniform random action of the tier (coordinates in [0, 1)).
Action random_action(Tier tier, KeyedRng& rng);

enum class Verdict
{
  Solvable,
  Unsolvable,
  Undecided,
};

std::string_view to_string(Verdict verdict);

struct SolvabilityVerdict
{
  Verdict verdict = Verdict::Undecided;
  long samples_used = 0;
  long stable_solutions_found = 0;
  long plain_solutions_found = 0;
  long raw_draws = 0;
  double log_likelihood_ratio = 0.0;
};

/// Wald test of H0: s = p0 against H1: s = 2 p0 with alpha = beta = 0.05.
struct Sprt
{
  explicit Sprt(double p0);

  double p0;
  double success_step; ///< ln 2
  double failure_step; ///< ln((1 - 2 p0) / (1 - p0))
  double upper;        ///< ln(0.95 / 0.05)
  double lower;
};

/// Default SPRT caps: ceil(1 / (32 p0)) decision samples, escalating to ceil(4 / p0).
long default_initial_cap(double p0);
long default_escalated_cap(double p0);

/// Runs the SPRT over an arbitrary sample source. `draw` returns nullopt for a draw that
/// does not count as a sample (an invalid action), otherwise whether the sample was a
/// stable success. Stops at a boundary, after `cap` samples (Undecided), or throws
/// Error{NoValidActions} after 100 * cap raw draws.
SolvabilityVerdict run_sprt(double p0, long cap, const std::function<std::optional<bool>()>& draw);

/// Classifies the task over uniformly drawn valid actions of `tier` (defaults to the
/// task's own tier). Deterministic given the arguments.
SolvabilityVerdict classify_solvability(const Task& task, double p0, std::uint64_t seed, long cap);

/// Classification with the default cap. The test is sequential, so running to the
/// escalated cap only differs from stopping at the initial one on Undecided tasks.
SolvabilityVerdict classify_solvability(const Task& task, double p0, std::uint64_t seed);

/// Classification under another tier's action space (used for the single-ball check of
/// two-ball tasks).
SolvabilityVerdict classify_solvability_in_tier(const Task& task, Tier tier, double p0,
                                                std::uint64_t seed, long cap);

/// 1e-5 for B, 1e-6 for 2B.
double default_p0(Tier tier);

/// p0 of the single-ball check on 2B tasks. Much larger than the in-tier value: proving a
/// task unsolvable costs about 3 / p0 rollouts.
inline constexpr double kSingleBallP0 = 2e-3;

struct TaskVerdict
{
  std::string task_id;
  SolvabilityVerdict in_tier;
  std::optional<SolvabilityVerdict> single_ball; ///< 2B tasks only
  double random_solve_estimate = 0.0;             ///< plain solves / valid samples
};

struct TemplateReport
{
  std::string template_id;
  Tier tier = Tier::B;
  std::vector<TaskVerdict> tasks;
  double fraction_single_ball_solvable = 0.0; ///< 2B only
  bool all_solvable = false;
  bool valid = false;
};

struct ValidationOptions
{
  double p0 = 0.0;             ///< 0 = tier default
  double single_ball_p0 = kSingleBallP0;
  std::uint64_t seed = 1;
  long cap = 0;             ///< 0 = default_escalated_cap(p0)
  long single_ball_cap = 0;
};

/// Classifies every task of the template. Throws Error{BudgetExhausted} when a task stays
/// Undecided in its own tier, after the report has been filled in (available through
/// `partial`). An undecided single-ball check counts as single-ball solvable.
TemplateReport validate_template(const TaskTemplate& t, const std::vector<Task>& tasks,
                                 const ValidationOptions& options,
                                 TemplateReport* partial = nullptr);

/// Instantiates the template, then validates it.
TemplateReport validate_template(const TaskTemplate& t, const ValidationOptions& options);

struct DiversityHistogram
{
  std::map<int, long> counts; ///< tasks solved by an action -> number of actions
  long n_samples = 0;
  long n_valid = 0;
  int task_count = 0;

  /// Largest fraction of the template's tasks solved by a single sampled action.
  double max_fraction() const;
};

/// Samples actions of the given tier and counts how many of the tasks each one solves.
/// An action invalid in a task does not solve it; actions invalid in every task are
/// left out of the histogram.
DiversityHistogram diversity_histogram(const std::vector<Task>& tasks, Tier tier, long n_samples,
                                       std::uint64_t seed);

void write_histogram_csv(const DiversityHistogram& h, const std::filesystem::path& file);

} // namespace phyre
