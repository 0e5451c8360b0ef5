#include "phyre/solvability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "phyre/error.hpp"
#include "phyre/rng.hpp"

namespace phyre {

std::vector<Action> stability_shifts(const Action& action)
{
  constexpr double d = kStabilityShift / kWorldSize;
  static constexpr int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  std::vector<Action> out;
  out.reserve(8);
  for (const auto& dir : dirs)
  {
    Action a = action;
    for (int i = 0; i < action.balls(); ++i)
    {
      a.coords[3 * i] += dir[0] * d;
      a.coords[3 * i + 1] += dir[1] * d;
    }
    out.push_back(a);
  }
  return out;
}

bool is_stable_solution(const Task& task, const Action& action)
{
  if (validate_action(task, action) != ActionStatus::Valid)
  {
    throw Error(ErrorCode::InvalidAction, "action is not valid for " + task.id);
  }
  if (!solves(task, action))
  {
    return false;
  }
  for (const Action& shifted : stability_shifts(action))
  {
    if (validate_action(task, shifted) != ActionStatus::Valid || !solves(task, shifted))
    {
      return false;
    }
  }
  return true;
}

Action random_action(Tier tier, KeyedRng& rng)
{
  Action a;
  a.tier = tier;
  for (int i = 0; i < a.dims(); ++i)
  {
    a.coords[i] = rng.uniform();
  }
  return a;
}

std::string_view to_string(Verdict verdict)
{
  switch (verdict)
  {
  case Verdict::Solvable: return "Solvable";
  case Verdict::Unsolvable: return "Unsolvable";
  case Verdict::Undecided: return "Undecided";
  }
  return "?";
}

Sprt::Sprt(double p)
  : p0(p), success_step(std::log(2.0)), failure_step(std::log((1.0 - 2.0 * p) / (1.0 - p))),
    upper(std::log(0.95 / 0.05)), lower(-std::log(0.95 / 0.05))
{
  if (!(p > 0.0 && p < 0.1))
  {
    throw Error(ErrorCode::ConfigInvalid, "p0 must lie in (0, 0.1)");
  }
}

long default_initial_cap(double p0)
{
  return static_cast<long>(std::ceil(1.0 / (32.0 * p0)));
}

long default_escalated_cap(double p0)
{
  return static_cast<long>(std::ceil(4.0 / p0));
}

SolvabilityVerdict run_sprt(double p0, long cap, const std::function<std::optional<bool>()>& draw)
{
  const Sprt sprt(p0);
  if (cap < 1)
  {
    throw Error(ErrorCode::ConfigInvalid, "cap must be at least 1");
  }
  SolvabilityVerdict v;
  while (v.samples_used < cap)
  {
    if (v.raw_draws >= 100 * cap)
    {
      throw Error(ErrorCode::NoValidActions, "no valid action found in " +
                                                 std::to_string(v.raw_draws) + " draws");
    }
    ++v.raw_draws;
    const std::optional<bool> r = draw();
    if (!r)
    {
      continue;
    }
    ++v.samples_used;
    if (*r)
    {
      ++v.stable_solutions_found;
      v.log_likelihood_ratio += sprt.success_step;
    }
    else
    {
      v.log_likelihood_ratio += sprt.failure_step;
    }
    if (v.log_likelihood_ratio >= sprt.upper)
    {
      v.verdict = Verdict::Solvable;
      return v;
    }
    if (v.log_likelihood_ratio <= sprt.lower)
    {
      v.verdict = Verdict::Unsolvable;
      return v;
    }
  }
  v.verdict = Verdict::Undecided;
  return v;
}

SolvabilityVerdict classify_solvability_in_tier(const Task& task, Tier tier, double p0,
                                                std::uint64_t seed, long cap)
{
  Task view = task;
  view.tier = tier;
  KeyedRng rng(mix_key(fnv1a(task.id) ^ seed, static_cast<std::uint64_t>(tier)));
  long plain = 0;
  SolvabilityVerdict v = run_sprt(p0, cap, [&]() -> std::optional<bool> {
    const Action a = random_action(tier, rng);
    if (validate_action(view, a) != ActionStatus::Valid)
    {
      return std::nullopt;
    }
    if (!solves(view, a))
    {
      return false;
    }
    ++plain;
    for (const Action& shifted : stability_shifts(a))
    {
      if (validate_action(view, shifted) != ActionStatus::Valid || !solves(view, shifted))
      {
        return false;
      }
    }
    return true;
  });
  v.plain_solutions_found = plain;
  return v;
}

SolvabilityVerdict classify_solvability(const Task& task, double p0, std::uint64_t seed, long cap)
{
  return classify_solvability_in_tier(task, task.tier, p0, seed, cap);
}

SolvabilityVerdict classify_solvability(const Task& task, double p0, std::uint64_t seed)
{
  return classify_solvability(task, p0, seed, default_escalated_cap(p0));
}

double default_p0(Tier tier)
{
  return tier == Tier::B ? 1e-5 : 1e-6;
}

TemplateReport validate_template(const TaskTemplate& t, const std::vector<Task>& tasks,
                                 const ValidationOptions& options, TemplateReport* partial)
{
  const double p0 = options.p0 > 0.0 ? options.p0 : default_p0(t.tier);
  const long cap = options.cap > 0 ? options.cap : default_escalated_cap(p0);
  const double single_p0 = options.single_ball_p0;
  const long single_cap = options.single_ball_cap > 0 ? options.single_ball_cap
                                                      : default_escalated_cap(single_p0);
  TemplateReport report;
  report.template_id = t.id;
  report.tier = t.tier;
  bool undecided = false;
  int single_solvable = 0;
  for (const Task& task : tasks)
  {
    TaskVerdict tv;
    tv.task_id = task.id;
    tv.in_tier = classify_solvability(task, p0, options.seed, cap);
    tv.random_solve_estimate =
        static_cast<double>(tv.in_tier.plain_solutions_found) / static_cast<double>(tv.in_tier.samples_used);
    undecided = undecided || tv.in_tier.verdict == Verdict::Undecided;
    if (t.tier == Tier::TwoB)
    {
      tv.single_ball = classify_solvability_in_tier(task, Tier::B, single_p0, options.seed, single_cap);
      // An undecided single-ball run found solutions, so it counts against the template.
      single_solvable += tv.single_ball->verdict != Verdict::Unsolvable ? 1 : 0;
    }
    report.tasks.push_back(std::move(tv));
  }
  report.all_solvable = !tasks.empty() && std::all_of(report.tasks.begin(), report.tasks.end(), [](const auto& tv) {
    return tv.in_tier.verdict == Verdict::Solvable;
  });
  if (t.tier == Tier::TwoB && !tasks.empty())
  {
    report.fraction_single_ball_solvable = static_cast<double>(single_solvable) / tasks.size();
  }
  report.valid = report.all_solvable &&
                 (t.tier == Tier::B || report.fraction_single_ball_solvable < 0.5);
  if (partial != nullptr)
  {
    *partial = report;
  }
  if (undecided)
  {
    throw Error(ErrorCode::BudgetExhausted, "template " + t.id + " has undecided tasks");
  }
  return report;
}

TemplateReport validate_template(const TaskTemplate& t, const ValidationOptions& options)
{
  return validate_template(t, instantiate_all(t), options);
}

double DiversityHistogram::max_fraction() const
{
  if (task_count == 0)
  {
    return 0.0;
  }
  int best = 0;
  for (const auto& [solved, n] : counts)
  {
    if (n > 0)
    {
      best = std::max(best, solved);
    }
  }
  return static_cast<double>(best) / task_count;
}

DiversityHistogram diversity_histogram(const std::vector<Task>& tasks, Tier tier, long n_samples,
                                       std::uint64_t seed)
{
  DiversityHistogram h;
  h.n_samples = n_samples;
  h.task_count = static_cast<int>(tasks.size());
  KeyedRng rng(mix_key(seed, static_cast<std::uint64_t>(tier)));
  for (long s = 0; s < n_samples; ++s)
  {
    const Action a = random_action(tier, rng);
    bool any_valid = false;
    int solved = 0;
    for (const Task& task : tasks)
    {
      if (validate_action(task, a) != ActionStatus::Valid)
      {
        continue;
      }
      any_valid = true;
      solved += solves(task, a) ? 1 : 0;
    }
    if (any_valid)
    {
      ++h.n_valid;
      ++h.counts[solved];
    }
  }
  return h;
}

void write_histogram_csv(const DiversityHistogram& h, const std::filesystem::path& file)
{
  std::ofstream out(file);
  if (!out)
  {
    throw Error(ErrorCode::ParseError, "cannot write " + file.string());
  }
  out << "tasks_solved,actions\n";
  for (int k = 0; k <= h.task_count; ++k)
  {
    const auto it = h.counts.find(k);
    out << k << ',' << (it == h.counts.end() ? 0 : it->second) << '\n';
  }
}

} // namespace phyre
