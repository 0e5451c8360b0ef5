#include "phyre/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "phyre/error.hpp"
#include "phyre/rng.hpp"

namespace phyre {

std::string_view to_string(Setting setting)
{
  return setting == Setting::WithinTemplate ? "within" : "cross";
}

Setting setting_from_string(std::string_view name)
{
  if (name == "within")
  {
    return Setting::WithinTemplate;
  }
  if (name == "cross")
  {
    return Setting::CrossTemplate;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown setting '" + std::string(name) + "'");
}

std::array<int, 3> split_sizes(int n)
{
  const int val = std::max(1, static_cast<int>(std::lround(kValFraction * n)));
  const int test = std::max(1, static_cast<int>(std::lround(kTestFraction * n)));
  return {n - val - test, val, test};
}

namespace {

template <class T>
void shuffle(std::vector<T>& items, KeyedRng& rng)
{
  for (std::size_t i = items.size(); i > 1; --i)
  {
    std::swap(items[i - 1], items[rng.below(i)]);
  }
}

} // namespace

FoldSplit make_fold(const std::vector<std::string>& task_ids, Setting setting, int fold,
                    std::uint64_t seed)
{
  std::map<std::string, std::vector<std::string>> by_template;
  for (const std::string& id : task_ids)
  {
    by_template[template_of(id)].push_back(id);
  }
  for (auto& [name, ids] : by_template)
  {
    std::sort(ids.begin(), ids.end());
  }
  FoldSplit split;
  split.fold_index = fold;
  split.setting = setting;
  const std::uint64_t fold_key = mix_key(seed, static_cast<std::uint64_t>(fold));
  if (setting == Setting::WithinTemplate)
  {
    for (auto& [name, ids] : by_template)
    {
      if (ids.size() < 3)
      {
        throw Error(ErrorCode::TooFewTasks, "template " + name + " has fewer than 3 tasks");
      }
      KeyedRng rng(mix_key(fold_key, fnv1a(name)));
      shuffle(ids, rng);
      const auto [n_train, n_val, n_test] = split_sizes(static_cast<int>(ids.size()));
      split.train.insert(split.train.end(), ids.begin(), ids.begin() + n_train);
      split.val.insert(split.val.end(), ids.begin() + n_train, ids.begin() + n_train + n_val);
      split.test.insert(split.test.end(), ids.begin() + n_train + n_val, ids.end());
    }
  }
  else
  {
    std::vector<std::string> names;
    for (const auto& [name, ids] : by_template)
    {
      names.push_back(name);
    }
    if (names.size() < 3)
    {
      throw Error(ErrorCode::TooFewTemplates, "cross-template folds need at least 3 templates");
    }
    KeyedRng rng(fold_key);
    shuffle(names, rng);
    const auto [n_train, n_val, n_test] = split_sizes(static_cast<int>(names.size()));
    for (int i = 0; i < static_cast<int>(names.size()); ++i)
    {
      auto& part = i < n_train ? split.train : i < n_train + n_val ? split.val : split.test;
      const auto& ids = by_template[names[i]];
      part.insert(part.end(), ids.begin(), ids.end());
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<FoldSplit> make_folds(const std::vector<std::string>& task_ids, Setting setting,
                                  int n_folds, std::uint64_t seed)
{
  std::vector<FoldSplit> out;
  for (int f = 0; f < n_folds; ++f)
  {
    out.push_back(make_fold(task_ids, setting, f, seed));
  }
  return out;
}

SuccessCurve success_curve(const std::vector<AttemptLog>& logs)
{
  SuccessCurve s{};
  if (logs.empty())
  {
    return s;
  }
  std::array<int, kAttemptBudget + 1> first{};
  for (const AttemptLog& log : logs)
  {
    if (log.solved_at && *log.solved_at >= 1 && *log.solved_at <= kAttemptBudget)
    {
      ++first[*log.solved_at];
    }
  }
  int solved = 0;
  for (int k = 1; k <= kAttemptBudget; ++k)
  {
    solved += first[k];
    s[k - 1] = 100.0 * solved / static_cast<double>(logs.size());
  }
  return s;
}

double auccess_weight(int k)
{
  return std::log(k + 1.0) - std::log(static_cast<double>(k));
}

double auccess(const SuccessCurve& curve)
{
  double num = 0.0;
  double den = 0.0;
  for (int k = 1; k <= kAttemptBudget; ++k)
  {
    const double w = auccess_weight(k);
    num += w * curve[k - 1];
    den += w;
  }
  // A weighted mean; keep rounding from pushing it past the curve's own range.
  const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end());
  return std::clamp(num / den, *lo, *hi);
}

double weight_share(int k)
{
  double part = 0.0;
  double total = 0.0;
  for (int i = 1; i <= kAttemptBudget; ++i)
  {
    total += auccess_weight(i);
    if (i <= k)
    {
      part += auccess_weight(i);
    }
  }
  return part / total;
}

double wilcoxon_one_sided(const std::vector<double>& a, const std::vector<double>& b)
{
  if (a.size() != b.size())
  {
    throw Error(ErrorCode::ShapeMismatch, "paired samples must have equal length");
  }
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    if (a[i] != b[i])
    {
      d.push_back(a[i] - b[i]);
    }
  }
  const int n = static_cast<int>(d.size());
  if (n == 0)
  {
    return 1.0;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return std::abs(d[i]) < std::abs(d[j]); });
  // Doubled average ranks keep tied ranks integral.
  std::vector<int> rank2(n);
  double tie_term = 0.0;
  for (int i = 0; i < n;)
  {
    int j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]]))
    {
      ++j;
    }
    for (int k = i; k <= j; ++k)
    {
      rank2[order[k]] = i + j + 2;
    }
    const double t = j - i + 1;
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long w2 = 0;
  for (int i = 0; i < n; ++i)
  {
    if (d[i] > 0.0)
    {
      w2 += rank2[i];
    }
  }
  if (n <= kExactWilcoxonLimit)
  {
    const long total = std::accumulate(rank2.begin(), rank2.end(), 0L);
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    for (int r : rank2)
    {
      for (long s = total; s >= r; --s)
      {
        ways[s] += ways[s - r];
      }
    }
    double upper = 0.0;
    for (long s = w2; s <= total; ++s)
    {
      upper += ways[s];
    }
    return upper / std::ldexp(1.0, n);
  }
  const double w = w2 / 2.0;
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  const double z = (w - mean) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

Summary summarize(const std::vector<double>& values)
{
  Summary s;
  if (values.empty())
  {
    return s;
  }
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values)
  {
    ss += (v - s.mean) * (v - s.mean);
  }
  s.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  return s;
}

} // namespace phyre
