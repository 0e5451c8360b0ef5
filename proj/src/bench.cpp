#include "phyre/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "phyre/error.hpp"
#include "phyre/rng.hpp"

#ifndef PHYRE_VERSION
#define PHYRE_VERSION "0.0.0"
#endif

namespace phyre {

void BenchConfig::validate() const
{
  if (std::find(kAgentNames.begin(), kAgentNames.end(), agent) == kAgentNames.end())
  {
    throw Error(ErrorCode::ConfigInvalid, "unknown agent '" + agent + "'");
  }
  if (folds.empty())
  {
    throw Error(ErrorCode::ConfigInvalid, "no folds selected");
  }
  for (int f : folds)
  {
    if (f < 0 || f >= kFoldCount)
    {
      throw Error(ErrorCode::ConfigInvalid, "fold index " + std::to_string(f) + " outside 0..9");
    }
  }
  if (action_set_size < 1 || rank_size < 0 || rank_size > action_set_size)
  {
    throw Error(ErrorCode::ConfigInvalid, "action set size must be positive and cover rank_size");
  }
  if (online_weight < 0.0 || online_steps < 0)
  {
    throw Error(ErrorCode::ConfigInvalid, "online weight and steps must be non-negative");
  }
  if (agent == "DQN" || agent == "DQN-O")
  {
    train.validate();
  }
}

Json BenchConfig::to_json() const
{
  return {{"tier", std::string(phyre::to_string(tier))},
          {"setting", std::string(phyre::to_string(setting))},
          {"folds", folds},
          {"agent", agent},
          {"online_weight", online_weight},
          {"online_steps", online_steps},
          {"action_set_size", action_set_size},
          {"rank_size", rank_size},
          {"split_seed", split_seed},
          {"action_seed", action_seed},
          {"agent_seed", agent_seed},
          {"train",
           {{"batch_size", train.batch_size},
            {"steps", train.steps},
            {"learning_rate", train.learning_rate},
            {"balanced", train.balanced},
            {"observations_per_batch", train.observations_per_batch},
            {"seed", train.seed}}},
          {"fusion", std::string(phyre::to_string(fusion))},
          {"input_size", input_size},
          {"final", final_run}};
}

BenchConfig BenchConfig::from_json(const Json& j)
{
  BenchConfig c;
  try
  {
    c.tier = tier_from_string(j.value("tier", std::string("B")));
    c.setting = setting_from_string(j.value("setting", std::string("cross")));
    c.folds = j.value("folds", c.folds);
    c.agent = j.value("agent", c.agent);
    c.online_weight = j.value("online_weight", c.online_weight);
    c.online_steps = j.value("online_steps", c.online_steps);
    c.action_set_size = j.value("action_set_size", c.action_set_size);
    c.rank_size = j.value("rank_size", c.rank_size);
    c.split_seed = j.value("split_seed", c.split_seed);
    c.action_seed = j.value("action_seed", c.action_seed);
    c.agent_seed = j.value("agent_seed", c.agent_seed);
    if (j.contains("train"))
    {
      const Json& t = j.at("train");
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.steps = t.value("steps", c.train.steps);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.balanced = t.value("balanced", c.train.balanced);
      c.train.observations_per_batch = t.value("observations_per_batch", c.train.observations_per_batch);
      c.train.seed = t.value("seed", c.train.seed);
    }
    c.fusion = fusion_point_from_string(j.value("fusion", std::string("prefinal")));
    c.input_size = j.value("input_size", c.input_size);
    c.final_run = j.value("final", c.final_run);
  }
  catch (const Json::exception& e)
  {
    throw Error(ErrorCode::ConfigInvalid, std::string("bad bench config: ") + e.what());
  }
  return c;
}

std::uint64_t BenchConfig::hash() const
{
  return fnv1a(to_json().dump());
}

std::filesystem::path default_task_dir()
{
  if (const char* env = std::getenv("PHYRE_DATA_DIR"))
  {
    return std::filesystem::path(env) / "tasks";
  }
  return std::filesystem::path(PHYRE_DATA_DIR) / "tasks";
}

std::string task_file_name(const std::string& task_id)
{
  std::string name = task_id;
  std::replace(name.begin(), name.end(), ':', '_');
  return name + ".json";
}

std::vector<Task> build_tasks(const std::filesystem::path& template_dir, const std::filesystem::path& task_dir)
{
  std::vector<Task> all;
  for (const TaskTemplate& t : load_templates(template_dir))
  {
    for (Task& task : instantiate_all(t))
    {
      save_task(task, task_dir / task_file_name(task.id));
      all.push_back(std::move(task));
    }
  }
  return all;
}

std::vector<Task> load_tier_tasks(const std::filesystem::path& task_dir, Tier tier)
{
  std::vector<Task> out;
  if (std::filesystem::is_directory(task_dir))
  {
    for (Task& t : load_tasks(task_dir))
    {
      if (t.tier == tier)
      {
        out.push_back(std::move(t));
      }
    }
  }
  if (out.empty())
  {
    throw Error(ErrorCode::MissingTasks,
                "no tier " + std::string(to_string(tier)) + " tasks in " + task_dir.string());
  }
  return out;
}

std::vector<int> PrefixAgent::rank(const Task& task)
{
  std::vector<int> out;
  out.reserve(limit_);
  for (int i : inner_->rank(task))
  {
    if (i < limit_)
    {
      out.push_back(i);
    }
  }
  return out;
}

std::unique_ptr<Agent> make_agent(const BenchConfig& config, OutcomeCache& outcomes, int fold)
{
  std::unique_ptr<Agent> agent;
  const int n = outcomes.actions().size();
  if (config.agent == "RAND")
  {
    agent = std::make_unique<RandomAgent>(n, config.agent_seed);
  }
  else if (config.agent == "MEM" || config.agent == "MEM-O")
  {
    agent = std::make_unique<MemAgent>(outcomes, config.setting,
                                       config.agent == "MEM-O" ? config.online_weight : 0.0);
  }
  else if (config.agent == "DQN" || config.agent == "DQN-O")
  {
    QNetConfig net;
    net.tier = config.tier;
    net.fusion = config.fusion;
    net.input_size = config.input_size;
    net.seed = mix_key(config.train.seed, static_cast<std::uint64_t>(fold));
    TrainConfig train = config.train;
    train.seed = net.seed;
    OnlineConfig online;
    online.steps = config.online_steps;
    online.learning_rate = config.agent == "DQN-O" ? config.online_weight : 0.0;
    agent = std::make_unique<QRankerAgent>(outcomes, net, train, online);
  }
  else if (config.agent == "ORACLE")
  {
    agent = std::make_unique<OracleAgent>(outcomes);
  }
  else
  {
    throw Error(ErrorCode::ConfigInvalid, "unknown agent '" + config.agent + "'");
  }
  if (config.rank_size > 0 && config.rank_size < n)
  {
    agent = std::make_unique<PrefixAgent>(std::move(agent), config.rank_size);
  }
  return agent;
}

std::vector<double> BenchResult::auccess_values() const
{
  std::vector<double> v;
  for (const FoldResult& f : folds)
  {
    v.push_back(f.auccess);
  }
  return v;
}

void prefetch_outcomes(OutcomeCache& outcomes, const std::vector<const Task*>& tasks, int threads)
{
  if (threads <= 0)
  {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min<int>(threads, static_cast<int>(tasks.size()));
  if (threads <= 1)
  {
    for (const Task* t : tasks)
    {
      outcomes.row(*t);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
  {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++)
      {
        outcomes.row(*tasks[i]);
      }
    });
  }
  for (auto& t : pool)
  {
    t.join();
  }
}

namespace {

std::vector<const Task*> select(const std::vector<Task>& tasks, const std::vector<std::string>& ids)
{
  std::map<std::string, const Task*> by_id;
  for (const Task& t : tasks)
  {
    by_id[t.id] = &t;
  }
  std::vector<const Task*> out;
  for (const std::string& id : ids)
  {
    out.push_back(by_id.at(id));
  }
  return out;
}

std::vector<std::string> ids_of(const std::vector<Task>& tasks)
{
  std::vector<std::string> ids;
  for (const Task& t : tasks)
  {
    ids.push_back(t.id);
  }
  return ids;
}

ActionSet bench_actions(const BenchConfig& config)
{
  return sample_actions(config.tier, config.action_set_size, config.action_seed);
}

void check_cache(const BenchConfig& config, const OutcomeCache& cache)
{
  const ActionSet& set = cache.actions();
  if (set.tier != config.tier || set.size() != config.action_set_size || set.seed != config.action_seed)
  {
    throw Error(ErrorCode::ConfigInvalid, "shared outcome cache holds a different action set");
  }
}

} // namespace

FoldResult evaluate_fold(const BenchConfig& config, const std::vector<Task>& tasks, int fold,
                         OutcomeCache& outcomes)
{
  for (const Task& t : tasks)
  {
    if (t.tier != config.tier)
    {
      throw Error(ErrorCode::TierMismatch, "task " + t.id + " is not in the benchmark tier");
    }
  }
  const FoldSplit split = make_fold(ids_of(tasks), config.setting, fold, config.split_seed);
  std::vector<std::string> train_ids = split.train;
  if (config.final_run)
  {
    train_ids.insert(train_ids.end(), split.val.begin(), split.val.end());
    std::sort(train_ids.begin(), train_ids.end());
  }
  const std::vector<const Task*> train = select(tasks, train_ids);
  const std::vector<const Task*> eval = select(tasks, config.final_run ? split.test : split.val);

  std::unique_ptr<Agent> agent = make_agent(config, outcomes, fold);
  if (config.agent != "RAND")
  {
    prefetch_outcomes(outcomes, config.agent == "ORACLE" ? eval : train);
  }
  agent->train(train);
  FoldResult r;
  r.fold = fold;
  r.split = config.final_run ? "test" : "val";
  r.logs = run_agent(*agent, eval, outcomes, kAttemptBudget,
                     mix_key(config.split_seed, static_cast<std::uint64_t>(fold)));
  r.curve = success_curve(r.logs);
  r.auccess = auccess(r.curve);
  return r;
}

BenchResult run_benchmark(const BenchConfig& config, const std::vector<Task>& tasks, OutcomeCache* shared)
{
  config.validate();
  if (tasks.empty())
  {
    throw Error(ErrorCode::MissingTasks, "no tasks to evaluate");
  }
  std::optional<OutcomeCache> own;
  if (shared == nullptr)
  {
    own.emplace(bench_actions(config));
    shared = &*own;
  }
  check_cache(config, *shared);
  BenchResult result;
  result.config = config;
  for (int fold : config.folds)
  {
    result.folds.push_back(evaluate_fold(config, tasks, fold, *shared));
  }
  result.summary = summarize(result.auccess_values());
  return result;
}

BenchResult run_benchmark(const BenchConfig& config)
{
  config.validate();
  const std::vector<Task> tasks = load_tier_tasks(config.task_dir, config.tier);
  BenchResult result = run_benchmark(config, tasks);
  if (!config.output_dir.empty())
  {
    compare_with_baselines(result, config.output_dir);
    write_results(result, config.output_dir);
  }
  return result;
}

std::string results_stem(const BenchConfig& config)
{
  std::string stem = config.agent + "_" + std::string(to_string(config.tier)) + "_" +
                     std::string(to_string(config.setting)) + "_" + (config.final_run ? "test" : "val");
  if (config.rank_size > 0)
  {
    stem += "_n" + std::to_string(config.rank_size);
  }
  return stem;
}

namespace {

std::string hex(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json constants_block()
{
  Json c = constants_json();
  c["split_fractions"] = {kTrainFraction, kValFraction, kTestFraction};
  c["fold_count"] = kFoldCount;
  c["attempt_budget"] = kAttemptBudget;
  c["significance_level"] = kSignificanceLevel;
  return c;
}

Json log_json(const AttemptLog& log)
{
  Json attempts = Json::array();
  for (const AttemptEntry& e : log.entries)
  {
    attempts.push_back({e.action_index, e.valid ? 1 : 0, e.reward ? 1 : 0});
  }
  Json j = {{"task", log.task_id}, {"attempts", attempts}};
  j["solved_at"] = log.solved_at ? Json(*log.solved_at) : Json(nullptr);
  return j;
}

AttemptLog log_from_json(const Json& j)
{
  AttemptLog log;
  log.task_id = j.at("task").get<std::string>();
  for (const Json& a : j.at("attempts"))
  {
    log.entries.push_back({a.at(0).get<int>(), a.at(1).get<int>() != 0, a.at(2).get<int>() != 0});
  }
  // The solve position is re-derived rather than trusted.
  int used = 0;
  for (const AttemptEntry& e : log.entries)
  {
    used += e.valid ? 1 : 0;
    if (e.valid && e.reward)
    {
      log.solved_at = used;
      break;
    }
  }
  return log;
}

} // namespace

Json to_json(const BenchResult& result)
{
  Json folds = Json::array();
  for (const FoldResult& f : result.folds)
  {
    Json logs = Json::array();
    for (const AttemptLog& log : f.logs)
    {
      logs.push_back(log_json(log));
    }
    folds.push_back({{"fold", f.fold},
                     {"split", f.split},
                     {"auccess", f.auccess},
                     {"curve", std::vector<double>(f.curve.begin(), f.curve.end())},
                     {"logs", logs}});
  }
  Json wil = Json::object();
  for (const auto& [name, p] : result.wilcoxon)
  {
    wil[name] = {{"p_greater", p.first}, {"p_less", p.second}};
  }
  return {{"format", "phyre-results/1"},
          {"version", PHYRE_VERSION},
          {"agent", result.config.agent},
          {"tier", std::string(to_string(result.config.tier))},
          {"setting", std::string(to_string(result.config.setting))},
          {"split", result.config.final_run ? "test" : "val"},
          {"config", result.config.to_json()},
          {"config_hash", hex(result.config.hash())},
          {"constants", constants_block()},
          {"folds", folds},
          {"summary",
           {{"mean", result.summary.mean}, {"std", result.summary.stddev}, {"median", result.summary.median}}},
          {"wilcoxon", wil}};
}

void write_results(const BenchResult& result, const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir);
  const std::string stem = results_stem(result.config);
  {
    std::ofstream out(dir / (stem + ".json"));
    out << to_json(result).dump(1) << '\n';
  }
  std::ofstream csv(dir / (stem + ".csv"));
  csv << "agent,tier,setting,split,fold,auccess";
  for (int k = 1; k <= kAttemptBudget; ++k)
  {
    csv << ",s" << k;
  }
  csv << '\n';
  for (const FoldResult& f : result.folds)
  {
    csv << result.config.agent << ',' << to_string(result.config.tier) << ',' << to_string(result.config.setting)
        << ',' << f.split << ',' << f.fold << ',' << Json(f.auccess).dump();
    for (double s : f.curve)
    {
      csv << ',' << Json(s).dump();
    }
    csv << '\n';
  }
}

std::vector<double> recompute_auccess(const Json& results)
{
  std::vector<double> out;
  for (const Json& f : results.at("folds"))
  {
    std::vector<AttemptLog> logs;
    for (const Json& l : f.at("logs"))
    {
      logs.push_back(log_from_json(l));
    }
    out.push_back(auccess(success_curve(logs)));
  }
  return out;
}

void compare_with_baselines(BenchResult& result, const std::filesystem::path& dir)
{
  if (!std::filesystem::is_directory(dir))
  {
    return;
  }
  const std::string own = results_stem(result.config);
  const std::vector<double> mine = result.auccess_values();
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
  {
    if (entry.path().extension() == ".json" && entry.path().stem() != own)
    {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files)
  {
    Json j;
    try
    {
      std::ifstream in(file);
      j = Json::parse(in);
    }
    catch (const Json::exception&)
    {
      continue;
    }
    if (j.value("format", "") != "phyre-results/1" || j.value("tier", "") != to_string(result.config.tier) ||
        j.value("setting", "") != to_string(result.config.setting) ||
        j.value("split", "") != (result.config.final_run ? "test" : "val"))
    {
      continue;
    }
    std::vector<int> folds;
    std::vector<double> theirs;
    for (const Json& f : j.at("folds"))
    {
      folds.push_back(f.at("fold").get<int>());
      theirs.push_back(f.at("auccess").get<double>());
    }
    if (folds != result.config.folds)
    {
      continue;
    }
    result.wilcoxon[file.stem().string()] = {wilcoxon_one_sided(mine, theirs), wilcoxon_one_sided(theirs, mine)};
  }
}

std::string_view to_string(SweepAxis axis)
{
  return axis == SweepAxis::RankSize ? "rank_size" : "online_weight";
}

SweepAxis sweep_axis_from_string(std::string_view name)
{
  if (name == "rank_size")
  {
    return SweepAxis::RankSize;
  }
  if (name == "online_weight")
  {
    return SweepAxis::OnlineWeight;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown sweep axis '" + std::string(name) + "'");
}

SweepReport sweep(const BenchConfig& config, const std::vector<Task>& tasks, SweepAxis axis,
                  const std::vector<double>& values, OutcomeCache* shared)
{
  if (values.empty())
  {
    throw Error(ErrorCode::ConfigInvalid, "sweep needs at least one value");
  }
  BenchConfig base = config;
  base.final_run = false;
  base.folds.clear();
  for (int f = 0; f < kSweepFolds; ++f)
  {
    base.folds.push_back(f);
  }
  for (double v : values)
  {
    const bool ok = axis == SweepAxis::RankSize ? v >= 1.0 && v <= base.action_set_size && v == std::floor(v)
                                                : v >= 0.0;
    if (!ok)
    {
      throw Error(ErrorCode::ConfigInvalid, "sweep value " + std::to_string(v) + " out of range");
    }
  }
  std::optional<OutcomeCache> own;
  if (shared == nullptr)
  {
    own.emplace(bench_actions(base));
    shared = &*own;
  }
  SweepReport report;
  report.config = base;
  report.axis = axis;
  for (double v : values)
  {
    BenchConfig c = base;
    if (axis == SweepAxis::RankSize)
    {
      c.rank_size = static_cast<int>(v);
    }
    else
    {
      c.online_weight = v;
    }
    const BenchResult r = run_benchmark(c, tasks, shared);
    SweepPoint point;
    point.value = v;
    point.auccess = r.auccess_values();
    point.summary = r.summary;
    report.points.push_back(std::move(point));
  }
  return report;
}

Json to_json(const SweepReport& report)
{
  Json points = Json::array();
  for (const SweepPoint& p : report.points)
  {
    points.push_back({{"value", p.value},
                      {"auccess", p.auccess},
                      {"mean", p.summary.mean},
                      {"std", p.summary.stddev},
                      {"median", p.summary.median}});
  }
  return {{"format", "phyre-sweep/1"},
          {"version", PHYRE_VERSION},
          {"axis", std::string(to_string(report.axis))},
          {"config", report.config.to_json()},
          {"config_hash", hex(report.config.hash())},
          {"constants", constants_block()},
          {"points", points}};
}

void write_sweep(const SweepReport& report, const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir);
  const std::string stem = "sweep_" + std::string(to_string(report.axis)) + "_" + report.config.agent + "_" +
                           std::string(to_string(report.config.tier)) + "_" +
                           std::string(to_string(report.config.setting));
  {
    std::ofstream out(dir / (stem + ".json"));
    out << to_json(report).dump(1) << '\n';
  }
  std::ofstream csv(dir / (stem + ".csv"));
  csv << "value";
  for (int f = 0; f < kSweepFolds; ++f)
  {
    csv << ",fold" << f;
  }
  csv << ",mean,std\n";
  for (const SweepPoint& p : report.points)
  {
    csv << Json(p.value).dump();
    for (double a : p.auccess)
    {
      csv << ',' << Json(a).dump();
    }
    csv << ',' << Json(p.summary.mean).dump() << ',' << Json(p.summary.stddev).dump() << '\n';
  }
}

} // namespace phyre
