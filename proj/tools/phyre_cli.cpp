// phyre: build and validate tasks, run benchmarks and sweeps, serve the simulator.
//
// Exit codes: 0 ok, 2 configuration error, 3 validation failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "phyre/bench.hpp"
#include "phyre/error.hpp"
#include "phyre/service.hpp"
#include "phyre/solvability.hpp"

using namespace phyre;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;

struct Paths
{
  std::string templates = default_template_dir().string();
  std::string tasks = default_task_dir().string();
};

std::vector<int> parse_ints(const std::string& text)
{
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
  {
    try
    {
      out.push_back(std::stoi(item));
    }
    catch (const std::exception&)
    {
      throw Error(ErrorCode::ConfigInvalid, "not an integer: '" + item + "'");
    }
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
  {
    try
    {
      out.push_back(std::stod(item));
    }
    catch (const std::exception&)
    {
      throw Error(ErrorCode::ConfigInvalid, "not a number: '" + item + "'");
    }
  }
  return out;
}

int cmd_tasks_build(const Paths& paths)
{
  const auto tasks = build_tasks(paths.templates, paths.tasks);
  std::printf("wrote %zu tasks to %s\n", tasks.size(), paths.tasks.c_str());
  return 0;
}

int cmd_tasks_validate(const Paths& paths, const std::vector<std::string>& only, std::uint64_t seed,
                       const std::string& report_file)
{
  ValidationOptions options;
  options.seed = seed;
  bool ok = true;
  Json report = Json::array();
  for (const TaskTemplate& t : load_templates(paths.templates))
  {
    if (!only.empty() && std::find(only.begin(), only.end(), t.id) == only.end())
    {
      continue;
    }
    TemplateReport r;
    bool exhausted = false;
    try
    {
      r = validate_template(t, instantiate_all(t), options, &r);
    }
    catch (const Error& e)
    {
      if (e.code() != ErrorCode::BudgetExhausted)
      {
        throw;
      }
      exhausted = true;
    }
    const bool valid = r.valid && !exhausted;
    ok = ok && valid;
    int solvable = 0;
    Json tasks = Json::array();
    for (const TaskVerdict& tv : r.tasks)
    {
      solvable += tv.in_tier.verdict == Verdict::Solvable ? 1 : 0;
      Json j = {{"task", tv.task_id},
                {"verdict", std::string(to_string(tv.in_tier.verdict))},
                {"samples", tv.in_tier.samples_used},
                {"random_solve_estimate", tv.random_solve_estimate}};
      if (tv.single_ball)
      {
        j["single_ball"] = std::string(to_string(tv.single_ball->verdict));
      }
      tasks.push_back(j);
    }
    std::printf("%-5s %-3s solvable %2d/%zu single-ball %.2f %s\n", t.id.c_str(),
                std::string(to_string(t.tier)).c_str(), solvable, r.tasks.size(), r.fraction_single_ball_solvable,
                valid ? "valid" : "INVALID");
    report.push_back({{"template", t.id},
                      {"tier", std::string(to_string(t.tier))},
                      {"valid", valid},
                      {"fraction_single_ball_solvable", r.fraction_single_ball_solvable},
                      {"tasks", tasks}});
  }
  if (!report_file.empty())
  {
    std::ofstream(report_file) << report.dump(1) << '\n';
  }
  return ok ? 0 : kExitValidation;
}

Task find_task(const Paths& paths, const std::string& id)
{
  const std::filesystem::path file = std::filesystem::path(paths.tasks) / task_file_name(id);
  if (!std::filesystem::exists(file))
  {
    throw Error(ErrorCode::MissingTasks, "no task file " + file.string());
  }
  return load_task(file);
}

int cmd_solvability(const Paths& paths, const std::string& id, const std::string& tier, double p0,
                    std::uint64_t seed)
{
  const Task task = find_task(paths, id);
  const Tier t = tier.empty() ? task.tier : tier_from_string(tier);
  const double p = p0 > 0.0 ? p0 : default_p0(t);
  const SolvabilityVerdict v = classify_solvability_in_tier(task, t, p, seed, default_escalated_cap(p));
  const Json j = {{"task", task.id},
                  {"tier", std::string(to_string(t))},
                  {"p0", p},
                  {"verdict", std::string(to_string(v.verdict))},
                  {"samples", v.samples_used},
                  {"stable_solutions", v.stable_solutions_found},
                  {"solutions", v.plain_solutions_found},
                  {"log_likelihood_ratio", v.log_likelihood_ratio}};
  std::cout << j.dump(1) << '\n';
  return 0;
}

int cmd_diversity(const Paths& paths, const std::string& tier, long samples, std::uint64_t seed,
                  const std::string& out)
{
  const Tier t = tier_from_string(tier);
  const DiversityHistogram h = diversity_histogram(load_tier_tasks(paths.tasks, t), t, samples, seed);
  if (!out.empty())
  {
    write_histogram_csv(h, out);
  }
  std::printf("valid actions %ld / %ld, widest solving action covers %.1f%% of tasks\n", h.n_valid, h.n_samples,
              100.0 * h.max_fraction());
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Physical reasoning benchmark tools"};
  app.require_subcommand(1);
  Paths paths;
  app.add_option("--templates", paths.templates, "Template directory");
  app.add_option("--tasks", paths.tasks, "Task directory");

  auto* tasks = app.add_subcommand("tasks", "Build or validate the task suite");
  tasks->require_subcommand(1);
  auto* build = tasks->add_subcommand("build", "Instantiate every template into the task directory");
  auto* validate = tasks->add_subcommand("validate", "Check solvability and the single-ball rule per template");
  std::vector<std::string> only;
  std::uint64_t seed = 1;
  std::string report_file;
  validate->add_option("--template", only, "Restrict to these template ids");
  validate->add_option("--seed", seed, "Sampling seed");
  validate->add_option("--report", report_file, "Write a JSON report");

  auto* solv = app.add_subcommand("solvability", "Classify one task with the sequential test");
  std::string task_id, tier;
  double p0 = 0.0;
  solv->add_option("task", task_id, "Task id, e.g. B01:003")->required();
  solv->add_option("--tier", tier, "Action tier to test (default: the task's)");
  solv->add_option("--p0", p0, "Solvability threshold (default: tier default)");
  solv->add_option("--seed", seed, "Sampling seed");

  auto* div = app.add_subcommand("diversity", "Histogram of how many tasks random actions solve");
  long samples = 10000;
  std::string out_csv;
  div->add_option("--tier", tier, "Tier")->required();
  div->add_option("--samples", samples, "Random actions");
  div->add_option("--seed", seed, "Sampling seed");
  div->add_option("--out", out_csv, "CSV output");

  auto* bench = app.add_subcommand("bench", "Evaluate agents over cross-validation folds");
  bench->require_subcommand(1);
  auto* run = bench->add_subcommand("run", "Run one agent");
  auto* sweep_cmd = bench->add_subcommand("sweep", "Vary rank size or online weight on folds 0-2 (validation)");
  BenchConfig cfg;
  std::string config_file, folds = "0,1,2,3,4,5,6,7,8,9", setting = "cross", bench_tier = "B", fusion = "prefinal";
  std::string output = "results", axis, values;
  for (auto* c : {run, sweep_cmd})
  {
    c->add_option("--config", config_file, "JSON config; flags given explicitly override it");
    c->add_option("--agent", cfg.agent, "RAND, MEM, MEM-O, DQN, DQN-O or ORACLE");
    c->add_option("--tier", bench_tier, "B or 2B");
    c->add_option("--setting", setting, "within or cross");
    c->add_option("--actions", cfg.action_set_size, "Size of the ranked action set");
    c->add_option("--online-weight", cfg.online_weight, "MEM-O weight or DQN-O learning rate");
    c->add_option("--online-steps", cfg.online_steps, "DQN-O gradient steps per task");
    c->add_option("--train-steps", cfg.train.steps, "DQN training steps");
    c->add_option("--batch", cfg.train.batch_size, "DQN batch size");
    c->add_option("--lr", cfg.train.learning_rate, "DQN base learning rate");
    c->add_option("--fusion", fusion, "first, all, global or prefinal");
    c->add_option("--split-seed", cfg.split_seed, "Fold seed");
    c->add_option("--action-seed", cfg.action_seed, "Action set seed");
    c->add_option("--out", output, "Output directory");
  }
  run->add_option("--folds", folds, "Comma-separated fold indices");
  run->add_option("--rank-size", cfg.rank_size, "Rank only the first N actions (0 = all)");
  run->add_flag("--final", cfg.final_run, "Train on train+val and report test metrics");
  sweep_cmd->add_option("--axis", axis, "rank_size or online_weight")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();

  auto* serve = app.add_subcommand("serve", "HTTP simulation service");
  std::string host = "127.0.0.1", log_file;
  int port = 8080, stride = kDefaultFrameStride;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--stride", stride, "Default frame stride");
  serve->add_option("--log", log_file, "Append attempts as JSON lines");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try
  {
    if (build->parsed())
    {
      return cmd_tasks_build(paths);
    }
    if (validate->parsed())
    {
      return cmd_tasks_validate(paths, only, seed, report_file);
    }
    if (solv->parsed())
    {
      return cmd_solvability(paths, task_id, tier, p0, seed);
    }
    if (div->parsed())
    {
      return cmd_diversity(paths, tier, samples, seed, out_csv);
    }
    if (run->parsed() || sweep_cmd->parsed())
    {
      CLI::App* c = run->parsed() ? run : sweep_cmd;
      BenchConfig base;
      if (!config_file.empty())
      {
        std::ifstream in(config_file);
        if (!in)
        {
          throw Error(ErrorCode::ConfigInvalid, "cannot read " + config_file);
        }
        try
        {
          base = BenchConfig::from_json(Json::parse(in));
        }
        catch (const Json::exception& e)
        {
          throw Error(ErrorCode::ConfigInvalid, std::string("bad config file: ") + e.what());
        }
      }
      auto given = [&](const std::string& flag) { return c->count(flag) > 0; };
      if (given("--agent")) base.agent = cfg.agent;
      if (given("--tier")) base.tier = tier_from_string(bench_tier);
      if (given("--setting")) base.setting = setting_from_string(setting);
      if (given("--actions")) base.action_set_size = cfg.action_set_size;
      if (given("--online-weight")) base.online_weight = cfg.online_weight;
      if (given("--online-steps")) base.online_steps = cfg.online_steps;
      if (given("--train-steps")) base.train.steps = cfg.train.steps;
      if (given("--batch")) base.train.batch_size = cfg.train.batch_size;
      if (given("--lr")) base.train.learning_rate = cfg.train.learning_rate;
      if (given("--fusion")) base.fusion = fusion_point_from_string(fusion);
      if (given("--split-seed")) base.split_seed = cfg.split_seed;
      if (given("--action-seed")) base.action_seed = cfg.action_seed;
      base.task_dir = paths.tasks;
      base.output_dir = output;
      if (run->parsed())
      {
        if (given("--folds")) base.folds = parse_ints(folds);
        if (given("--rank-size")) base.rank_size = cfg.rank_size;
        if (cfg.final_run) base.final_run = true;
        const BenchResult r = run_benchmark(base);
        std::printf("%s %s %s (%s): AUCCESS %.2f +- %.2f over %zu folds\n", base.agent.c_str(),
                    std::string(to_string(base.tier)).c_str(), std::string(to_string(base.setting)).c_str(),
                    base.final_run ? "test" : "val", r.summary.mean, r.summary.stddev, r.folds.size());
        for (const auto& [name, p] : r.wilcoxon)
        {
          std::printf("  vs %s: p(greater) %.4g p(less) %.4g\n", name.c_str(), p.first, p.second);
        }
        return 0;
      }
      base.validate();
      const SweepReport report =
          sweep(base, load_tier_tasks(base.task_dir, base.tier), sweep_axis_from_string(axis), parse_doubles(values));
      write_sweep(report, output);
      for (const SweepPoint& p : report.points)
      {
        std::printf("%s = %g: AUCCESS %.2f +- %.2f\n", axis.c_str(), p.value, p.summary.mean, p.summary.stddev);
      }
      return 0;
    }
    if (serve->parsed())
    {
      ServiceOptions options;
      options.default_stride = stride;
      if (!log_file.empty())
      {
        options.attempt_log = log_file;
      }
      std::vector<Task> all;
      if (std::filesystem::is_directory(paths.tasks))
      {
        all = load_tasks(paths.tasks);
      }
      SimService service(std::move(all), options);
      const int bound = service.bind(host, port);
      std::printf("serving on http://%s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      service.listen();
      return 0;
    }
  }
  catch (const Error& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code())
    {
    case ErrorCode::InvalidInstance:
    case ErrorCode::BudgetExhausted:
      return kExitValidation;
    default:
      return kExitConfig;
    }
  }
  catch (const std::exception& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
