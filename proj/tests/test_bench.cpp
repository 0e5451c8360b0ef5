#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "phyre/bench.hpp"
#include "phyre/error.hpp"

using namespace phyre;

namespace {

constexpr int kSmallSet = 60;

const std::vector<Task>& b_tasks()
{
  static const std::vector<Task> tasks = load_tier_tasks(default_task_dir(), Tier::B);
  return tasks;
}

OutcomeCache& cache()
{
  static OutcomeCache c(sample_actions(Tier::B, kSmallSet, 0));
  return c;
}

BenchConfig small(const std::string& agent)
{
  BenchConfig c;
  c.agent = agent;
  c.folds = {0, 1};
  c.action_set_size = kSmallSet;
  return c;
}

std::filesystem::path fresh_dir(const std::string& name)
{
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ErrorCode code_of(const std::function<void()>& f)
{
  try
  {
    f();
  }
  catch (const Error& e)
  {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ParseError;
}

} // namespace

TEST(BenchConfig, ValidationRejectsBadValues)
{
  BenchConfig c;
  EXPECT_NO_THROW(c.validate());
  c.agent = "NOPE";
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::ConfigInvalid);
  c = {};
  c.folds = {10};
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.folds = {};
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.rank_size = c.action_set_size + 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.online_weight = -1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.agent = "DQN";
  c.train.steps = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(BenchConfig, JsonRoundTripAndHash)
{
  BenchConfig c = small("MEM-O");
  c.online_weight = 2.5;
  c.setting = Setting::WithinTemplate;
  c.train.steps = 123;
  c.fusion = FusionPoint::All;
  c.final_run = true;
  const BenchConfig back = BenchConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  BenchConfig other = c;
  other.split_seed = 1;
  EXPECT_NE(other.hash(), c.hash());
  EXPECT_EQ(code_of([] { BenchConfig::from_json(Json{{"folds", "zero"}}); }), ErrorCode::ConfigInvalid);
}

TEST(Tasks, FileNamesAndMissingDirectory)
{
  EXPECT_EQ(task_file_name("2B03:017"), "2B03_017.json");
  EXPECT_EQ(code_of([] { load_tier_tasks("/nonexistent/phyre", Tier::B); }), ErrorCode::MissingTasks);
  EXPECT_EQ(b_tasks().size(), 100u);
}

TEST(Agents, FactoryNamesAndPrefix)
{
  for (const std::string& name : kAgentNames)
  {
    BenchConfig c = small(name);
    c.online_weight = name == "MEM-O" || name == "DQN-O" ? 1.0 : 0.0;
    EXPECT_EQ(make_agent(c, cache(), 0)->name(), name);
  }
  BenchConfig c = small("RAND");
  c.rank_size = 10;
  const std::vector<int> r = make_agent(c, cache(), 0)->rank(b_tasks()[0]);
  ASSERT_EQ(r.size(), 10u);
  for (int i : r)
  {
    EXPECT_LT(i, 10);
  }
}

TEST(Run, OracleDominatesRandomOnEveryFold)
{
  const BenchResult oracle = run_benchmark(small("ORACLE"), b_tasks(), &cache());
  const BenchResult rand = run_benchmark(small("RAND"), b_tasks(), &cache());
  ASSERT_EQ(oracle.folds.size(), 2u);
  for (std::size_t f = 0; f < oracle.folds.size(); ++f)
  {
    EXPECT_EQ(oracle.folds[f].split, "val");
    EXPECT_EQ(oracle.folds[f].logs.size(), 20u);
    EXPECT_GE(oracle.folds[f].auccess, rand.folds[f].auccess);
  }
  EXPECT_NEAR(oracle.summary.mean, (oracle.folds[0].auccess + oracle.folds[1].auccess) / 2, 1e-12);
}

TEST(Run, FinalRunReportsTestSplit)
{
  BenchConfig c = small("MEM");
  c.folds = {3};
  c.final_run = true;
  const BenchResult r = run_benchmark(c, b_tasks(), &cache());
  EXPECT_EQ(r.folds[0].split, "test");
  const FoldSplit split = make_fold([] {
    std::vector<std::string> ids;
    for (const Task& t : b_tasks())
    {
      ids.push_back(t.id);
    }
    return ids;
  }(), c.setting, 3, c.split_seed);
  std::set<std::string> logged;
  for (const AttemptLog& log : r.folds[0].logs)
  {
    logged.insert(log.task_id);
  }
  EXPECT_EQ(logged, std::set<std::string>(split.test.begin(), split.test.end()));
}

TEST(Run, ZeroOnlineWeightMatchesOffline)
{
  BenchConfig a = small("MEM");
  BenchConfig b = small("MEM-O");
  b.online_weight = 0.0;
  const BenchResult ra = run_benchmark(a, b_tasks(), &cache());
  const BenchResult rb = run_benchmark(b, b_tasks(), &cache());
  EXPECT_EQ(ra.auccess_values(), rb.auccess_values());
}

TEST(Run, Deterministic)
{
  const BenchResult a = run_benchmark(small("RAND"), b_tasks(), &cache());
  const BenchResult b = run_benchmark(small("RAND"), b_tasks(), &cache());
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Run, WrongSharedCacheOrTierIsRejected)
{
  OutcomeCache other(sample_actions(Tier::B, kSmallSet + 1, 0));
  EXPECT_EQ(code_of([&] { run_benchmark(small("RAND"), b_tasks(), &other); }), ErrorCode::ConfigInvalid);
  BenchConfig c = small("RAND");
  c.tier = Tier::TwoB;
  OutcomeCache two(sample_actions(Tier::TwoB, kSmallSet, 0));
  EXPECT_EQ(code_of([&] { run_benchmark(c, b_tasks(), &two); }), ErrorCode::TierMismatch);
}

TEST(Results, JsonCarriesLogsThatReproduceAuccess)
{
  const BenchResult r = run_benchmark(small("ORACLE"), b_tasks(), &cache());
  const Json j = to_json(r);
  EXPECT_EQ(j.at("format"), "phyre-results/1");
  EXPECT_EQ(j.at("agent"), "ORACLE");
  EXPECT_EQ(j.at("split"), "val");
  EXPECT_TRUE(j.contains("constants"));
  EXPECT_TRUE(j.contains("config_hash"));
  const std::vector<double> again = recompute_auccess(j);
  ASSERT_EQ(again.size(), r.folds.size());
  for (std::size_t i = 0; i < again.size(); ++i)
  {
    EXPECT_NEAR(again[i], r.folds[i].auccess, 1e-9);
  }
}

TEST(Results, WrittenFilesAndBaselineComparison)
{
  const auto dir = fresh_dir("phyre_bench_results");
  const BenchResult rand = run_benchmark(small("RAND"), b_tasks(), &cache());
  write_results(rand, dir);
  const std::string stem = results_stem(rand.config);
  EXPECT_EQ(stem, "RAND_B_cross_val");
  ASSERT_TRUE(std::filesystem::exists(dir / (stem + ".json")));
  std::ifstream csv(dir / (stem + ".csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("agent,tier,setting,split,fold,auccess,s1,", 0), 0u);
  int rows = 0;
  for (std::string line; std::getline(csv, line);)
  {
    ++rows;
  }
  EXPECT_EQ(rows, 2);

  BenchResult oracle = run_benchmark(small("ORACLE"), b_tasks(), &cache());
  compare_with_baselines(oracle, dir);
  ASSERT_TRUE(oracle.wilcoxon.contains(stem));
  const auto [greater, less] = oracle.wilcoxon.at(stem);
  EXPECT_GE(greater, 0.0);
  EXPECT_LE(greater, 1.0);
  EXPECT_GE(less, 0.0);
  EXPECT_LE(less, 1.0);

  BenchResult within = run_benchmark([] {
    BenchConfig c = small("ORACLE");
    c.setting = Setting::WithinTemplate;
    return c;
  }(), b_tasks(), &cache());
  compare_with_baselines(within, dir);
  EXPECT_TRUE(within.wilcoxon.empty());
}

TEST(Sweep, RankSizeUsesThreeValidationFolds)
{
  const SweepReport rep = sweep(small("ORACLE"), b_tasks(), SweepAxis::RankSize, {5, 60}, &cache());
  ASSERT_EQ(rep.points.size(), 2u);
  EXPECT_EQ(rep.config.folds, (std::vector<int>{0, 1, 2}));
  for (const SweepPoint& p : rep.points)
  {
    EXPECT_EQ(p.auccess.size(), 3u);
  }
  // A larger candidate pool can only help an oracle.
  for (int f = 0; f < 3; ++f)
  {
    EXPECT_LE(rep.points[0].auccess[f], rep.points[1].auccess[f]);
  }
  const auto dir = fresh_dir("phyre_sweep");
  write_sweep(rep, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep_rank_size_ORACLE_B_cross.json"));
  EXPECT_EQ(to_json(rep).at("format"), "phyre-sweep/1");
}

TEST(Sweep, RejectsOutOfRangeValues)
{
  EXPECT_THROW(sweep(small("RAND"), b_tasks(), SweepAxis::RankSize, {0.0}, &cache()), Error);
  EXPECT_THROW(sweep(small("RAND"), b_tasks(), SweepAxis::RankSize, {2.5}, &cache()), Error);
  EXPECT_THROW(sweep(small("RAND"), b_tasks(), SweepAxis::OnlineWeight, {-1.0}, &cache()), Error);
  EXPECT_THROW(sweep(small("RAND"), b_tasks(), SweepAxis::OnlineWeight, {}, &cache()), Error);
  EXPECT_EQ(sweep_axis_from_string(to_string(SweepAxis::OnlineWeight)), SweepAxis::OnlineWeight);
}
