#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "phyre/error.hpp"
#include "phyre/qranker.hpp"
#include "phyre/rng.hpp"

using namespace phyre;

namespace {

QNetConfig small_net()
{
  QNetConfig c;
  c.input_size = 16;
  c.channels = {4, 8, 8, 8};
  c.action_hidden = 32;
  c.seed = 1;
  return c;
}

// One blank observation; an action is positive iff its x coordinate exceeds 0.5.
TrainingSet separable(int n, int size)
{
  TrainingSet set;
  set.input_size = size;
  TrainingSet::Observation o;
  o.task_id = "S01:000";
  o.image.assign(7 * size * size, 0.0f);
  std::fill(o.image.begin() + 6 * size * size, o.image.end(), 1.0f);
  KeyedRng r(9);
  for (int i = 0; i < n; ++i)
  {
    const Action a = Action::single(r.uniform(), r.uniform(), r.uniform());
    (a.coords[0] > 0.5 ? o.positives : o.negatives).push_back(a);
  }
  set.observations.push_back(o);
  return set;
}

double pairwise_accuracy(const QNet<float>& net, const std::vector<float>& obs, int n)
{
  KeyedRng r(77);
  std::vector<Action> acts;
  for (int i = 0; i < n; ++i)
  {
    acts.push_back(Action::single(r.uniform(), r.uniform(), r.uniform()));
  }
  const std::vector<float> s = net.score_batch(obs, acts);
  long good = 0, total = 0;
  for (int i = 0; i < n; ++i)
  {
    for (int j = 0; j < n; ++j)
    {
      if (acts[i].coords[0] > 0.5 && !(acts[j].coords[0] > 0.5))
      {
        ++total;
        good += s[i] > s[j] ? 1 : 0;
      }
    }
  }
  return static_cast<double>(good) / static_cast<double>(total);
}

const Task& shipped_task()
{
  static const Task t = load_task(default_template_dir().parent_path() / "tasks" / "B01_000.json");
  return t;
}

} // namespace

TEST(TrainConfig, Validation)
{
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.steps = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.batch_size = 7;
  EXPECT_THROW(c.validate(), Error);
}

TEST(TrainingSet, AddSplitsByReward)
{
  TrainingSet set;
  set.input_size = 16;
  const std::vector<Action> acts = {Action::single(0.1, 0.9, 0.1), Action::single(0.5, 0.9, 0.1),
                                    Action::single(0.9, 0.9, 0.1)};
  set.add(shipped_task(), acts, {true, false, false});
  EXPECT_EQ(set.positive_count(), 1);
  EXPECT_EQ(set.negative_count(), 2);
  ASSERT_EQ(set.observations.size(), 1u);
  EXPECT_EQ(set.observations[0].image, task_observation(shipped_task(), 16));
  EXPECT_THROW(set.add(shipped_task(), {Action::pair(0.1, 0.1, 0.1, 0.2, 0.2, 0.1)}, {true}), Error);
}

TEST(TrainingSet, FromCacheSkipsInvalidActions)
{
  OutcomeCache cache(sample_actions(Tier::B, 60, 2));
  const TrainingSet set = training_set_from_cache(cache, {&shipped_task()}, 16);
  const auto row = cache.row(shipped_task());
  long valid = 0;
  for (Outcome o : row)
  {
    valid += o != Outcome::Invalid;
  }
  EXPECT_EQ(set.positive_count() + set.negative_count(), valid);
}

TEST(Train, NoPositivesThrows)
{
  TrainingSet set = separable(50, 16);
  set.observations[0].positives.clear();
  TrainConfig tc;
  tc.steps = 2;
  try
  {
    train(set, small_net(), tc);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::NoPositives);
  }
}

TEST(Train, InputSizeMismatchThrows)
{
  TrainConfig tc;
  tc.steps = 2;
  EXPECT_THROW(train(separable(50, 32), small_net(), tc), Error);
}

TEST(Train, LearnsSeparableRanking)
{
  const TrainingSet set = separable(1000, 16);
  TrainConfig tc;
  tc.steps = 400;
  tc.learning_rate = 3e-3;
  TrainLog log;
  const QNet<float> net = train(set, small_net(), tc, &log);
  ASSERT_EQ(log.loss.size(), 400u);
  EXPECT_LT(log.loss.back(), log.loss.front());
  EXPECT_NEAR(log.learning_rate.front(), 3e-3, 1e-9);
  EXPECT_LT(log.learning_rate.back(), 1e-6);
  EXPECT_GE(pairwise_accuracy(net, set.observations[0].image, 400), 0.95);
}

TEST(Train, DeterministicGivenSeed)
{
  const TrainingSet set = separable(200, 16);
  TrainConfig tc;
  tc.steps = 10;
  const QNet<float> a = train(set, small_net(), tc);
  const QNet<float> b = train(set, small_net(), tc);
  EXPECT_EQ(a.params(), b.params());
  tc.seed = 1;
  EXPECT_NE(a.params(), train(set, small_net(), tc).params());
}

TEST(TrainLog, CsvHasHeaderAndRows)
{
  TrainLog log;
  log.loss = {0.7, 0.6};
  log.learning_rate = {1e-3, 5e-4};
  const auto file = std::filesystem::temp_directory_path() / "phyre_trainlog.csv";
  log.write_csv(file);
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,learning_rate,loss");
  int rows = 0;
  while (std::getline(in, line))
  {
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}

TEST(Online, ZeroStepsOrRateLeaveParametersUntouched)
{
  QNet<float> net(small_net());
  const auto before = net.params();
  const std::vector<float> obs = task_observation(shipped_task(), 16);
  const std::vector<Action> pos = {Action::single(0.2, 0.8, 0.1)};
  const std::vector<Action> neg = {Action::single(0.8, 0.8, 0.1)};
  online_update(net, obs, pos, neg, 0, 0.1);
  EXPECT_EQ(net.params(), before);
  online_update(net, obs, pos, neg, 5, 0.0);
  EXPECT_EQ(net.params(), before);
  online_update(net, obs, {}, {}, 5, 0.1);
  EXPECT_EQ(net.params(), before);
}

TEST(Online, StepsMoveScoresTowardLabels)
{
  QNet<float> net(small_net());
  const std::vector<float> obs = task_observation(shipped_task(), 16);
  const Action p = Action::single(0.2, 0.8, 0.1);
  const Action n = Action::single(0.8, 0.8, 0.1);
  const float gap = net.score(obs, p) - net.score(obs, n);
  online_update(net, obs, {p}, {n}, 5, 0.05);
  EXPECT_GT(net.score(obs, p) - net.score(obs, n), gap);
}

TEST(Agent, RankIsScoreOrderAndOnlineZeroMatchesOffline)
{
  OutcomeCache cache(sample_actions(Tier::B, 80, 4));
  TrainConfig tc;
  tc.steps = 5;
  tc.batch_size = 8;
  QRankerAgent offline(cache, small_net(), tc);
  EXPECT_EQ(offline.name(), "DQN");
  offline.train({&shipped_task()});
  EXPECT_EQ(offline.train_log().loss.size(), 5u);

  const std::vector<int> r = offline.rank(shipped_task());
  ASSERT_EQ(r.size(), 80u);
  const std::vector<float> s =
      offline.net().score_batch(task_observation(shipped_task(), 16), cache.actions().actions);
  for (std::size_t k = 1; k < r.size(); ++k)
  {
    EXPECT_GE(s[r[k - 1]], s[r[k]]);
  }

  QRankerAgent zero(cache, small_net(), tc, OnlineConfig{5, 0.0});
  zero.set_net(offline.net());
  QRankerAgent learning(cache, small_net(), tc, OnlineConfig{5, 0.05});
  EXPECT_EQ(learning.name(), "DQN-O");
  learning.set_net(offline.net());
  const auto la = run_agent(offline, {&shipped_task()}, cache);
  const auto lb = run_agent(zero, {&shipped_task()}, cache);
  EXPECT_EQ(la[0].solved_at, lb[0].solved_at);
  EXPECT_EQ(zero.net().params(), offline.net().params());
  run_agent(learning, {&shipped_task()}, cache);
  EXPECT_NE(learning.net().params(), offline.net().params());
}
