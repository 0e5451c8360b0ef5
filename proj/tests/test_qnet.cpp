#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "phyre/error.hpp"
#include "phyre/qnet.hpp"
#include "phyre/rng.hpp"

using namespace phyre;

namespace {

QNetConfig small_config(Tier tier, FusionPoint fusion)
{
  QNetConfig c;
  c.tier = tier;
  c.fusion = fusion;
  c.input_size = 16;
  c.channels = {3, 4, 4, 5};
  c.action_hidden = 6;
  c.seed = 3;
  return c;
}

template <class T>
std::vector<T> random_obs(std::size_t n, std::uint64_t key)
{
  KeyedRng r(key);
  std::vector<T> obs(n);
  for (auto& x : obs)
  {
    x = static_cast<T>(r.uniform());
  }
  return obs;
}

Action some_action(Tier tier)
{
  return tier == Tier::B ? Action::single(0.3, 0.6, 0.2) : Action::pair(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
}

constexpr FusionPoint kAllFusions[] = {FusionPoint::First, FusionPoint::All, FusionPoint::Global,
                                       FusionPoint::PreFinal};

} // namespace

TEST(Film, IdentityIsExact)
{
  const std::vector<double> x = random_obs<double>(3 * 5, 1);
  EXPECT_EQ(film_fuse(x, 3, std::vector<double>(3, 1.0), std::vector<double>(3, 0.0)), x);
  const std::vector<float> xf = random_obs<float>(4 * 7, 2);
  EXPECT_EQ(film_fuse(xf, 4, std::vector<float>(4, 1.0f), std::vector<float>(4, 0.0f)), xf);
}

TEST(Film, PerChannelGainAndBias)
{
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> out = film_fuse(x, 2, std::vector<double>{2, -1}, std::vector<double>{0.5, 10});
  EXPECT_EQ(out, (std::vector<double>{2.5, 4.5, 7, 6}));
}

TEST(Film, ShapeMismatchThrows)
{
  try
  {
    film_fuse(std::vector<double>(5), 2, std::vector<double>(2), std::vector<double>(2));
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW(film_fuse(std::vector<double>(4), 2, std::vector<double>(3), std::vector<double>(2)), Error);
}

TEST(Fusion, NamesRoundTrip)
{
  for (FusionPoint p : kAllFusions)
  {
    EXPECT_EQ(fusion_point_from_string(to_string(p)), p);
  }
  EXPECT_THROW(fusion_point_from_string("middle"), Error);
}

TEST(Downsample, BlockAveragesOfOneHotPlanes)
{
  ObservationImage img;
  for (int j = 0; j < 4; ++j)
  {
    for (int i = 0; i < 2; ++i)
    {
      img.at(i, j) = kUserPlaced;
    }
  }
  const std::vector<double> d = downsample_observation<double>(img, 64);
  ASSERT_EQ(d.size(), 7u * 64 * 64);
  EXPECT_DOUBLE_EQ(d[(kUserPlaced - 1) * 64 * 64 + 0], 0.5);
  EXPECT_DOUBLE_EQ(d[(kBackground - 1) * 64 * 64 + 0], 0.5);
  EXPECT_DOUBLE_EQ(d[(kBackground - 1) * 64 * 64 + 1], 1.0);
  for (int cell = 0; cell < 64 * 64; cell += 37)
  {
    double sum = 0;
    for (int c = 0; c < 7; ++c)
    {
      sum += d[c * 64 * 64 + cell];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Loss, BceAndSigmoid)
{
  EXPECT_NEAR(bce_with_logit(0.0, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_with_logit(0.0, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_with_logit(800.0, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(bce_with_logit(-800.0, 1.0), 800.0, 1e-9);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
}

TEST(QNet, ScoresAreProbabilitiesAndBatchMatchesSingle)
{
  for (FusionPoint fp : kAllFusions)
  {
    QNetConfig c = small_config(Tier::B, fp);
    const QNet<float> net(c);
    const std::vector<float> obs = random_obs<float>(net.input_length(), 4);
    std::vector<Action> actions;
    KeyedRng r(8);
    for (int i = 0; i < 20; ++i)
    {
      actions.push_back(Action::single(r.uniform(), r.uniform(), r.uniform()));
    }
    const std::vector<float> batch = net.score_batch(obs, actions);
    for (int i = 0; i < 20; ++i)
    {
      EXPECT_GT(batch[i], 0.0f);
      EXPECT_LT(batch[i], 1.0f);
      EXPECT_NEAR(batch[i], net.score(obs, actions[i]), 1e-6);
    }
  }
}

TEST(QNet, ZeroHeadScoresOneHalf)
{
  QNetConfig c = small_config(Tier::TwoB, FusionPoint::All);
  c.zero_head = true;
  const QNet<double> net(c);
  const std::vector<double> obs = random_obs<double>(net.input_length(), 4);
  EXPECT_EQ(net.score(obs, some_action(Tier::TwoB)), 0.5);
}

TEST(QNet, TierMismatchedActionThrows)
{
  const QNet<double> net(small_config(Tier::B, FusionPoint::First));
  const std::vector<double> obs = random_obs<double>(net.input_length(), 4);
  EXPECT_THROW(net.score(obs, some_action(Tier::TwoB)), Error);
  EXPECT_THROW(net.score(std::vector<double>(3), some_action(Tier::B)), Error);
}

TEST(QNet, InitIsSeeded)
{
  const QNet<float> a(small_config(Tier::B, FusionPoint::First));
  const QNet<float> b(small_config(Tier::B, FusionPoint::First));
  QNetConfig other = small_config(Tier::B, FusionPoint::First);
  other.seed = 4;
  EXPECT_EQ(a.params(), b.params());
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_NE(a.params(), QNet<float>(other).params());
}

TEST(QNet, ActionChangesScore)
{
  for (FusionPoint fp : kAllFusions)
  {
    const QNet<double> net(small_config(Tier::B, fp));
    const std::vector<double> obs = random_obs<double>(net.input_length(), 4);
    EXPECT_NE(net.score(obs, Action::single(0.1, 0.1, 0.1)), net.score(obs, Action::single(0.9, 0.8, 0.5)))
        << to_string(fp);
  }
}

TEST(GradCheck, AllFusionPointsAndTiers)
{
  for (FusionPoint fp : kAllFusions)
  {
    for (Tier tier : {Tier::B, Tier::TwoB})
    {
      QNet<double> net(small_config(tier, fp));
      const std::vector<double> obs = random_obs<double>(net.input_length(), 5);
      for (double label : {0.0, 1.0})
      {
        const GradCheckResult g = grad_check(net, obs, some_action(tier), label, 12);
        EXPECT_LT(g.max_relative_error, 1e-4) << to_string(fp) << " " << to_string(tier);
        EXPECT_GT(g.gradient_norm, 0.0);
        // Every tensor kind is covered: conv stages, both action layers and the head.
        EXPECT_EQ(g.per_tensor.size(), net.tensors().size());
      }
    }
  }
}

TEST(GradCheck, ErrorShrinksWithStepSize)
{
  QNet<double> net(small_config(Tier::B, FusionPoint::PreFinal));
  const std::vector<double> obs = random_obs<double>(net.input_length(), 5);
  const double coarse = grad_check(net, obs, some_action(Tier::B), 1.0, 12, 1e-2).max_relative_error;
  const double fine = grad_check(net, obs, some_action(Tier::B), 1.0, 12, 1e-4).max_relative_error;
  EXPECT_LT(fine, coarse);
}

TEST(Gradient, AccumulateMatchesLossAndScales)
{
  const QNet<double> net(small_config(Tier::B, FusionPoint::All));
  const std::vector<double> obs = random_obs<double>(net.input_length(), 6);
  const Action a1 = Action::single(0.2, 0.3, 0.4), a2 = Action::single(0.7, 0.3, 0.1);
  const std::vector<QNet<double>::Example> ex = {{&a1, 1.0}, {&a2, 0.0}};
  std::vector<double> g1(net.params().size(), 0.0), g2(net.params().size(), 0.0);
  const double sum = net.accumulate_gradient(obs, ex, 1.0, g1);
  net.accumulate_gradient(obs, ex, 0.5, g2);
  EXPECT_NEAR(sum / 2.0, net.loss(obs, ex), 1e-12);
  for (std::size_t i = 0; i < g1.size(); ++i)
  {
    ASSERT_NEAR(g2[i], 0.5 * g1[i], 1e-12);
  }
}

TEST(Checkpoint, RoundTripIsExact)
{
  const QNet<float> net(small_config(Tier::TwoB, FusionPoint::Global));
  const auto file = std::filesystem::temp_directory_path() / "phyre_qnet.ckpt";
  save_checkpoint(net, file);
  const QNet<float> back = load_checkpoint(file);
  EXPECT_EQ(back.config(), net.config());
  EXPECT_EQ(back.params(), net.params());
  EXPECT_EQ(back.checksum(), net.checksum());
}

TEST(Checkpoint, CorruptionIsDetected)
{
  const QNet<float> net(small_config(Tier::B, FusionPoint::First));
  const auto file = std::filesystem::temp_directory_path() / "phyre_qnet_bad.ckpt";
  save_checkpoint(net, file);
  std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(-12, std::ios::end);
  f.put('\x55');
  f.close();
  try
  {
    load_checkpoint(file);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  std::ofstream(file, std::ios::binary) << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(file), Error);
}

TEST(Precision, DoubleCopyAgrees)
{
  const QNet<float> net(small_config(Tier::B, FusionPoint::PreFinal));
  const QNet<double> d = to_double(net);
  const std::vector<float> obs = random_obs<float>(net.input_length(), 7);
  const std::vector<double> obs_d(obs.begin(), obs.end());
  EXPECT_NEAR(net.score(obs, some_action(Tier::B)), d.score(obs_d, some_action(Tier::B)), 1e-5);
}
