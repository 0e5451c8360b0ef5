#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "phyre/environment.hpp"
#include "phyre/error.hpp"
#include "phyre/physics.hpp"

using namespace phyre;

namespace {

Task open_task(Tier tier)
{
  Task t;
  t.id = "T01:000";
  t.template_id = "T01";
  t.tier = tier;
  t.world.bodies = {body_from_vocabulary(BodyKind::Ball, 0.2, {40, 30}, 0, true, Role::GoalSubject, 0),
                    body_from_vocabulary(BodyKind::Bar, 0.3, {200, 20}, 0, false, Role::GoalObject, 1)};
  t.goal = Goal{0, Relation::Touching, 1, 3.0};
  return t;
}

// Cell category by direct geometry, independent of the rasterizer's bounding-box scan.
std::uint8_t oracle_cell(const WorldState& w, const Goal& g, int i, int j)
{
  const Vec2 p{i + 0.5, j + 0.5};
  int best_rank = -1;
  std::uint8_t cat = kBackground;
  for (const Body& b : w.bodies)
  {
    const double c = std::cos(b.pose.angle), s = std::sin(b.pose.angle);
    const double dx = p.x - b.pose.x, dy = p.y - b.pose.y;
    const double lx = c * dx + s * dy, ly = -s * dx + c * dy;
    bool in = false;
    if (const auto* circle = std::get_if<Circle>(&b.shape))
    {
      in = lx * lx + ly * ly <= circle->radius * circle->radius;
    }
    else if (const auto* bx = std::get_if<Box>(&b.shape))
    {
      in = std::abs(lx) <= bx->half_width && std::abs(ly) <= bx->half_height;
    }
    if (!in)
    {
      continue;
    }
    std::uint8_t k;
    int rank;
    if (b.role == Role::UserPlaced)
    {
      k = kUserPlaced, rank = 3;
    }
    else if (b.id == g.subject_id)
    {
      k = kDynamicGoalSubject, rank = 2;
    }
    else if (b.id == g.object_id)
    {
      k = b.dynamic ? kDynamicGoalObject : kStaticGoalObject, rank = 1;
    }
    else
    {
      k = b.dynamic ? kDynamicConfounding : kStaticConfounding, rank = 0;
    }
    if (rank >= best_rank)
    {
      best_rank = rank;
      cat = k;
    }
  }
  return cat;
}

} // namespace

TEST(ValidateAction, OpenSkyIsValid)
{
  EXPECT_EQ(validate_action(open_task(Tier::B), Action::single(0.5, 0.9, 0.1)), ActionStatus::Valid);
}

TEST(ValidateAction, CornerBallIsOutOfBounds)
{
  EXPECT_EQ(validate_action(open_task(Tier::B), Action::single(0.0, 0.0, 0.3)), ActionStatus::OutOfBounds);
  EXPECT_EQ(validate_action(open_task(Tier::B), Action::single(0.5, 0.5, 1.2)), ActionStatus::OutOfBounds);
}

TEST(ValidateAction, ZeroRadiusAndOverlap)
{
  const Task t = open_task(Tier::B);
  EXPECT_EQ(validate_action(t, Action::single(0.5, 0.5, 0.0)), ActionStatus::BadRadius);
  EXPECT_EQ(validate_action(t, Action::single(40 / 256.0, 30 / 256.0, 0.1)), ActionStatus::Overlap);
}

TEST(ValidateAction, IdenticalPairSelfOverlaps)
{
  EXPECT_EQ(validate_action(open_task(Tier::TwoB), Action::pair(0.5, 0.7, 0.1, 0.5, 0.7, 0.1)),
            ActionStatus::SelfOverlap);
  EXPECT_EQ(validate_action(open_task(Tier::TwoB), Action::pair(0.3, 0.7, 0.1, 0.7, 0.7, 0.1)),
            ActionStatus::Valid);
}

TEST(ValidateAction, TierMismatchThrows)
{
  try
  {
    validate_action(open_task(Tier::TwoB), Action::single(0.5, 0.5, 0.1));
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::TierMismatch);
  }
}

TEST(Attempt, InertCornerBallFails)
{
  Task t = open_task(Tier::B);
  const AttemptResult r = attempt(t, Action::single(0.97, 0.97, 0.02));
  EXPECT_FALSE(r.reward);
  EXPECT_NEAR(r.end_time, t.time_limit, 1e-9);
  EXPECT_EQ(r.frames.size(), r.observations.size());
}

TEST(Attempt, InvalidActionThrows)
{
  try
  {
    attempt(open_task(Tier::B), Action::single(0.0, 0.0, 0.3));
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::InvalidAction);
  }
}

TEST(Attempt, SolvingAttemptEndsWithSubjectTouchingObject)
{
  // Subject already resting on the object; the placed ball falls far away.
  Task t = open_task(Tier::B);
  t.world.bodies[0] = body_from_vocabulary(BodyKind::Ball, 0.2, {200, 29.4}, 0, true, Role::GoalSubject, 0);
  const AttemptResult r = attempt(t, Action::single(0.1, 0.9, 0.05));
  ASSERT_TRUE(r.reward);
  EXPECT_TRUE(goal_contact(r.frames.back(), t.goal));
}

TEST(Attempt, DeterministicAndPure)
{
  const Task t = open_task(Tier::B);
  const Action a = Action::single(0.2, 0.6, 0.15);
  const AttemptResult x = attempt(t, a);
  const AttemptResult y = attempt(t, a);
  EXPECT_EQ(x.reward, y.reward);
  EXPECT_EQ(x.end_time, y.end_time);
  EXPECT_EQ(x.frames, y.frames);
  EXPECT_EQ(x.observations, y.observations);
  EXPECT_EQ(t, open_task(Tier::B));
}

TEST(Attempt, PlacedBallsAreUserPlacedWithFreshIds)
{
  const Task t = open_task(Tier::TwoB);
  const auto balls = placed_balls(t.world, Action::pair(0.3, 0.7, 0.1, 0.7, 0.7, 0.1));
  ASSERT_EQ(balls.size(), 2u);
  for (const Body& b : balls)
  {
    EXPECT_EQ(b.role, Role::UserPlaced);
    EXPECT_TRUE(b.dynamic);
    EXPECT_GT(b.id, 1);
  }
  EXPECT_NE(balls[0].id, balls[1].id);
}

TEST(Rasterize, EmptyWorldIsBackground)
{
  const ObservationImage o = rasterize(WorldState{}, Goal{});
  for (auto c : o.cells)
  {
    ASSERT_EQ(c, kBackground);
  }
}

TEST(Rasterize, BallAreaMatchesPointInCircleCount)
{
  WorldState w;
  w.bodies = {body_from_vocabulary(BodyKind::Ball, 10.0 / 32.0, {128, 128}, 0, true, Role::GoalSubject, 0)};
  const ObservationImage o = rasterize(w, Goal{0, Relation::Touching, 1, 3.0});
  int count = 0;
  for (auto c : o.cells)
  {
    count += c == kDynamicGoalSubject ? 1 : 0;
  }
  EXPECT_NEAR(count, std::numbers::pi * 100, 2 * std::numbers::pi * 10);
  EXPECT_EQ(o.at(0, 0), kBackground);
}

TEST(Rasterize, MatchesOracleOnRandomScenes)
{
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int scene = 0; scene < 15; ++scene)
  {
    WorldState w;
    for (int id = 0; id < 6; ++id)
    {
      const Role role = id == 0 ? Role::GoalSubject : id == 1 ? Role::GoalObject : id == 5 ? Role::UserPlaced
                                                                                         : Role::Confounding;
      Body b = u(gen) < 0.5 ? make_body(Circle{3 + 25 * u(gen)}, {40 + 176 * u(gen), 40 + 176 * u(gen)}, 0,
                                        u(gen) < 0.5, role, id)
                            : make_body(Box{4 + 30 * u(gen), 3 + 8 * u(gen)}, {40 + 176 * u(gen), 40 + 176 * u(gen)},
                                        3.2 * u(gen), u(gen) < 0.5, role, id);
      w.bodies.push_back(b);
    }
    const Goal g{0, Relation::Touching, 1, 3.0};
    const ObservationImage o = rasterize(w, g);
    int mismatches = 0;
    for (int j = 0; j < kObservationSize; ++j)
    {
      for (int i = 0; i < kObservationSize; ++i)
      {
        mismatches += o.at(i, j) != oracle_cell(w, g, i, j) ? 1 : 0;
      }
    }
    EXPECT_EQ(mismatches, 0) << "scene " << scene;
  }
}

TEST(OneHot, ChannelsSumToOneAndRoundTrip)
{
  WorldState w;
  w.bodies = {body_from_vocabulary(BodyKind::Ball, 0.3, {100, 100}, 0, true, Role::GoalSubject, 0),
              body_from_vocabulary(BodyKind::Bar, 0.4, {128, 30}, 0.2, false, Role::GoalObject, 1)};
  const ObservationImage o = rasterize(w, Goal{0, Relation::Touching, 1, 3.0});
  const std::vector<float> planes = encode_onehot(o);
  ASSERT_EQ(planes.size(), static_cast<std::size_t>(kCategoryCount) * 256 * 256);
  for (int cell = 0; cell < 256 * 256; cell += 97)
  {
    float sum = 0;
    for (int c = 0; c < kCategoryCount; ++c)
    {
      sum += planes[c * 256 * 256 + cell];
    }
    EXPECT_EQ(sum, 1.0f);
  }
  EXPECT_EQ(decode_onehot(planes), o);
}

TEST(OneHot, BackgroundImageIsChannelSeven)
{
  const std::vector<float> planes = encode_onehot(ObservationImage{});
  for (int c = 0; c < kCategoryCount; ++c)
  {
    const float expected = c == kBackground - 1 ? 1.0f : 0.0f;
    for (int cell = 0; cell < 256 * 256; cell += 101)
    {
      ASSERT_EQ(planes[c * 256 * 256 + cell], expected);
    }
  }
}

TEST(Export, PngAndRawAreWritten)
{
  const auto dir = std::filesystem::temp_directory_path() / "phyre_env_export";
  std::filesystem::create_directories(dir);
  WorldState w;
  w.bodies = {body_from_vocabulary(BodyKind::Ball, 0.3, {100, 100}, 0, true, Role::GoalSubject, 0)};
  const ObservationImage o = rasterize(w, Goal{0, Relation::Touching, 1, 3.0});
  write_observation_png(o, dir / "o.png");
  write_observation_raw(o, dir / "o.raw");
  std::ifstream png(dir / "o.png", std::ios::binary);
  char sig[8];
  png.read(sig, 8);
  EXPECT_EQ(std::string(sig + 1, 3), "PNG");
  EXPECT_EQ(std::filesystem::file_size(dir / "o.raw"), 256u * 256u);
}
