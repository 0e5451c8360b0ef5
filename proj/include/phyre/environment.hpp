#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "phyre/task.hpp"

namespace phyre {

enum class ActionStatus
{
  Valid,
  OutOfBounds, ///< a ball leaves the world, or a coordinate is outside [0, 1]
  BadRadius,   ///< r = 0
  Overlap,     ///< a ball intersects an existing body
  SelfOverlap, ///< the two balls of a 2B action intersect
};

std::string_view to_string(ActionStatus status);

/// Balls the action places, with ids after the largest id in the world.
std::vector<Body> placed_balls(const WorldState& world, const Action& action);

/// Throws Error{TierMismatch} when the action's tier differs from the task's.
ActionStatus validate_action(const Task& task, const Action& action);

/// The task's world with the action's balls added.
WorldState world_with_action(const Task& task, const Action& action);

inline constexpr int kObservationSize = 256;
inline constexpr int kCategoryCount = 7;
inline constexpr int kDefaultFrameStride = 15;

enum Category : std::uint8_t
{
  kDynamicGoalObject = 1,
  kStaticGoalObject = 2,
  kDynamicGoalSubject = 3,
  kStaticConfounding = 4,
  kDynamicConfounding = 5,
  kUserPlaced = 6,
  kBackground = 7,
};

/// 256x256 category grid. Cell (i, j) covers x in [i, i+1), y in [j, j+1); row 0 is the
/// bottom of the world.
struct ObservationImage
{
  std::vector<std::uint8_t> cells = std::vector<std::uint8_t>(kObservationSize * kObservationSize,
                                                              kBackground);

  std::uint8_t at(int i, int j) const { return cells[j * kObservationSize + i]; }
  std::uint8_t& at(int i, int j) { return cells[j * kObservationSize + i]; }
  bool operator==(const ObservationImage&) const = default;
};

Category category_of(const Body& body, const Goal& goal);

ObservationImage rasterize(const WorldState& world, const Goal& goal);

/// Channel-major one-hot planes: value[c * 256 * 256 + j * 256 + i] for category c + 1.
std::vector<float> encode_onehot(const ObservationImage& obs);
ObservationImage decode_onehot(const std::vector<float>& planes);

/// Indexed PNG using the player's colour scheme (top row = top of the world).
void write_observation_png(const ObservationImage& obs, const std::filesystem::path& file);
/// Raw category bytes, row 0 first.
void write_observation_raw(const ObservationImage& obs, const std::filesystem::path& file);

struct AttemptOptions
{
  int frame_stride = kDefaultFrameStride;
  bool keep_frames = true;
  bool rasterize = true;
};

struct AttemptResult
{
  bool reward = false;
  double end_time = 0.0;
  std::vector<WorldState> frames;
  std::vector<ObservationImage> observations;
};

/// Places the action's balls and runs the task. Throws Error{InvalidAction} for an
/// invalid action.
AttemptResult attempt(const Task& task, const Action& action, const AttemptOptions& options = {});

/// Reward only; no frames are kept. Invalid actions throw like attempt().
bool solves(const Task& task, const Action& action);

/// Simulates the task without any action.
bool solved_without_action(const Task& task);

} // namespace phyre
