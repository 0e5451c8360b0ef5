#include "phyre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include <png.h>

#include "phyre/error.hpp"

namespace phyre {

std::string_view to_string(ActionStatus status)
{
  switch (status)
  {
  case ActionStatus::Valid: return "Valid";
  case ActionStatus::OutOfBounds: return "OutOfBounds";
  case ActionStatus::BadRadius: return "BadRadius";
  case ActionStatus::Overlap: return "Overlap";
  case ActionStatus::SelfOverlap: return "SelfOverlap";
  }
  return "Unknown";
}

namespace {

bool coords_in_unit_cube(const Action& action)
{
  for (int i = 0; i < action.dims(); ++i)
  {
    const double c = action.coords[i];
    if (!(c >= 0.0 && c <= 1.0))
    {
      return false;
    }
  }
  return true;
}

Body ball_for(const Action& action, int ball, int id)
{
  const double x = action.coords[3 * ball] * kWorldSize;
  const double y = action.coords[3 * ball + 1] * kWorldSize;
  const double r = action.coords[3 * ball + 2] * kMaxBallRadius;
  return make_body(Circle{r}, {x, y}, 0.0, true, Role::UserPlaced, id);
}

int next_id(const WorldState& world)
{
  int id = 0;
  for (const Body& b : world.bodies)
  {
    id = std::max(id, b.id + 1);
  }
  return id;
}

} // namespace

std::vector<Body> placed_balls(const WorldState& world, const Action& action)
{
  const int first = next_id(world);
  std::vector<Body> balls;
  for (int k = 0; k < action.balls(); ++k)
  {
    balls.push_back(ball_for(action, k, first + k));
  }
  return balls;
}

ActionStatus validate_action(const Task& task, const Action& action)
{
  if (action.tier != task.tier)
  {
    throw Error(ErrorCode::TierMismatch, "task " + task.id + " is tier " +
                                           std::string(to_string(task.tier)) + ", action is tier " +
                                           std::string(to_string(action.tier)));
  }
  if (!coords_in_unit_cube(action))
  {
    return ActionStatus::OutOfBounds;
  }
  for (int k = 0; k < action.balls(); ++k)
  {
    if (!(action.coords[3 * k + 2] > 0.0))
    {
      return ActionStatus::BadRadius;
    }
  }
  const int first = next_id(task.world);
  Body balls[2];
  for (int k = 0; k < action.balls(); ++k)
  {
    balls[k] = ball_for(action, k, first + k);
    if (!inside_bounds(balls[k], task.world.width, task.world.height))
    {
      return ActionStatus::OutOfBounds;
    }
  }
  for (int k = 0; k < action.balls(); ++k)
  {
    for (const Body& b : task.world.bodies)
    {
      if (overlap(balls[k], b))
      {
        return ActionStatus::Overlap;
      }
    }
  }
  if (action.balls() == 2 && overlap(balls[0], balls[1]))
  {
    return ActionStatus::SelfOverlap;
  }
  return ActionStatus::Valid;
}

WorldState world_with_action(const Task& task, const Action& action)
{
  WorldState w = task.world;
  for (Body& b : placed_balls(task.world, action))
  {
    w.bodies.push_back(std::move(b));
  }
  return w;
}

Category category_of(const Body& body, const Goal& goal)
{
  if (body.role == Role::UserPlaced)
  {
    return kUserPlaced;
  }
  if (body.id == goal.subject_id)
  {
    return kDynamicGoalSubject;
  }
  if (body.id == goal.object_id)
  {
    return body.dynamic ? kDynamicGoalObject : kStaticGoalObject;
  }
  return body.dynamic ? kDynamicConfounding : kStaticConfounding;
}

namespace {

int precedence(Category c)
{
  switch (c)
  {
  case kUserPlaced: return 3;
  case kDynamicGoalSubject: return 2;
  case kDynamicGoalObject:
  case kStaticGoalObject: return 1;
  default: return 0;
  }
}

} // namespace

ObservationImage rasterize(const WorldState& world, const Goal& goal)
{
  ObservationImage obs;
  std::vector<std::pair<int, std::size_t>> order;
  for (std::size_t i = 0; i < world.bodies.size(); ++i)
  {
    order.emplace_back(precedence(category_of(world.bodies[i], goal)), i);
  }
  // Paint low precedence first so higher categories overwrite shared cells.
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const double scale_x = kObservationSize / world.width;
  const double scale_y = kObservationSize / world.height;
  for (const auto& [rank, index] : order)
  {
    const Body& body = world.bodies[index];
    const auto cat = category_of(body, goal);
    const Aabb box = bounding_box(body);
    const int i0 = std::max(0, static_cast<int>(std::floor(box.lo.x * scale_x - 0.5)));
    const int i1 = std::min(kObservationSize - 1, static_cast<int>(std::ceil(box.hi.x * scale_x)));
    const int j0 = std::max(0, static_cast<int>(std::floor(box.lo.y * scale_y - 0.5)));
    const int j1 = std::min(kObservationSize - 1, static_cast<int>(std::ceil(box.hi.y * scale_y)));
    const PrimitiveList prims = primitives(body);
    for (int j = j0; j <= j1; ++j)
    {
      for (int i = i0; i <= i1; ++i)
      {
        const Vec2 p{(i + 0.5) / scale_x, (j + 0.5) / scale_y};
        for (const Primitive& prim : prims)
        {
          if (contains_point(prim, p))
          {
            obs.at(i, j) = cat;
            break;
          }
        }
      }
    }
  }
  return obs;
}

std::vector<float> encode_onehot(const ObservationImage& obs)
{
  constexpr std::size_t plane = kObservationSize * kObservationSize;
  std::vector<float> out(kCategoryCount * plane, 0.0f);
  for (std::size_t k = 0; k < plane; ++k)
  {
    out[(obs.cells[k] - 1) * plane + k] = 1.0f;
  }
  return out;
}

ObservationImage decode_onehot(const std::vector<float>& planes)
{
  constexpr std::size_t plane = kObservationSize * kObservationSize;
  if (planes.size() != kCategoryCount * plane)
  {
    throw Error(ErrorCode::ShapeMismatch, "one-hot input must have 7 planes of 256x256");
  }
  ObservationImage obs;
  for (std::size_t k = 0; k < plane; ++k)
  {
    int found = -1;
    for (int c = 0; c < kCategoryCount; ++c)
    {
      if (planes[c * plane + k] == 1.0f)
      {
        if (found >= 0)
        {
          throw Error(ErrorCode::ShapeMismatch, "cell with more than one category");
        }
        found = c;
      }
    }
    if (found < 0)
    {
      throw Error(ErrorCode::ShapeMismatch, "cell without a category");
    }
    obs.cells[k] = static_cast<std::uint8_t>(found + 1);
  }
  return obs;
}

void write_observation_png(const ObservationImage& obs, const std::filesystem::path& file)
{
  static const png_color kPalette[8] = {{255, 255, 255}, {33, 150, 243}, {142, 68, 173},
                                        {76, 175, 80},   {0, 0, 0},      {160, 160, 160},
                                        {229, 57, 53},   {255, 255, 255}};
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(file.string().c_str(), "wb"), &std::fclose);
  if (!fp)
  {
    throw Error(ErrorCode::ConfigInvalid, "cannot write " + file.string());
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png)))
  {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::ConfigInvalid, "libpng failed writing " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, kObservationSize, kObservationSize, 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_PLTE(png, info, kPalette, 8);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(kObservationSize);
  for (int j = kObservationSize - 1; j >= 0; --j)
  {
    for (int i = 0; i < kObservationSize; ++i)
    {
      row[i] = obs.at(i, j);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_observation_raw(const ObservationImage& obs, const std::filesystem::path& file)
{
  std::ofstream out(file, std::ios::binary);
  if (!out)
  {
    throw Error(ErrorCode::ConfigInvalid, "cannot write " + file.string());
  }
  out.write(reinterpret_cast<const char*>(obs.cells.data()),
            static_cast<std::streamsize>(obs.cells.size()));
}

AttemptResult attempt(const Task& task, const Action& action, const AttemptOptions& options)
{
  const ActionStatus status = validate_action(task, action);
  if (status != ActionStatus::Valid)
  {
    throw Error(ErrorCode::InvalidAction,
                "action is invalid for task " + task.id + ": " + std::string(to_string(status)));
  }
  const WorldState world = world_with_action(task, action);
  SimulationResult sim =
    simulate(world, task.goal, task.time_limit, options.keep_frames ? options.frame_stride : 0);
  AttemptResult result;
  result.reward = sim.solved;
  result.end_time = sim.end_time;
  if (options.keep_frames)
  {
    if (options.rasterize)
    {
      result.observations.reserve(sim.frames.size());
      for (const WorldState& frame : sim.frames)
      {
        result.observations.push_back(rasterize(frame, task.goal));
      }
    }
    result.frames = std::move(sim.frames);
  }
  return result;
}

bool solves(const Task& task, const Action& action)
{
  AttemptOptions options;
  options.keep_frames = false;
  return attempt(task, action, options).reward;
}

bool solved_without_action(const Task& task)
{
  return simulate(task.world, task.goal, task.time_limit, 0).solved;
}

} // namespace phyre
