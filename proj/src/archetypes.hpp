#pragma once

#include <array>
#include <string>
#include <vector>

#include "phyre/rng.hpp"
#include "phyre/task.hpp"

namespace phyre::detail {

/// Region in unit action coordinates where a ball of a likely solution is placed.
struct BallHint
{
  ParamRange x;
  ParamRange y;
  ParamRange r;
};

struct Candidate
{
  WorldState world;
  Goal goal;
  std::vector<BallHint> hints; ///< one per ball of the tier
};

using Generator = Candidate (*)(const TaskTemplate&, KeyedRng&);

/// nullptr for an unknown archetype.
Generator find_generator(const std::string& archetype);
std::vector<std::string> generator_names();

} // namespace phyre::detail
