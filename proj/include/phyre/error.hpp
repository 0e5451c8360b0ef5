#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phyre {

enum class ErrorCode
{
  OutOfBounds,
  BadScale,
  BadShape,
  BadGoal,
  NumericalDivergence,
  IndexOutOfRange,
  InvalidInstance,
  BudgetExhausted,
  TierMismatch,
  InvalidAction,
  NoValidActions,
  TooFewTasks,
  TooFewTemplates,
  UnknownTemplate,
  ShapeMismatch,
  NoPositives,
  MissingTasks,
  ConfigInvalid,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace phyre
