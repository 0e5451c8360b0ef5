#include "phyre/error.hpp"

namespace phyre {

std::string_view to_string(ErrorCode code)
{
  switch (code)
  {
  case ErrorCode::OutOfBounds: return "OutOfBounds";
  case ErrorCode::BadScale: return "BadScale";
  case ErrorCode::BadShape: return "BadShape";
  case ErrorCode::BadGoal: return "BadGoal";
  case ErrorCode::NumericalDivergence: return "NumericalDivergence";
  case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
  case ErrorCode::InvalidInstance: return "InvalidInstance";
  case ErrorCode::BudgetExhausted: return "BudgetExhausted";
  case ErrorCode::TierMismatch: return "TierMismatch";
  case ErrorCode::InvalidAction: return "InvalidAction";
  case ErrorCode::NoValidActions: return "NoValidActions";
  case ErrorCode::TooFewTasks: return "TooFewTasks";
  case ErrorCode::TooFewTemplates: return "TooFewTemplates";
  case ErrorCode::UnknownTemplate: return "UnknownTemplate";
  case ErrorCode::ShapeMismatch: return "ShapeMismatch";
  case ErrorCode::NoPositives: return "NoPositives";
  case ErrorCode::MissingTasks: return "MissingTasks";
  case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

} // namespace phyre
