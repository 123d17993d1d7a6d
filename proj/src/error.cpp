#include "eqt/error.hpp"

namespace eqt {

const char *to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::precondition:
    return "PRECONDITION";
  case ErrorCode::config_invalid:
    return "CONFIG_INVALID";
  case ErrorCode::reduction_hypothesis_violated:
    return "REDUCTION_HYPOTHESIS_VIOLATED";
  case ErrorCode::degenerate_symmetry:
    return "DEGENERATE_SYMMETRY";
  case ErrorCode::rank_deficient:
    return "RANK_DEFICIENT";
  case ErrorCode::numeric_failure:
    return "NUMERIC_FAILURE";
  }
  return "UNKNOWN";
}

void fail(ErrorCode code, const std::string &what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

} // namespace eqt
