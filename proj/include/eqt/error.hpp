#pragma once

#include <stdexcept>
#include <string>

namespace eqt {

enum class ErrorCode {
  precondition,
  config_invalid,
  reduction_hypothesis_violated,
  degenerate_symmetry,
  rank_deficient,
  numeric_failure,
};

const char *to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the CLI maps codes to exit
/// statuses.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string &what);

inline void require(bool cond, const std::string &what) {
  if (!cond) {
    fail(ErrorCode::precondition, what);
  }
}

} // namespace eqt
