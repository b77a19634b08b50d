#pragma once

#include <stdexcept>
#include <string>

namespace gd {

enum class ErrorCode {
  invalid_argument,
  config_invalid,
  geometry,            // NonMonotoneBoundary, DisconnectedCurve, OutsideDomain, ...
  dimension_mismatch,
  no_convergence,
  nan_encountered,
  missing_data,
  check_failed,
  io,
};

class GdError : public std::runtime_error {
 public:
  GdError(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw GdError(code, msg);
}

}  // namespace gd
