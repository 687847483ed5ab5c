#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace implev {

enum class ErrorCode {
  io_error,
  parse_error,
  duplicate_date,
  non_positive_price,
  series_too_short,
  non_positive_vol,
  inconsistent_maturity_set,
  empty_intersection,
  zero_variance,
  invalid_parameter,
  maturity_exceeds_max_lag,
  invalid_input,
  grid_does_not_bracket_zero,
  maturity_mismatch,
  wrong_kind,
  insufficient_observations,
  degenerate_regressor,
  empty_group,
  mixed_maturity_group,
  unstable_kernel,
  excessive_clamping,
};

/// Machine-readable name, as printed in CLI diagnostics.
inline constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::duplicate_date: return "duplicate-date";
    case ErrorCode::non_positive_price: return "non-positive-price";
    case ErrorCode::series_too_short: return "series-too-short";
    case ErrorCode::non_positive_vol: return "non-positive-vol";
    case ErrorCode::inconsistent_maturity_set: return "inconsistent-maturity-set";
    case ErrorCode::empty_intersection: return "empty-intersection";
    case ErrorCode::zero_variance: return "zero-variance";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::maturity_exceeds_max_lag: return "maturity-exceeds-max-lag";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::grid_does_not_bracket_zero: return "grid-does-not-bracket-zero";
    case ErrorCode::maturity_mismatch: return "maturity-mismatch";
    case ErrorCode::wrong_kind: return "wrong-kind";
    case ErrorCode::insufficient_observations: return "insufficient-observations";
    case ErrorCode::degenerate_regressor: return "degenerate-regressor";
    case ErrorCode::empty_group: return "empty-group";
    case ErrorCode::mixed_maturity_group: return "mixed-maturity-group";
    case ErrorCode::unstable_kernel: return "unstable-kernel";
    case ErrorCode::excessive_clamping: return "excessive-clamping";
  }
  return "unknown";
}

/// Every library failure is reported through this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace implev
