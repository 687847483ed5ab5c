#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "implev/error.hpp"

namespace implev::detail {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // heteroskedasticity-robust (HC0)
  std::size_t n_obs = 0;
};

/// y = intercept + slope * x + e, with the White sandwich variance of the
/// slope: sum((x - xbar)^2 e^2) / Sxx^2.
inline OlsFit ols_with_intercept(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error(ErrorCode::invalid_input, "regressor and response lengths differ");
  if (n < 3) throw Error(ErrorCode::insufficient_observations, "need at least 3 observations");

  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xbar;
    sxx += dx * dx;
    sxy += dx * (y[i] - ybar);
  }
  if (sxx / static_cast<double>(n) < 1e-16)
    throw Error(ErrorCode::degenerate_regressor, "regressor variance below 1e-16");

  OlsFit fit;
  fit.n_obs = n;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;

  double meat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xbar;
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    meat += dx * dx * e * e;
  }
  fit.slope_se = std::sqrt(meat) / sxx;
  return fit;
}

}  // namespace implev::detail
