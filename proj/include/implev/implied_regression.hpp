#pragma once

// Empirical implied-leverage coefficient: per maturity, OLS of the relative
// daily change of ATM implied vol on the underlying return, then an
// equal-weight average across the tickers of a capitalisation tranche.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "implev/detail/ols.hpp"
#include "implev/error.hpp"
#include "implev/market_data.hpp"
#include "implev/smile_theory.hpp"

namespace implev {

struct RegressionResult {
  std::string ticker;
  int maturity = 0;
  double slope = 0.0;  // gamma hat
  double intercept = 0.0;
  double std_err = 0.0;  // HC0 robust SE of the slope
  std::size_t n_obs = 0;
};

inline constexpr std::size_t kMinRegressionPairs = 31;

namespace detail {

/// Linear-interpolation sample quantile (type 7) of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline void winsorize(std::vector<double>& y, double q) {
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted_quantile(sorted, q);
  const double hi = sorted_quantile(sorted, 1.0 - q);
  for (double& v : y) v = std::clamp(v, lo, hi);
}

}  // namespace detail

/// Regresses y_t = (Sigma_t - Sigma_{t-1}) / Sigma_{t-1} on x_t = r_t, with
/// intercept, over adjacent rows of the aligned panel where both vols exist.
/// `clip_quantile` in (0, 0.5) winsorizes y at that quantile and its mirror;
/// 0 disables clipping.
inline RegressionResult implied_gamma(const AlignedPanel& panel, int maturity, double clip_quantile = 0.0) {
  if (!(clip_quantile >= 0.0 && clip_quantile < 0.5))
    throw Error(ErrorCode::invalid_parameter, "clip quantile must lie in [0, 0.5)");
  const auto it = std::find(panel.maturities.begin(), panel.maturities.end(), maturity);
  if (it == panel.maturities.end())
    throw Error(ErrorCode::maturity_mismatch,
                "maturity " + std::to_string(maturity) + " not in panel " + panel.ticker);
  const auto col = static_cast<std::size_t>(it - panel.maturities.begin());

  std::vector<double> x, y;
  for (std::size_t t = 1; t < panel.dates.size(); ++t) {
    const double prev = panel.vol(t - 1, col);
    const double cur = panel.vol(t, col);
    if (std::isnan(prev) || std::isnan(cur)) continue;
    x.push_back(panel.returns[t]);
    y.push_back((cur - prev) / prev);
  }
  if (x.size() < kMinRegressionPairs)
    throw Error(ErrorCode::insufficient_observations,
                panel.ticker + " maturity " + std::to_string(maturity) + ": " + std::to_string(x.size()) +
                    " adjacent pairs, need " + std::to_string(kMinRegressionPairs));
  if (clip_quantile > 0.0) detail::winsorize(y, clip_quantile);

  const auto fit = detail::ols_with_intercept(x, y);
  return {panel.ticker, maturity, fit.slope, fit.intercept, fit.slope_se, fit.n_obs};
}

/// Groups results by maturity, ascending; within a group, by ticker.
inline std::vector<std::vector<RegressionResult>> group_by_maturity(std::vector<RegressionResult> results) {
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return a.maturity != b.maturity ? a.maturity < b.maturity : a.ticker < b.ticker;
  });
  std::vector<std::vector<RegressionResult>> groups;
  for (auto& r : results) {
    if (groups.empty() || groups.back().front().maturity != r.maturity) groups.emplace_back();
    groups.back().push_back(std::move(r));
  }
  return groups;
}

/// Equal-weight mean slope per maturity group. std_err is the cross-sectional
/// standard deviation (population form) over sqrt(n); a single ticker gives 0.
inline GammaCurve tranche_average(const std::vector<std::vector<RegressionResult>>& groups) {
  GammaCurve c;
  c.kind = GammaKind::empirical;
  c.std_errors.emplace();
  for (const auto& group : groups) {
    if (group.empty()) throw Error(ErrorCode::empty_group, "empty maturity group");
    const int t = group.front().maturity;
    double mean = 0.0;
    for (const auto& r : group) {
      if (r.maturity != t)
        throw Error(ErrorCode::mixed_maturity_group, "group mixes maturities " + std::to_string(t) +
                                                         " and " + std::to_string(r.maturity));
      mean += r.slope;
    }
    const auto n = static_cast<double>(group.size());
    mean /= n;
    double ss = 0.0;
    for (const auto& r : group) ss += (r.slope - mean) * (r.slope - mean);
    c.maturities.push_back(t);
    c.gammas.push_back(mean);
    c.std_errors->push_back(std::sqrt(ss / n) / std::sqrt(n));
  }
  return c;
}

}  // namespace implev
