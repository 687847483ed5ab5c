#pragma once

// Leverage correlation function of returns,
//
//   g_L(l) = < r_i r_{i+l}^2 >_c / sigma^3,
//
// estimated with full demeaning, a per-lag 1/(N-l) average and one
// whole-sample sigma, plus circular moving-block bootstrap error bars.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "implev/detail/random.hpp"
#include "implev/error.hpp"
#include "implev/market_data.hpp"

namespace implev {

struct LeverageFunction {
  std::vector<int> lags;
  std::vector<double> values;
  std::optional<std::vector<double>> std_errors;
  double sigma = 0.0;
  std::size_t n_obs = 0;

  int max_lag() const { return lags.empty() ? -1 : lags.back(); }

  /// Checks the structural invariants; throws invalid-input.
  void validate() const {
    if (lags.empty() || values.size() != lags.size())
      throw Error(ErrorCode::invalid_input, "leverage function: lags and values differ in length");
    for (std::size_t i = 0; i < lags.size(); ++i) {
      if (lags[i] != static_cast<int>(i))
        throw Error(ErrorCode::invalid_input, "leverage function: lags must run 0..max_lag");
      if (!std::isfinite(values[i]))
        throw Error(ErrorCode::invalid_input, "leverage function: non-finite value");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw Error(ErrorCode::invalid_input, "leverage function: sigma must be positive");
    if (std_errors) {
      if (std_errors->size() != values.size())
        throw Error(ErrorCode::invalid_input, "leverage function: std_errors length mismatch");
      for (double s : *std_errors)
        if (!(s >= 0.0) || !std::isfinite(s))
          throw Error(ErrorCode::invalid_input, "leverage function: std_errors must be >= 0");
    }
  }
};

inline constexpr std::size_t kMinLagOverlap = 30;

namespace detail {

inline double sample_sigma(std::span<const double> r) {
  const std::size_t n = r.size();
  if (n < 2) throw Error(ErrorCode::series_too_short, "sigma needs at least 2 returns");
  double mean = 0.0;
  for (double x : r) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : r) ss += (x - mean) * (x - mean);
  const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sigma > 0.0)) throw Error(ErrorCode::zero_variance, "returns have zero variance");
  return sigma;
}

/// Evaluates g_L(0..max_lag) into `out` using `scratch` (resized as needed).
/// No length precondition; callers enforce the minimum overlap.
inline double leverage_values(std::span<const double> r, int max_lag, std::span<double> out,
                              std::vector<double>& scratch) {
  const std::size_t n = r.size();
  const double sigma = sample_sigma(r);
  double mean = 0.0;
  for (double x : r) mean += x;
  mean /= static_cast<double>(n);

  scratch.resize(2 * n);
  double* d = scratch.data();
  double* q = scratch.data() + n;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = r[i] - mean;
    m2 += d[i] * d[i];
  }
  m2 /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = d[i] * d[i] - m2;

  // Tiled over i so d and q stay in cache across lags. Within a tile, lags
  // go in groups of eight sharing each load of d[i]; the last group may run
  // past max_lag into padding that is discarded.
  constexpr std::size_t kTile = 2048;
  constexpr std::size_t kGroup = 8;
  const auto width = static_cast<std::size_t>(max_lag) + 1;
  std::vector<double> acc((width + kGroup - 1) / kGroup * kGroup, 0.0);
  for (std::size_t i0 = 0; i0 < n; i0 += kTile) {
    for (std::size_t lag = 0; lag < width; lag += kGroup) {
      const double* qs = q + lag;
      std::size_t i = i0;
      if (lag + kGroup <= n) {
        // Range valid for every lag of the group.
        const std::size_t common = std::min(i0 + kTile, n - (lag + kGroup - 1));
        double s[kGroup] = {};
        for (; i < common; ++i)
          for (std::size_t k = 0; k < kGroup; ++k) s[k] += d[i] * qs[i + k];
        for (std::size_t k = 0; k < kGroup; ++k) acc[lag + k] += s[k];
      }
      for (std::size_t k = 0; k < kGroup && lag + k < width; ++k) {
        const std::size_t end = std::min(i0 + kTile, n - (lag + k));
        for (std::size_t j = std::max(i, i0); j < end; ++j) acc[lag + k] += d[j] * qs[j + k];
      }
    }
  }
  const double norm = sigma * sigma * sigma;
  for (std::size_t lag = 0; lag < width; ++lag) {
    out[lag] = acc[lag] / static_cast<double>(n - lag) / norm;
  }
  return sigma;
}

inline void check_leverage_args(std::size_t n, int max_lag) {
  if (max_lag < 1) throw Error(ErrorCode::invalid_parameter, "max_lag must be >= 1");
  if (n < static_cast<std::size_t>(max_lag) + kMinLagOverlap)
    throw Error(ErrorCode::series_too_short,
                "series of length " + std::to_string(n) + " is shorter than max_lag + " +
                    std::to_string(kMinLagOverlap));
}

}  // namespace detail

/// Sample standard deviation, mean removed, denominator N-1.
inline double estimate_sigma(const ReturnSeries& returns) {
  return detail::sample_sigma(returns.values());
}

inline LeverageFunction estimate_leverage(std::span<const double> returns, int max_lag) {
  detail::check_leverage_args(returns.size(), max_lag);
  LeverageFunction gl;
  gl.lags.resize(static_cast<std::size_t>(max_lag) + 1);
  for (int l = 0; l <= max_lag; ++l) gl.lags[static_cast<std::size_t>(l)] = l;
  gl.values.resize(gl.lags.size());
  std::vector<double> scratch;
  gl.sigma = detail::leverage_values(returns, max_lag, gl.values, scratch);
  gl.n_obs = returns.size();
  return gl;
}

inline LeverageFunction estimate_leverage(const ReturnSeries& returns, int max_lag) {
  return estimate_leverage(std::span<const double>(returns.values()), max_lag);
}

/// Block length used when none is given: twice the maximum lag.
inline int default_block_len(int max_lag) { return 2 * max_lag; }

inline constexpr int kDefaultBootstrapReplicates = 500;

/// Circular moving-block bootstrap of g_L. Point values come from the
/// original series; std_errors are the per-lag standard deviation across
/// replicates. Replicate b draws from its own stream seeded by (seed, b), so
/// the result does not depend on `threads`.
inline LeverageFunction bootstrap_errors(const ReturnSeries& returns, int max_lag, int n_boot,
                                         int block_len, std::uint64_t seed, unsigned threads = 0) {
  if (n_boot < 100) throw Error(ErrorCode::invalid_parameter, "n_boot must be >= 100");
  if (block_len < 1) throw Error(ErrorCode::invalid_parameter, "block_len must be >= 1");
  LeverageFunction gl = estimate_leverage(returns, max_lag);

  const std::span<const double> r(returns.values());
  const std::size_t n = r.size();
  const std::size_t width = gl.values.size();
  const std::size_t block = static_cast<std::size_t>(block_len);
  std::vector<double> reps(static_cast<std::size_t>(n_boot) * width);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_boot));
  std::vector<std::exception_ptr> failures(threads);

  auto worker = [&](unsigned w) {
    try {
      std::vector<double> sample(n);
      std::vector<double> scratch;
      for (std::size_t b = w; b < static_cast<std::size_t>(n_boot); b += threads) {
        std::mt19937_64 rng(detail::stream_seed(seed, b));
        std::uniform_int_distribution<std::size_t> start(0, n - 1);
        std::size_t filled = 0;
        while (filled < n) {
          std::size_t s = start(rng);
          const std::size_t take = std::min(block, n - filled);
          for (std::size_t j = 0; j < take; ++j) {
            sample[filled++] = r[s];
            if (++s == n) s = 0;
          }
        }
        detail::leverage_values(sample, max_lag, std::span<double>(reps.data() + b * width, width),
                                scratch);
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  std::vector<double> se(width, 0.0);
  for (std::size_t l = 0; l < width; ++l) {
    double mean = 0.0;
    for (int b = 0; b < n_boot; ++b) mean += reps[static_cast<std::size_t>(b) * width + l];
    mean /= n_boot;
    double ss = 0.0;
    for (int b = 0; b < n_boot; ++b) {
      const double dev = reps[static_cast<std::size_t>(b) * width + l] - mean;
      ss += dev * dev;
    }
    se[l] = std::sqrt(ss / (n_boot - 1));
  }
  gl.std_errors = std::move(se);
  return gl;
}

}  // namespace implev
