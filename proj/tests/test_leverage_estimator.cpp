#include "implev/leverage_estimator.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_support.hpp"

namespace implev {
namespace {

using testing::gaussian_returns;

ReturnSeries series(std::vector<double> r) {
  std::vector<std::string> d;
  for (std::size_t i = 0; i < r.size(); ++i) d.push_back(day_token(i + 1));
  return ReturnSeries("T", std::move(d), std::move(r));
}

TEST(SigmaTest, AlternatingSeries) {
  EXPECT_NEAR(estimate_sigma(series({0.01, -0.01, 0.01, -0.01})), 0.0115470054, 1e-10);
}

TEST(SigmaTest, ConstantSeriesIsZeroVariance) {
  try {
    estimate_sigma(series({0.01, 0.01, 0.01}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_variance);
  }
}

TEST(SigmaTest, LargeSampleMatchesGenerator) {
  const std::size_t n = 1u << 20;
  const auto r = gaussian_returns(n, 0.01, 2024);
  EXPECT_NEAR(estimate_sigma(r), 0.01, 3.0 * 0.01 / std::sqrt(2.0 * n));
}

// g_L(0) and g_L(1) of the 5-point hand series, from a direct evaluation of
// the defining sum in double precision (numpy, outside this code base).
TEST(LeverageTest, HandSeriesMatchesDefiningSum) {
  const std::vector<double> r{0.02, -0.01, 0.03, -0.02, 0.01};
  std::vector<double> out(2), scratch;
  detail::leverage_values(r, 1, out, scratch);
  EXPECT_NEAR(out[0], -0.1130466894762269, 1e-13);
  EXPECT_NEAR(out[1], 0.32388773730887216, 1e-13);

  // The public estimator needs 30 overlapping pairs per lag.
  try {
    estimate_leverage(series(r), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::series_too_short);
  }
}

TEST(LeverageTest, ShapeAndValidation) {
  const auto r = gaussian_returns(200, 0.01, 5);
  const auto gl = estimate_leverage(r, 10);
  EXPECT_EQ(gl.lags.size(), 11u);
  EXPECT_EQ(gl.values.size(), 11u);
  EXPECT_FALSE(gl.std_errors.has_value());
  EXPECT_EQ(gl.n_obs, 200u);
  EXPECT_DOUBLE_EQ(gl.sigma, estimate_sigma(r));
  EXPECT_THROW(estimate_leverage(r, 0), Error);
  EXPECT_THROW(estimate_leverage(r, 171), Error);
  EXPECT_NO_THROW(estimate_leverage(r, 170));
}

TEST(LeverageTest, LagZeroIsNormalizedThirdMoment) {
  const auto r = gaussian_returns(5000, 0.02, 8);
  const auto& v = r.values();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double m3 = 0.0;
  for (double x : v) m3 += std::pow(x - mean, 3);
  m3 /= static_cast<double>(v.size());
  const double s = estimate_sigma(r);
  const auto gl = estimate_leverage(r, 3);
  EXPECT_NEAR(gl.values[0], m3 / (s * s * s), 1e-12 * std::max(1.0, std::abs(gl.values[0])));
}

TEST(LeverageTest, ScaleEquivariantAndSignOdd) {
  const auto r = gaussian_returns(3000, 0.01, 9);
  const auto base = estimate_leverage(r, 20);
  std::vector<double> scaled, flipped;
  for (double x : r.values()) {
    scaled.push_back(3.7 * x);
    flipped.push_back(-x);
  }
  const auto gs = estimate_leverage(series(scaled), 20);
  const auto gf = estimate_leverage(series(flipped), 20);
  for (std::size_t l = 0; l < base.values.size(); ++l) {
    EXPECT_NEAR(gs.values[l], base.values[l], 1e-13) << "lag " << l;
    EXPECT_EQ(gf.values[l], -base.values[l]) << "lag " << l;
  }
}

TEST(LeverageTest, IidSeriesStaysInsideNullBand) {
  const std::size_t n = 1u << 18;
  const int max_lag = 20;
  const auto r = gaussian_returns(n, 0.01, 42);
  // Moment factor of the null band from a bootstrap of the same sample:
  // factor(l) = se_boot(l) * sqrt(N - l).
  const auto gl = bootstrap_errors(r, max_lag, 100, 1, 42);
  for (int l = 1; l <= max_lag; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const double factor = (*gl.std_errors)[li] * std::sqrt(static_cast<double>(n - li));
    EXPECT_LT(std::abs(gl.values[li]), 3.0 / std::sqrt(static_cast<double>(n - li)) * factor) << "lag " << l;
  }
}

TEST(BootstrapTest, DeterministicAndScheduleIndependent) {
  const auto r = gaussian_returns(4000, 0.01, 1);
  const auto a = bootstrap_errors(r, 10, 100, 20, 77, 1);
  const auto b = bootstrap_errors(r, 10, 100, 20, 77, 1);
  const auto c = bootstrap_errors(r, 10, 100, 20, 77, 4);
  EXPECT_EQ(*a.std_errors, *b.std_errors);
  EXPECT_EQ(*a.std_errors, *c.std_errors);
  EXPECT_EQ(a.values, estimate_leverage(r, 10).values);
  const auto d = bootstrap_errors(r, 10, 100, 20, 78, 1);
  EXPECT_NE(*a.std_errors, *d.std_errors);
  for (double s : *a.std_errors) {
    EXPECT_GE(s, 0.0);
    EXPECT_TRUE(std::isfinite(s));
  }
}

TEST(BootstrapTest, BlockLenOneMatchesAnalyticIidError) {
  const std::size_t n = 1u << 14;
  const auto r = gaussian_returns(n, 0.01, 31);
  const auto gl = bootstrap_errors(r, 8, 400, 1, 5);
  // Var of (1/m) sum d_i (d_{i+l}^2 - m2) for i.i.d. data is m2 (m4 - m2^2) / m.
  const auto& v = r.values();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d2 = (x - mean) * (x - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const double s3 = std::pow(estimate_sigma(r), 3);
  for (std::size_t l = 1; l <= 8; ++l) {
    const double analytic = std::sqrt(m2 * (m4 - m2 * m2) / static_cast<double>(n - l)) / s3;
    EXPECT_NEAR((*gl.std_errors)[l] / analytic, 1.0, 0.2) << "lag " << l;
  }
}

TEST(BootstrapTest, InvalidParameters) {
  const auto r = gaussian_returns(500, 0.01, 1);
  auto code = [&](int n_boot, int block) {
    try {
      bootstrap_errors(r, 5, n_boot, block, 1);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;
  };
  EXPECT_EQ(code(99, 10), ErrorCode::invalid_parameter);
  EXPECT_EQ(code(100, 0), ErrorCode::invalid_parameter);
}

// Destroying temporal order removes leverage: for every lag, the shuffled
// estimate sits inside its 3-SE bootstrap band in at least 95% of shuffles.
TEST(BootstrapTest, ShuffledSeriesLosesLeverage) {
  SimConfig cfg;
  cfg.n_days = 20000;
  cfg.seed = 3;
  const auto sim = simulate(cfg);
  const int max_lag = 10, shuffles = 40;
  std::vector<int> inside(max_lag + 1, 0);
  std::mt19937_64 rng(99);
  for (int s = 0; s < shuffles; ++s) {
    auto v = sim.returns.values();
    std::shuffle(v.begin(), v.end(), rng);
    const auto gl = bootstrap_errors(series(v), max_lag, 100, 2 * max_lag, 1000 + s);
    for (int l = 1; l <= max_lag; ++l) {
      const auto li = static_cast<std::size_t>(l);
      if (std::abs(gl.values[li]) < 3.0 * (*gl.std_errors)[li]) ++inside[li];
    }
  }
  for (int l = 1; l <= max_lag; ++l) EXPECT_GE(inside[static_cast<std::size_t>(l)], 38) << "lag " << l;
}

}  // namespace
}  // namespace implev
