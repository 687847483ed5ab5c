#pragma once

// Monte Carlo oracle: a linear "retarded volatility" return process
//
//   sigma_t = sigma_bar + sum_{tau=1}^{L} k(tau) r_{t-tau},   r_t = sigma_t eps_t,
//
// whose leverage function is g_L(l) = 2 k(l) to first order in k, and the
// forward realized-vol regression whose slope reproduces gamma(T).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "implev/detail/csv.hpp"
#include "implev/detail/ols.hpp"
#include "implev/detail/random.hpp"
#include "implev/error.hpp"
#include "implev/leverage_estimator.hpp"
#include "implev/market_data.hpp"
#include "implev/smile_theory.hpp"

namespace implev {

enum class KernelForm { exponential, powerlaw, table };

inline constexpr double kMaxKernelAbsSum = 0.5;

struct Kernel {
  KernelForm form = KernelForm::exponential;
  double amplitude = 0.0;
  double tau = 1.0;  // timescale in days, or the exponent for a power law
  int cutoff = 1;
  std::vector<double> values;  // k(1..cutoff)

  /// k(t) = A exp(-t / tau), t = 1..cutoff.
  static Kernel exponential(double amplitude, double tau, int cutoff) {
    Kernel k{KernelForm::exponential, amplitude, tau, cutoff, {}};
    k.materialize();
    return k;
  }
  /// k(t) = A t^(-exponent), t = 1..cutoff.
  static Kernel powerlaw(double amplitude, double exponent, int cutoff) {
    Kernel k{KernelForm::powerlaw, amplitude, exponent, cutoff, {}};
    k.materialize();
    return k;
  }
  static Kernel table(std::vector<double> values) {
    Kernel k{KernelForm::table, 0.0, 1.0, static_cast<int>(values.size()), std::move(values)};
    k.validate();
    return k;
  }
  static Kernel zero(int cutoff) { return table(std::vector<double>(static_cast<std::size_t>(cutoff), 0.0)); }

  /// k(t); zero outside 1..cutoff.
  double at(int t) const {
    return t >= 1 && t <= cutoff ? values[static_cast<std::size_t>(t - 1)] : 0.0;
  }

  double abs_sum() const {
    double s = 0.0;
    for (double v : values) s += std::abs(v);
    return s;
  }

  void validate() const {
    if (cutoff < 1 || values.size() != static_cast<std::size_t>(cutoff))
      throw Error(ErrorCode::invalid_parameter, "kernel cutoff must be >= 1");
    for (double v : values)
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_parameter, "kernel values must be finite");
    if (!(abs_sum() < kMaxKernelAbsSum))
      throw Error(ErrorCode::unstable_kernel,
                  "sum |k| = " + detail::format_real(abs_sum()) + " is not below " +
                      detail::format_real(kMaxKernelAbsSum));
  }

 private:
  void materialize() {
    if (cutoff < 1) throw Error(ErrorCode::invalid_parameter, "kernel cutoff must be >= 1");
    if (!(tau > 0.0) || !std::isfinite(tau))
      throw Error(ErrorCode::invalid_parameter, "kernel tau must be positive");
    values.resize(static_cast<std::size_t>(cutoff));
    for (int t = 1; t <= cutoff; ++t) {
      values[static_cast<std::size_t>(t - 1)] = form == KernelForm::exponential
                                                    ? amplitude * std::exp(-t / tau)
                                                    : amplitude * std::pow(static_cast<double>(t), -tau);
    }
    validate();
  }
};

struct SimConfig {
  Kernel kernel = Kernel::exponential(-0.1, 10.0, 7);
  double sigma_bar = 0.01;
  int n_days = 1 << 20;
  std::uint64_t seed = 42;
  double vol_floor_frac = 0.1;

  int warmup() const { return 10 * kernel.cutoff; }

  void validate() const {
    kernel.validate();
    if (!(sigma_bar > 0.0) || !std::isfinite(sigma_bar))
      throw Error(ErrorCode::invalid_parameter, "sigma_bar must be positive");
    if (!(vol_floor_frac > 0.0 && vol_floor_frac < 1.0))
      throw Error(ErrorCode::invalid_parameter, "vol_floor_frac must lie in (0, 1)");
    if (n_days <= 10 * kernel.cutoff)
      throw Error(ErrorCode::invalid_parameter, "n_days must exceed 10 x kernel cutoff");
  }
};

/// Builds a config from flat `key=value` lines ('#' starts a comment).
/// Keys: kernel.form, kernel.amplitude, kernel.tau, kernel.cutoff,
/// kernel.values (table form, comma separated), sigma_bar, n_days, seed,
/// vol_floor_frac, noise.
inline SimConfig parse_sim_config(const std::string& text, SimConfig base = {}) {
  std::string form = base.kernel.form == KernelForm::exponential ? "exponential"
                     : base.kernel.form == KernelForm::powerlaw  ? "powerlaw"
                                                                 : "table";
  double amplitude = base.kernel.amplitude, tau = base.kernel.tau;
  int cutoff = base.kernel.cutoff;
  std::vector<double> table = base.kernel.values;

  auto bad = [](const std::string& key, const std::string& value) {
    return Error(ErrorCode::invalid_parameter, "config: bad value '" + value + "' for " + key);
  };
  auto to_real = [&](const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &pos);
    } catch (...) {
      throw bad(key, v);
    }
    if (pos != v.size()) throw bad(key, v);
    return x;
  };
  auto to_int = [&](const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long x = 0;
    try {
      x = std::stoll(v, &pos);
    } catch (...) {
      throw bad(key, v);
    }
    if (pos != v.size()) throw bad(key, v);
    return x;
  };

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::invalid_parameter, "config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key(detail::trim(t.substr(0, eq)));
    const std::string value(detail::trim(t.substr(eq + 1)));
    if (key == "kernel.form") {
      if (value != "exponential" && value != "powerlaw" && value != "table") throw bad(key, value);
      form = value;
    } else if (key == "kernel.amplitude") {
      amplitude = to_real(key, value);
    } else if (key == "kernel.tau") {
      tau = to_real(key, value);
    } else if (key == "kernel.cutoff") {
      cutoff = static_cast<int>(to_int(key, value));
    } else if (key == "kernel.values") {
      table.clear();
      for (const auto& f : detail::split_fields(value)) table.push_back(to_real(key, f));
    } else if (key == "sigma_bar") {
      base.sigma_bar = to_real(key, value);
    } else if (key == "n_days") {
      base.n_days = static_cast<int>(to_int(key, value));
    } else if (key == "seed") {
      base.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "vol_floor_frac") {
      base.vol_floor_frac = to_real(key, value);
    } else if (key == "noise") {
      if (value != "gaussian") throw bad(key, value);
    } else {
      throw Error(ErrorCode::invalid_parameter, "config: unknown key '" + key + "'");
    }
  }

  if (form == "exponential") {
    base.kernel = Kernel::exponential(amplitude, tau, cutoff);
  } else if (form == "powerlaw") {
    base.kernel = Kernel::powerlaw(amplitude, tau, cutoff);
  } else {
    base.kernel = Kernel::table(table);
  }
  base.validate();
  return base;
}

inline SimConfig load_sim_config(const std::filesystem::path& path, SimConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_sim_config(buf.str(), std::move(base));
}

/// Zero-padded day index, so simulated dates order lexically.
inline std::string day_token(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%09zu", index);
  return buf;
}

struct Simulation {
  ReturnSeries returns;
  std::size_t clamp_events = 0;
  std::size_t steps = 0;  // including warm-up
};

inline constexpr double kMaxClampFraction = 1e-3;

/// Simulates n_days returns after a discarded warm-up of 10 x cutoff days.
/// sigma_t is clamped below at vol_floor_frac x sigma_bar.
inline Simulation simulate(const SimConfig& config) {
  config.validate();
  const auto& k = config.kernel.values;
  const std::size_t lmax = k.size();
  const std::size_t warm = static_cast<std::size_t>(config.warmup());
  const std::size_t total = warm + static_cast<std::size_t>(config.n_days);
  const double floor = config.vol_floor_frac * config.sigma_bar;

  std::mt19937_64 rng(detail::stream_seed(config.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> r(total, 0.0);
  std::size_t clamps = 0;
  for (std::size_t t = 0; t < total; ++t) {
    double sigma = config.sigma_bar;
    const std::size_t depth = std::min(lmax, t);
    for (std::size_t tau = 1; tau <= depth; ++tau) sigma += k[tau - 1] * r[t - tau];
    if (sigma < floor) {
      sigma = floor;
      ++clamps;
    }
    r[t] = sigma * normal(rng);
  }
  if (static_cast<double>(clamps) > kMaxClampFraction * static_cast<double>(total))
    throw Error(ErrorCode::excessive_clamping, std::to_string(clamps) + " of " + std::to_string(total) +
                                                   " steps hit the vol floor");

  std::vector<double> kept(r.begin() + static_cast<std::ptrdiff_t>(warm), r.end());
  std::vector<std::string> dates(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) dates[i] = day_token(i + 1);
  return {ReturnSeries("sim", std::move(dates), std::move(kept)), clamps, total};
}

/// Price path starting at `initial` on day 0 whose log returns are `returns`.
inline PriceSeries prices_from_returns(const ReturnSeries& returns, double initial = 100.0) {
  std::vector<std::string> dates{day_token(0)};
  std::vector<double> prices{initial};
  double log_p = std::log(initial);
  for (std::size_t i = 0; i < returns.size(); ++i) {
    log_p += returns.values()[i];
    dates.push_back(returns.dates()[i]);
    prices.push_back(std::exp(log_p));
  }
  return PriceSeries(returns.ticker(), std::move(dates), std::move(prices));
}

/// First-order leverage function of the simulated process: g_L(0) = 0,
/// g_L(l) = 2 k(l). Lags run to max(cutoff, max_lag), zero past the cutoff.
inline LeverageFunction kernel_to_gl(const Kernel& kernel, double sigma_bar, int max_lag = 0) {
  kernel.validate();
  if (!(sigma_bar > 0.0)) throw Error(ErrorCode::invalid_parameter, "sigma_bar must be positive");
  const int n = std::max(kernel.cutoff, max_lag);
  LeverageFunction gl;
  gl.sigma = sigma_bar;
  for (int l = 0; l <= n; ++l) {
    gl.lags.push_back(l);
    gl.values.push_back(l == 0 ? 0.0 : 2.0 * kernel.at(l));
  }
  return gl;
}

struct OracleResult {
  int maturity = 0;
  double slope = 0.0;
  double std_err = 0.0;
  double theory_gamma = 0.0;
  std::size_t n_obs = 0;
};

/// Regresses the relative deviation of forward realized vol,
/// RV(t,T) = sqrt(mean_{u=1..T} r_{t+u}^2), on r_t. Windows advance by
/// `stride` days; 0 means T (non-overlapping).
inline OracleResult forward_vol_slope(const ReturnSeries& returns, int maturity, const GammaCurve& theory,
                                      int stride = 0) {
  if (maturity < 1) throw Error(ErrorCode::invalid_parameter, "maturity must be >= 1");
  if (stride < 0) throw Error(ErrorCode::invalid_parameter, "stride must be >= 0");
  const auto& r = returns.values();
  const std::size_t n = r.size();
  const auto t_len = static_cast<std::size_t>(maturity);
  if (n < 100 * t_len)
    throw Error(ErrorCode::series_too_short, "forward-vol regression needs at least 100 x T returns");
  const auto theory_gamma = theory.at(maturity);
  if (!theory_gamma)
    throw Error(ErrorCode::maturity_mismatch, "theory curve has no maturity " + std::to_string(maturity));
  const std::size_t step = stride == 0 ? t_len : static_cast<std::size_t>(stride);

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + r[i] * r[i];

  std::vector<double> x, rv;
  for (std::size_t t = 0; t + t_len < n; t += step) {
    x.push_back(r[t]);
    rv.push_back(std::sqrt((prefix[t + t_len + 1] - prefix[t + 1]) / static_cast<double>(t_len)));
  }
  double mean = 0.0;
  for (double v : rv) mean += v;
  mean /= static_cast<double>(rv.size());
  for (double& v : rv) v = (v - mean) / mean;

  const auto fit = detail::ols_with_intercept(x, rv);
  return {maturity, fit.slope, fit.slope_se, *theory_gamma, fit.n_obs};
}

struct SyntheticPanel {
  ImpliedVolPanel panel;
  std::size_t floor_events = 0;
};

/// Vol panel with a planted response: Sigma_0 = base on the first return
/// date, then Sigma_t = Sigma_{t-1} (1 + gamma(T) r_t + eta_t) with eta
/// Gaussian of sd `noise_sd`. Vols are floored at 10% of base.
inline SyntheticPanel synthesize_vol_panel(const ReturnSeries& returns, const GammaCurve& gamma,
                                           const VolTermStructure& base_vols, double noise_sd,
                                           std::uint64_t seed) {
  base_vols.validate();
  if (gamma.maturities != base_vols.maturities || gamma.gammas.size() != gamma.maturities.size())
    throw Error(ErrorCode::maturity_mismatch, "gamma curve and base vols have different maturities");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw Error(ErrorCode::invalid_parameter, "noise_sd must be >= 0");

  const std::size_t nd = returns.size();
  const std::size_t nm = base_vols.maturities.size();
  const auto& r = returns.values();
  std::vector<double> grid(nd * nm);
  std::size_t floors = 0;
  for (std::size_t j = 0; j < nm; ++j) {
    std::mt19937_64 rng(detail::stream_seed(seed, j));
    std::normal_distribution<double> normal(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
    const double base = base_vols.vols[j];
    const double floor = 0.1 * base;
    double vol = base;
    grid[j] = vol;
    for (std::size_t t = 1; t < nd; ++t) {
      const double eta = noise_sd > 0.0 ? normal(rng) : 0.0;
      vol *= 1.0 + gamma.gammas[j] * r[t] + eta;
      if (vol < floor) {
        vol = floor;
        ++floors;
      }
      grid[t * nm + j] = vol;
    }
  }
  return {ImpliedVolPanel(returns.ticker(), returns.dates(), base_vols.maturities, std::move(grid)), floors};
}

}  // namespace implev
