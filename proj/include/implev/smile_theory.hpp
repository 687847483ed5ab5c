#pragma once

// Theoretical response of ATM implied vol to a return r, dSigma/Sigma = gamma(T) r:
//
//   fixed moneyness:  gamma(T)   = 1/(2 Sigma T)   int_0^T g_L(u) du
//   fixed strike:     gamma_K(T) = 1/(2 Sigma T^2) int_0^T u g_L(u) du
//
// together with the sticky-strike, sticky-delta and local-vol benchmarks.
// Integrals use the trapezoidal rule on integer lags 0..T, so the two
// gammas and the ATM skew satisfy gamma - gamma_K = skew / Sigma on the same
// grid. Moneyness is M = ln(K/S).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "implev/error.hpp"
#include "implev/leverage_estimator.hpp"

namespace implev {

enum class GammaKind { theory_moneyness, theory_strike, sticky_strike, sticky_delta, local_vol, empirical };

inline constexpr std::string_view kind_name(GammaKind kind) {
  switch (kind) {
    case GammaKind::theory_moneyness: return "theory_moneyness";
    case GammaKind::theory_strike: return "theory_strike";
    case GammaKind::sticky_strike: return "sticky_strike";
    case GammaKind::sticky_delta: return "sticky_delta";
    case GammaKind::local_vol: return "local_vol";
    case GammaKind::empirical: return "empirical";
  }
  return "unknown";
}

inline std::optional<GammaKind> parse_kind(std::string_view name) {
  for (auto k : {GammaKind::theory_moneyness, GammaKind::theory_strike, GammaKind::sticky_strike,
                 GammaKind::sticky_delta, GammaKind::local_vol, GammaKind::empirical})
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

/// ATM implied vol per maturity, daily units.
struct VolTermStructure {
  std::vector<int> maturities;
  std::vector<double> vols;

  static VolTermStructure flat(double vol, std::vector<int> maturities) {
    VolTermStructure t{std::move(maturities), {}};
    t.vols.assign(t.maturities.size(), vol);
    return t;
  }

  void validate() const {
    if (maturities.size() != vols.size())
      throw Error(ErrorCode::invalid_input, "term structure: maturities and vols differ in length");
    for (std::size_t i = 0; i < maturities.size(); ++i) {
      if (maturities[i] < 1)
        throw Error(ErrorCode::invalid_input, "term structure: maturities must be >= 1 trading day");
      if (i > 0 && maturities[i] <= maturities[i - 1])
        throw Error(ErrorCode::invalid_input, "term structure: maturities not strictly increasing");
      if (!(vols[i] > 0.0) || !std::isfinite(vols[i]))
        throw Error(ErrorCode::invalid_input, "term structure: vols must be positive");
    }
  }
};

struct GammaCurve {
  std::vector<int> maturities;
  std::vector<double> gammas;
  std::optional<std::vector<double>> std_errors;
  GammaKind kind = GammaKind::theory_moneyness;

  std::size_t size() const { return maturities.size(); }

  /// Gamma at maturity `t`, if the curve carries it.
  std::optional<double> at(int t) const {
    for (std::size_t i = 0; i < maturities.size(); ++i)
      if (maturities[i] == t) return gammas[i];
    return std::nullopt;
  }
};

/// dSigma/dM at M = 0 per maturity.
struct SkewCurve {
  std::vector<int> maturities;
  std::vector<double> skews;
};

struct SmileSlice {
  int maturity = 0;
  std::vector<double> moneyness;  // ln(K/S), strictly increasing
  std::vector<double> vols;
};

namespace detail {

struct Quadratures {
  double q0 = 0.0;     // int_0^T g
  double q1 = 0.0;     // int_0^T u g
  double qskew = 0.0;  // int_0^T (T - u) g
  double var0 = 0.0;   // variance of q0 under independent lag errors
  double var1 = 0.0;
};

inline Quadratures trapezoid(const LeverageFunction& gl, int t) {
  Quadratures q;
  const auto& g = gl.values;
  for (int u = 0; u <= t; ++u) {
    const double w = (u == 0 || u == t) ? 0.5 : 1.0;
    const double gu = g[static_cast<std::size_t>(u)];
    q.q0 += w * gu;
    q.q1 += w * u * gu;
    q.qskew += w * (t - u) * gu;
    if (gl.std_errors) {
      const double s = (*gl.std_errors)[static_cast<std::size_t>(u)];
      q.var0 += w * w * s * s;
      q.var1 += w * w * u * u * s * s;
    }
  }
  return q;
}

inline void check_theory_inputs(const LeverageFunction& gl, const VolTermStructure& term) {
  gl.validate();
  term.validate();
  if (term.maturities.empty()) throw Error(ErrorCode::invalid_input, "term structure is empty");
  if (term.maturities.back() > gl.max_lag())
    throw Error(ErrorCode::maturity_exceeds_max_lag,
                "maturity " + std::to_string(term.maturities.back()) + " exceeds max lag " +
                    std::to_string(gl.max_lag()) + " of the leverage function");
}

}  // namespace detail

/// gamma(T) for fixed-moneyness ATM vol.
inline GammaCurve gamma_moneyness(const LeverageFunction& gl, const VolTermStructure& term) {
  detail::check_theory_inputs(gl, term);
  GammaCurve c{term.maturities, {}, std::nullopt, GammaKind::theory_moneyness};
  if (gl.std_errors) c.std_errors.emplace();
  for (std::size_t i = 0; i < term.maturities.size(); ++i) {
    const int t = term.maturities[i];
    const auto q = detail::trapezoid(gl, t);
    const double denom = 2.0 * term.vols[i] * t;
    c.gammas.push_back(q.q0 / denom);
    if (c.std_errors) c.std_errors->push_back(std::sqrt(q.var0) / denom);
  }
  return c;
}

/// gamma_K(T) for a fixed-strike option struck near the money.
inline GammaCurve gamma_strike(const LeverageFunction& gl, const VolTermStructure& term) {
  detail::check_theory_inputs(gl, term);
  GammaCurve c{term.maturities, {}, std::nullopt, GammaKind::theory_strike};
  if (gl.std_errors) c.std_errors.emplace();
  for (std::size_t i = 0; i < term.maturities.size(); ++i) {
    const int t = term.maturities[i];
    const auto q = detail::trapezoid(gl, t);
    const double denom = 2.0 * term.vols[i] * t * t;
    c.gammas.push_back(q.q1 / denom);
    if (c.std_errors) c.std_errors->push_back(std::sqrt(q.var1) / denom);
  }
  return c;
}

/// ATM skew implied by the leverage function,
/// skew(T) = 1/(2 T^2) int_0^T (T - u) g_L(u) du = Sigma (gamma - gamma_K).
inline SkewCurve theoretical_skew(const LeverageFunction& gl, const VolTermStructure& term) {
  detail::check_theory_inputs(gl, term);
  SkewCurve s{term.maturities, {}};
  for (int t : term.maturities) {
    const auto q = detail::trapezoid(gl, t);
    s.skews.push_back(q.qskew / (2.0 * t * static_cast<double>(t)));
  }
  return s;
}

/// Slope at M = 0 of the parabola through the three grid points closest to
/// the money (a bracketing pair plus its nearer neighbour), or the secant
/// when the grid has two points.
inline double atm_skew_from_smile(const SmileSlice& slice) {
  const auto& m = slice.moneyness;
  const auto& v = slice.vols;
  if (m.size() != v.size() || m.size() < 2)
    throw Error(ErrorCode::invalid_input, "smile slice needs at least 2 points");
  for (std::size_t i = 1; i < m.size(); ++i)
    if (!(m[i] > m[i - 1])) throw Error(ErrorCode::invalid_input, "moneyness grid not increasing");
  if (!(m.front() < 0.0 && m.back() > 0.0))
    throw Error(ErrorCode::grid_does_not_bracket_zero, "moneyness grid does not bracket 0");

  // lo is the last point with M <= 0, so m[lo] <= 0 < m[lo + 1].
  std::size_t lo = 0;
  while (m[lo + 1] <= 0.0) ++lo;
  if (m.size() == 2) return (v[1] - v[0]) / (m[1] - m[0]);

  std::size_t third;
  if (lo == 0) {
    third = 2;
  } else if (lo + 2 >= m.size()) {
    third = lo - 1;
  } else {
    third = std::abs(m[lo - 1]) <= std::abs(m[lo + 2]) ? lo - 1 : lo + 2;
  }
  const std::size_t a = std::min(lo, third), b = a + 1, c = a + 2;

  const double x0 = m[a], x1 = m[b], x2 = m[c];
  const double d0 = -(x1 + x2) / ((x0 - x1) * (x0 - x2));
  const double d1 = -(x0 + x2) / ((x1 - x0) * (x1 - x2));
  const double d2 = -(x0 + x1) / ((x2 - x0) * (x2 - x1));
  return d0 * v[a] + d1 * v[b] + d2 * v[c];
}

/// Smile frozen in strike: a return r slides the ATM point along the smile
/// by dM = r, so gamma_SS = skew / Sigma.
inline GammaCurve gamma_sticky_strike(const SkewCurve& skew, const VolTermStructure& term) {
  term.validate();
  if (skew.maturities != term.maturities || skew.skews.size() != skew.maturities.size())
    throw Error(ErrorCode::maturity_mismatch, "skew and term structure maturities differ");
  GammaCurve c{term.maturities, {}, std::nullopt, GammaKind::sticky_strike};
  for (std::size_t i = 0; i < term.maturities.size(); ++i) c.gammas.push_back(skew.skews[i] / term.vols[i]);
  return c;
}

/// Smile frozen in moneyness: ATM vol does not move.
inline GammaCurve gamma_sticky_delta(const std::vector<int>& maturities) {
  GammaCurve c{maturities, std::vector<double>(maturities.size(), 0.0), std::nullopt,
               GammaKind::sticky_delta};
  return c;
}

/// Local-vol dynamics double the sticky-strike response.
inline GammaCurve gamma_local_vol(const GammaCurve& sticky) {
  if (sticky.kind != GammaKind::sticky_strike)
    throw Error(ErrorCode::wrong_kind, "local-vol rule applies to a sticky_strike curve, got " +
                                           std::string(kind_name(sticky.kind)));
  GammaCurve c = sticky;
  c.kind = GammaKind::local_vol;
  for (double& g : c.gammas) g *= 2.0;
  if (c.std_errors)
    for (double& s : *c.std_errors) s *= 2.0;
  return c;
}

}  // namespace implev
