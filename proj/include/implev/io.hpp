#pragma once

// CSV layouts shared by the command-line tool. Every number is written with
// nine significant digits; a missing standard error is an empty field.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "implev/detail/csv.hpp"
#include "implev/implied_regression.hpp"
#include "implev/leverage_estimator.hpp"
#include "implev/leverage_sim.hpp"
#include "implev/smile_theory.hpp"

namespace implev {

using detail::format_real;

/// `lag,g_l,std_err,sigma,n_obs`
inline std::string write_leverage_function(const LeverageFunction& gl) {
  std::string out = "lag,g_l,std_err,sigma,n_obs\n";
  for (std::size_t i = 0; i < gl.values.size(); ++i) {
    out += std::to_string(gl.lags[i]) + "," + format_real(gl.values[i]) + ",";
    if (gl.std_errors) out += format_real((*gl.std_errors)[i]);
    out += "," + format_real(gl.sigma) + "," + std::to_string(gl.n_obs) + "\n";
  }
  return out;
}

inline LeverageFunction load_leverage_function(const std::filesystem::path& path) {
  const auto table = detail::read_csv(path);
  const auto lcol = table.column("lag"), gcol = table.column("g_l"), ecol = table.column("std_err"),
             scol = table.column("sigma"), ncol = table.column("n_obs");
  LeverageFunction gl;
  std::vector<double> se;
  std::size_t with_se = 0;
  for (const auto& row : table.rows) {
    gl.lags.push_back(static_cast<int>(detail::parse_integer(table, row, lcol)));
    gl.values.push_back(detail::parse_real(table, row, gcol));
    if (!row.fields[ecol].empty()) {
      se.push_back(detail::parse_real(table, row, ecol));
      ++with_se;
    }
    gl.sigma = detail::parse_real(table, row, scol);
    gl.n_obs = static_cast<std::size_t>(detail::parse_integer(table, row, ncol));
  }
  if (with_se != 0 && with_se != gl.values.size())
    throw Error(ErrorCode::parse_error, table.source + ": std_err must be given for all lags or none");
  if (with_se != 0) gl.std_errors = std::move(se);
  gl.validate();
  return gl;
}

/// `maturity_days,atm_vol`
inline VolTermStructure load_term_structure(const std::filesystem::path& path) {
  const auto table = detail::read_csv(path);
  const auto mcol = table.column("maturity_days"), vcol = table.column("atm_vol");
  VolTermStructure term;
  for (const auto& row : table.rows) {
    term.maturities.push_back(static_cast<int>(detail::parse_integer(table, row, mcol)));
    term.vols.push_back(detail::parse_real(table, row, vcol));
  }
  term.validate();
  return term;
}

/// `maturity_days,skew`
inline SkewCurve load_skew_curve(const std::filesystem::path& path) {
  const auto table = detail::read_csv(path);
  const auto mcol = table.column("maturity_days"), scol = table.column("skew");
  SkewCurve skew;
  for (const auto& row : table.rows) {
    skew.maturities.push_back(static_cast<int>(detail::parse_integer(table, row, mcol)));
    skew.skews.push_back(detail::parse_real(table, row, scol));
  }
  return skew;
}

inline void append_gamma_rows(std::string& out, const GammaCurve& c, std::size_t i) {
  out += std::to_string(c.maturities[i]) + "," + format_real(c.gammas[i]) + ",";
  if (c.std_errors) out += format_real((*c.std_errors)[i]);
  out += ",";
  out += kind_name(c.kind);
  out += "\n";
}

/// `maturity_days,gamma,std_err,kind`, one row per maturity of each curve,
/// interleaved by maturity when several curves share a grid.
inline std::string write_gamma_curves(const std::vector<GammaCurve>& curves) {
  std::string out = "maturity_days,gamma,std_err,kind\n";
  if (curves.empty()) return out;
  for (std::size_t i = 0; i < curves.front().size(); ++i)
    for (const auto& c : curves) append_gamma_rows(out, c, i);
  return out;
}

/// `ticker,maturity_days,gamma_hat,intercept,std_err,n_obs`
inline std::string write_regression_results(const std::vector<RegressionResult>& results) {
  std::string out = "ticker,maturity_days,gamma_hat,intercept,std_err,n_obs\n";
  for (const auto& r : results) {
    out += r.ticker + "," + std::to_string(r.maturity) + "," + format_real(r.slope) + "," +
           format_real(r.intercept) + "," + format_real(r.std_err) + "," + std::to_string(r.n_obs) + "\n";
  }
  return out;
}

/// `maturity_days,slope,std_err,theory_gamma`
inline std::string write_oracle_results(const std::vector<OracleResult>& results) {
  std::string out = "maturity_days,slope,std_err,theory_gamma\n";
  for (const auto& r : results) {
    out += std::to_string(r.maturity) + "," + format_real(r.slope) + "," + format_real(r.std_err) + "," +
           format_real(r.theory_gamma) + "\n";
  }
  return out;
}

}  // namespace implev
