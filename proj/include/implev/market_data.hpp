#pragma once

// Price and implied-vol ingestion, return computation, and the date join that
// feeds the implied-leverage regression.
//
// Units: vols are daily (standard deviation of a one-day return), maturities
// are trading days. Dates are opaque ISO-8601 tokens ordered lexically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "implev/detail/csv.hpp"
#include "implev/error.hpp"

namespace implev {

inline constexpr double kTradingDaysPerYear = 252.0;

/// Display-only conversion of a daily vol to annual units.
inline double annualize(double daily_vol) { return daily_vol * std::sqrt(kTradingDaysPerYear); }

namespace detail {

inline void require_increasing(const std::vector<std::string>& dates, const std::string& what) {
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw Error(dates[i - 1] == dates[i] ? ErrorCode::duplicate_date : ErrorCode::invalid_input,
                  what + ": dates not strictly increasing at '" + dates[i] + "'");
    }
  }
}

inline std::string ticker_from_path(const std::filesystem::path& path) {
  return path.stem().string();
}

}  // namespace detail

class PriceSeries {
 public:
  PriceSeries(std::string ticker, std::vector<std::string> dates, std::vector<double> prices)
      : ticker_(std::move(ticker)), dates_(std::move(dates)), prices_(std::move(prices)) {
    if (dates_.size() != prices_.size())
      throw Error(ErrorCode::invalid_input, "price series: dates and prices differ in length");
    if (prices_.size() < 2)
      throw Error(ErrorCode::series_too_short, "price series needs at least 2 observations");
    detail::require_increasing(dates_, "price series " + ticker_);
    for (std::size_t i = 0; i < prices_.size(); ++i) {
      if (!(prices_[i] > 0.0) || !std::isfinite(prices_[i]))
        throw Error(ErrorCode::non_positive_price,
                    "price series " + ticker_ + ": non-positive price on " + dates_[i]);
    }
  }

  const std::string& ticker() const noexcept { return ticker_; }
  const std::vector<std::string>& dates() const noexcept { return dates_; }
  const std::vector<double>& prices() const noexcept { return prices_; }
  std::size_t size() const noexcept { return prices_.size(); }

 private:
  std::string ticker_;
  std::vector<std::string> dates_;
  std::vector<double> prices_;
};

class ReturnSeries {
 public:
  ReturnSeries(std::string ticker, std::vector<std::string> dates, std::vector<double> returns)
      : ticker_(std::move(ticker)), dates_(std::move(dates)), returns_(std::move(returns)) {
    if (dates_.size() != returns_.size())
      throw Error(ErrorCode::invalid_input, "return series: dates and returns differ in length");
    if (returns_.empty()) throw Error(ErrorCode::series_too_short, "return series is empty");
    detail::require_increasing(dates_, "return series " + ticker_);
    for (std::size_t i = 0; i < returns_.size(); ++i) {
      if (!std::isfinite(returns_[i]))
        throw Error(ErrorCode::invalid_input,
                    "return series " + ticker_ + ": non-finite return on " + dates_[i]);
    }
  }

  const std::string& ticker() const noexcept { return ticker_; }
  const std::vector<std::string>& dates() const noexcept { return dates_; }
  const std::vector<double>& values() const noexcept { return returns_; }
  std::size_t size() const noexcept { return returns_.size(); }

  /// Sub-series on dates in [from, to]; an empty bound is open.
  ReturnSeries window(const std::string& from, const std::string& to) const {
    std::vector<std::string> d;
    std::vector<double> r;
    for (std::size_t i = 0; i < returns_.size(); ++i) {
      if (!from.empty() && dates_[i] < from) continue;
      if (!to.empty() && dates_[i] > to) continue;
      d.push_back(dates_[i]);
      r.push_back(returns_[i]);
    }
    if (r.empty())
      throw Error(ErrorCode::series_too_short, "no returns inside window [" + from + ", " + to + "]");
    return ReturnSeries(ticker_, std::move(d), std::move(r));
  }

 private:
  std::string ticker_;
  std::vector<std::string> dates_;
  std::vector<double> returns_;
};

/// Date x maturity grid of ATM implied vols, row-major by date. Missing
/// cells hold NaN and are never zero-filled.
class ImpliedVolPanel {
 public:
  ImpliedVolPanel(std::string ticker, std::vector<std::string> dates, std::vector<int> maturities,
                  std::vector<double> vols)
      : ticker_(std::move(ticker)),
        dates_(std::move(dates)),
        maturities_(std::move(maturities)),
        vols_(std::move(vols)) {
    if (vols_.size() != dates_.size() * maturities_.size())
      throw Error(ErrorCode::invalid_input, "vol panel: grid size does not match dates x maturities");
    detail::require_increasing(dates_, "vol panel " + ticker_);
    for (std::size_t j = 0; j < maturities_.size(); ++j) {
      if (maturities_[j] < 1)
        throw Error(ErrorCode::invalid_input, "vol panel: maturities must be >= 1 trading day");
      if (j > 0 && maturities_[j] <= maturities_[j - 1])
        throw Error(ErrorCode::invalid_input, "vol panel: maturities not strictly increasing");
    }
    for (double v : vols_) {
      if (!std::isnan(v) && !(v > 0.0 && std::isfinite(v)))
        throw Error(ErrorCode::non_positive_vol, "vol panel " + ticker_ + ": non-positive vol");
    }
  }

  const std::string& ticker() const noexcept { return ticker_; }
  const std::vector<std::string>& dates() const noexcept { return dates_; }
  const std::vector<int>& maturities() const noexcept { return maturities_; }
  const std::vector<double>& raw() const noexcept { return vols_; }

  bool has(std::size_t date, std::size_t maturity) const {
    return !std::isnan(vols_[date * maturities_.size() + maturity]);
  }
  std::optional<double> vol(std::size_t date, std::size_t maturity) const {
    const double v = vols_[date * maturities_.size() + maturity];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }
  std::size_t missing_count() const {
    return static_cast<std::size_t>(
        std::count_if(vols_.begin(), vols_.end(), [](double v) { return std::isnan(v); }));
  }

  friend bool operator==(const ImpliedVolPanel& a, const ImpliedVolPanel& b) {
    if (a.ticker_ != b.ticker_ || a.dates_ != b.dates_ || a.maturities_ != b.maturities_) return false;
    for (std::size_t i = 0; i < a.vols_.size(); ++i) {
      const bool na = std::isnan(a.vols_[i]), nb = std::isnan(b.vols_[i]);
      if (na != nb || (!na && a.vols_[i] != b.vols_[i])) return false;
    }
    return true;
  }

 private:
  std::string ticker_;
  std::vector<std::string> dates_;
  std::vector<int> maturities_;
  std::vector<double> vols_;
};

/// Returns and vols joined on date. Only dates carrying a return and at
/// least one vol survive; per-maturity columns may still have gaps.
struct AlignedPanel {
  std::string ticker;
  std::vector<std::string> dates;
  std::vector<double> returns;
  std::vector<int> maturities;
  std::vector<double> vols;  // row-major by date, NaN = missing
  std::vector<std::size_t> observations;  // present cells per maturity
  std::vector<bool> sparse;               // fewer than kMinJoinedObservations

  static constexpr std::size_t kMinJoinedObservations = 30;

  double vol(std::size_t date, std::size_t maturity) const {
    return vols[date * maturities.size() + maturity];
  }
  ImpliedVolPanel as_panel() const { return ImpliedVolPanel(ticker, dates, maturities, vols); }

  friend bool operator==(const AlignedPanel& a, const AlignedPanel& b) {
    return a.as_panel() == b.as_panel() && a.returns == b.returns &&
           a.observations == b.observations && a.sparse == b.sparse;
  }
};

enum class ReturnKind { log, simple };

/// Loads `date_column` and `price_column` from a CSV with a header row. An
/// empty `price_column` selects the first column that is not the date.
inline PriceSeries load_price_series(const std::filesystem::path& path,
                                     const std::string& date_column = "date",
                                     std::string price_column = "") {
  const auto table = detail::read_csv(path);
  const std::size_t dcol = table.column(date_column);
  if (price_column.empty()) {
    for (const auto& h : table.header)
      if (h != date_column) {
        price_column = h;
        break;
      }
  }
  const std::size_t pcol = table.column(price_column);

  std::vector<std::pair<std::string, double>> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.fields[dcol].empty())
      throw Error(ErrorCode::parse_error, table.source + ": line " + std::to_string(row.line) +
                                              ", column '" + date_column + "': empty date");
    const double p = detail::parse_real(table, row, pcol);
    if (!(p > 0.0))
      throw Error(ErrorCode::non_positive_price, table.source + ": line " + std::to_string(row.line) +
                                                     ": non-positive price " + row.fields[pcol]);
    rows.emplace_back(row.fields[dcol], p);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].first == rows[i - 1].first)
      throw Error(ErrorCode::duplicate_date, table.source + ": duplicate date " + rows[i].first);
  }
  std::vector<std::string> dates;
  std::vector<double> prices;
  for (auto& [d, p] : rows) {
    dates.push_back(std::move(d));
    prices.push_back(p);
  }
  return PriceSeries(detail::ticker_from_path(path), std::move(dates), std::move(prices));
}

/// r_i = ln(p_{i+1}/p_i) (or the simple return), dated by the later date.
inline ReturnSeries compute_returns(const PriceSeries& prices, ReturnKind kind = ReturnKind::log) {
  const auto& p = prices.prices();
  if (p.size() < 2) throw Error(ErrorCode::series_too_short, "need at least 2 prices");
  std::vector<double> r(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    r[i] = kind == ReturnKind::log ? std::log(p[i + 1] / p[i]) : p[i + 1] / p[i] - 1.0;
  std::vector<std::string> dates(prices.dates().begin() + 1, prices.dates().end());
  return ReturnSeries(prices.ticker(), std::move(dates), std::move(r));
}

/// Reads the `date_index,return` format written for simulated paths. Any
/// first column works as the date token.
inline ReturnSeries load_return_series(const std::filesystem::path& path) {
  const auto table = detail::read_csv(path);
  if (table.header.size() < 2)
    throw Error(ErrorCode::parse_error, table.source + ": expected a date column and 'return'");
  const std::size_t rcol = table.column("return");
  std::vector<std::string> dates;
  std::vector<double> r;
  for (const auto& row : table.rows) {
    dates.push_back(row.fields[0]);
    r.push_back(detail::parse_real(table, row, rcol));
  }
  return ReturnSeries(detail::ticker_from_path(path), std::move(dates), std::move(r));
}

inline std::string write_return_series(const ReturnSeries& series) {
  std::string out = "date_index,return\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out += series.dates()[i] + "," + detail::format_real(series.values()[i]) + "\n";
  return out;
}

/// Long-format panel: `date,maturity_days,atm_vol`. An empty `atm_vol` field
/// records a missing cell.
inline ImpliedVolPanel load_vol_panel(const std::filesystem::path& path, std::string ticker = "") {
  const auto table = detail::read_csv(path);
  const std::size_t dcol = table.column("date");
  const std::size_t mcol = table.column("maturity_days");
  const std::size_t vcol = table.column("atm_vol");

  std::map<std::pair<std::string, int>, double> cells;
  std::map<std::string, int> date_set;
  std::map<int, int> maturity_set;
  for (const auto& row : table.rows) {
    const std::string& date = row.fields[dcol];
    if (date.empty())
      throw Error(ErrorCode::parse_error,
                  table.source + ": line " + std::to_string(row.line) + ", column 'date': empty date");
    const long long m = detail::parse_integer(table, row, mcol);
    if (m < 1 || m > std::numeric_limits<int>::max())
      throw Error(ErrorCode::parse_error, table.source + ": line " + std::to_string(row.line) +
                                              ", column 'maturity_days': must be a positive integer");
    double v = std::numeric_limits<double>::quiet_NaN();
    if (!row.fields[vcol].empty()) {
      v = detail::parse_real(table, row, vcol);
      if (!(v > 0.0))
        throw Error(ErrorCode::non_positive_vol, table.source + ": line " + std::to_string(row.line) +
                                                     ": non-positive vol " + row.fields[vcol]);
    }
    const auto key = std::make_pair(date, static_cast<int>(m));
    const auto [it, inserted] = cells.emplace(key, v);
    if (!inserted) {
      const bool same = (std::isnan(it->second) && std::isnan(v)) || it->second == v;
      if (!same)
        throw Error(ErrorCode::inconsistent_maturity_set,
                    table.source + ": line " + std::to_string(row.line) + ": conflicting values for " +
                        date + " maturity " + std::to_string(m));
    }
    date_set.emplace(date, 0);
    maturity_set.emplace(static_cast<int>(m), 0);
  }

  std::vector<std::string> dates;
  for (auto& [d, idx] : date_set) {
    idx = static_cast<int>(dates.size());
    dates.push_back(d);
  }
  std::vector<int> maturities;
  for (auto& [m, idx] : maturity_set) {
    idx = static_cast<int>(maturities.size());
    maturities.push_back(m);
  }
  std::vector<double> grid(dates.size() * maturities.size(),
                           std::numeric_limits<double>::quiet_NaN());
  for (const auto& [key, v] : cells)
    grid[date_set[key.first] * maturities.size() + maturity_set[key.second]] = v;

  if (ticker.empty()) ticker = detail::ticker_from_path(path);
  return ImpliedVolPanel(std::move(ticker), std::move(dates), std::move(maturities), std::move(grid));
}

/// Serializes every grid cell, missing ones with an empty `atm_vol`.
inline std::string write_vol_panel(const ImpliedVolPanel& panel) {
  std::string out = "date,maturity_days,atm_vol\n";
  const auto& m = panel.maturities();
  for (std::size_t i = 0; i < panel.dates().size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      out += panel.dates()[i] + "," + std::to_string(m[j]) + ",";
      if (const auto v = panel.vol(i, j)) out += detail::format_real(*v);
      out += "\n";
    }
  }
  return out;
}

/// Inner join of a vol panel with returns on date, preserving date order.
inline AlignedPanel align(const ImpliedVolPanel& panel, const ReturnSeries& returns) {
  const auto& pd = panel.dates();
  const auto& rd = returns.dates();
  const std::size_t nm = panel.maturities().size();

  AlignedPanel out;
  out.ticker = panel.ticker();
  out.maturities = panel.maturities();
  out.observations.assign(nm, 0);

  std::size_t i = 0, k = 0;
  while (i < pd.size() && k < rd.size()) {
    if (pd[i] < rd[k]) {
      ++i;
    } else if (rd[k] < pd[i]) {
      ++k;
    } else {
      // Dates with no vol at all stay in as gap rows.
      out.dates.push_back(pd[i]);
      out.returns.push_back(returns.values()[k]);
      for (std::size_t j = 0; j < nm; ++j) {
        out.vols.push_back(panel.raw()[i * nm + j]);
        if (panel.has(i, j)) ++out.observations[j];
      }
      ++i;
      ++k;
    }
  }
  if (out.dates.empty())
    throw Error(ErrorCode::empty_intersection,
                "no common dates between vol panel " + panel.ticker() + " and returns " + returns.ticker());
  out.sparse.resize(nm);
  for (std::size_t j = 0; j < nm; ++j)
    out.sparse[j] = out.observations[j] < AlignedPanel::kMinJoinedObservations;
  return out;
}

}  // namespace implev
