// implev: leverage-function estimation, implied-leverage theory curves,
// empirical regressions and the Monte Carlo oracle from the command line.
//
// Exit codes: 0 success, 2 validation or usage error, 1 internal error.
// Diagnostics go to stderr as `error: <code>: <message>`.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "implev/implev.hpp"

namespace {

using namespace implev;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    detail::write_file_atomic(path, content);
  }
}

ReturnKind parse_return_kind(const std::string& s) {
  if (s == "log") return ReturnKind::log;
  if (s == "simple") return ReturnKind::simple;
  throw UsageError("--return-kind must be log or simple");
}

ReturnSeries load_returns(const std::string& prices, const std::string& returns, const std::string& date_col,
                          const std::string& price_col, const std::string& kind) {
  if (!returns.empty()) return load_return_series(returns);
  return compute_returns(load_price_series(prices, date_col, price_col), parse_return_kind(kind));
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Term structure restricted to `maturities`, flat at `sigma` when no file is given.
VolTermStructure term_for(const std::vector<int>& maturities, const std::string& term_path, double sigma) {
  if (term_path.empty()) return VolTermStructure::flat(sigma, maturities);
  const auto file = load_term_structure(term_path);
  VolTermStructure term;
  for (int m : maturities) {
    const auto it = std::find(file.maturities.begin(), file.maturities.end(), m);
    if (it == file.maturities.end())
      throw Error(ErrorCode::maturity_mismatch,
                  "term structure " + term_path + " has no maturity " + std::to_string(m));
    term.maturities.push_back(m);
    term.vols.push_back(file.vols[static_cast<std::size_t>(it - file.maturities.begin())]);
  }
  return term;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string prices, returns, date_col = "date", price_col, return_kind = "log", from, to, out;
  int max_lag = 0;
  int bootstrap = 0;
  int block_len = 0;
  std::uint64_t seed = 42;
  bool annualize = false;
};

LeverageFunction estimate_from(const ReturnSeries& r, int max_lag, int bootstrap, int block_len,
                               std::uint64_t seed) {
  if (bootstrap > 0)
    return bootstrap_errors(r, max_lag, bootstrap, block_len > 0 ? block_len : default_block_len(max_lag), seed);
  return estimate_leverage(r, max_lag);
}

int run_estimate(const EstimateArgs& a) {
  if (a.prices.empty() == a.returns.empty()) throw UsageError("give exactly one of --prices or --returns");
  if (a.max_lag < 1) throw Error(ErrorCode::invalid_parameter, "--max-lag must be >= 1");
  auto r = load_returns(a.prices, a.returns, a.date_col, a.price_col, a.return_kind);
  if (!a.from.empty() || !a.to.empty()) r = r.window(a.from, a.to);
  const auto gl = estimate_from(r, a.max_lag, a.bootstrap, a.block_len, a.seed);
  emit(a.out, write_leverage_function(gl));
  if (a.annualize && !a.out.empty())
    std::cout << "sigma_daily=" << format_real(gl.sigma) << " sigma_annualized=" << format_real(annualize(gl.sigma))
              << "\n";
  return 0;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
  std::string gl, term, kind = "both", out;
  std::vector<int> maturities;
};

int run_predict(const PredictArgs& a) {
  if (a.kind != "moneyness" && a.kind != "strike" && a.kind != "both")
    throw UsageError("--kind must be moneyness, strike or both");
  const auto gl = load_leverage_function(a.gl);
  const auto maturities = sorted_unique(a.maturities);
  if (maturities.empty()) throw UsageError("--maturities is empty");
  const auto term = term_for(maturities, a.term, gl.sigma);
  std::vector<GammaCurve> curves;
  if (a.kind != "strike") curves.push_back(gamma_moneyness(gl, term));
  if (a.kind != "moneyness") curves.push_back(gamma_strike(gl, term));
  emit(a.out, write_gamma_curves(curves));
  return 0;
}

// ----------------------------------------------------------------- regress

struct PanelInputs {
  std::vector<std::string> panels, prices, tickers;
  std::string date_col = "date", price_col, return_kind = "log";
  double clip = 0.0;
};

struct PanelRun {
  std::vector<RegressionResult> results;
  std::vector<std::string> tickers;
  std::string first_date, last_date;
};

PanelRun regress_panels(const PanelInputs& in) {
  if (in.panels.size() != in.prices.size())
    throw UsageError("each --panel needs a matching --prices (got " + std::to_string(in.panels.size()) +
                     " panels, " + std::to_string(in.prices.size()) + " price files)");
  if (!in.tickers.empty() && in.tickers.size() != in.panels.size())
    throw UsageError("--ticker must be given once per --panel or not at all");
  PanelRun run;
  for (std::size_t i = 0; i < in.panels.size(); ++i) {
    const auto r = compute_returns(load_price_series(in.prices[i], in.date_col, in.price_col),
                                   parse_return_kind(in.return_kind));
    const std::string ticker = in.tickers.empty() ? r.ticker() : in.tickers[i];
    const auto aligned = align(load_vol_panel(in.panels[i], ticker), r);
    run.tickers.push_back(ticker);
    if (run.first_date.empty() || aligned.dates.front() < run.first_date) run.first_date = aligned.dates.front();
    if (aligned.dates.back() > run.last_date) run.last_date = aligned.dates.back();
    for (int m : aligned.maturities) {
      try {
        run.results.push_back(implied_gamma(aligned, m, in.clip));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::insufficient_observations) throw;
        std::cerr << "warning: " << code_name(e.code()) << ": " << e.what() << "\n";
      }
    }
  }
  if (run.results.empty())
    throw Error(ErrorCode::insufficient_observations, "no maturity column had enough observations");
  std::sort(run.results.begin(), run.results.end(), [](const auto& a, const auto& b) {
    return a.ticker != b.ticker ? a.ticker < b.ticker : a.maturity < b.maturity;
  });
  return run;
}

struct RegressArgs {
  PanelInputs in;
  std::string out, tranche_out;
};

int run_regress(const RegressArgs& a) {
  if (a.in.panels.empty()) throw UsageError("--panel is required");
  const auto run = regress_panels(a.in);
  const std::string rows = write_regression_results(run.results);
  std::string tranche;
  if (!a.tranche_out.empty()) tranche = write_gamma_curves({tranche_average(group_by_maturity(run.results))});
  emit(a.out, rows);
  if (!a.tranche_out.empty()) emit(a.tranche_out, tranche);
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config, form, values, out, prices_out, oracle_out, panel_out;
  double amplitude = 0, tau = 0, sigma_bar = 0, floor = 0, panel_noise = 0.0;
  int cutoff = 0, n_days = 0;
  std::uint64_t seed = 42;
  std::vector<int> oracle, panel_maturities;
  bool overlapping = false;
};

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
  std::string overrides;
  auto set = [&](const char* flag, const std::string& key, const std::string& value) {
    if (cmd.count(flag) > 0) overrides += key + "=" + value + "\n";
  };
  set("--kernel-form", "kernel.form", a.form);
  set("--amplitude", "kernel.amplitude", format_real(a.amplitude));
  set("--tau", "kernel.tau", format_real(a.tau));
  set("--cutoff", "kernel.cutoff", std::to_string(a.cutoff));
  set("--kernel-values", "kernel.values", a.values);
  set("--sigma-bar", "sigma_bar", format_real(a.sigma_bar));
  set("--n-days", "n_days", std::to_string(a.n_days));
  set("--vol-floor-frac", "vol_floor_frac", format_real(a.floor));
  SimConfig config;
  config.seed = a.seed;
  if (!a.config.empty()) config = load_sim_config(a.config, config);
  if (cmd.count("--seed") > 0) config.seed = a.seed;
  config = parse_sim_config(overrides, config);

  const auto sim = simulate(config);
  std::vector<int> needed = sorted_unique(a.oracle);
  for (int m : a.panel_maturities) needed.push_back(m);
  needed = sorted_unique(needed);
  const int max_t = needed.empty() ? 0 : needed.back();
  const auto gl = kernel_to_gl(config.kernel, config.sigma_bar, max_t);

  std::string oracle_csv;
  if (!a.oracle.empty()) {
    const auto maturities = sorted_unique(a.oracle);
    const auto theory = gamma_moneyness(gl, VolTermStructure::flat(config.sigma_bar, maturities));
    std::vector<OracleResult> rows;
    for (int t : maturities) rows.push_back(forward_vol_slope(sim.returns, t, theory, a.overlapping ? 1 : 0));
    oracle_csv = write_oracle_results(rows);
  }
  std::string panel_csv;
  if (!a.panel_out.empty()) {
    const auto maturities = sorted_unique(a.panel_maturities);
    if (maturities.empty()) throw UsageError("--panel-out needs --panel-maturities");
    const auto base = VolTermStructure::flat(config.sigma_bar, maturities);
    const auto planted = gamma_moneyness(gl, base);
    const auto syn = synthesize_vol_panel(sim.returns, planted, base, a.panel_noise, detail::stream_seed(config.seed, 1));
    if (syn.floor_events > 0)
      std::cerr << "warning: synthetic panel hit its vol floor " << syn.floor_events
                << " times; regressions on it will not recover the planted gamma exactly\n";
    panel_csv = write_vol_panel(syn.panel);
  }

  if (!a.out.empty() || a.oracle.empty()) emit(a.out, write_return_series(sim.returns));
  if (!a.prices_out.empty()) {
    const auto p = prices_from_returns(sim.returns);
    std::string csv = "date,price\n";
    for (std::size_t i = 0; i < p.size(); ++i) csv += p.dates()[i] + "," + format_real(p.prices()[i]) + "\n";
    emit(a.prices_out, csv);
  }
  if (!oracle_csv.empty()) emit(a.oracle_out, oracle_csv);
  if (!panel_csv.empty()) emit(a.panel_out, panel_csv);
  if (sim.clamp_events > 0)
    std::cerr << "note: " << sim.clamp_events << " of " << sim.steps << " steps clamped at the vol floor\n";
  return 0;
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
  PanelInputs in;
  std::string gl, term, skew, out;
  std::vector<int> maturities;
  int bootstrap = 0;
  int max_lag = 0;
  std::uint64_t seed = 42;
  bool annualize = false;
};

/// Equal-weight average of per-ticker leverage functions.
LeverageFunction pooled_leverage(const PanelInputs& in, int max_lag, int bootstrap, std::uint64_t seed) {
  std::vector<LeverageFunction> per;
  for (const auto& path : in.prices) {
    const auto r = compute_returns(load_price_series(path, in.date_col, in.price_col),
                                   parse_return_kind(in.return_kind));
    per.push_back(estimate_from(r, max_lag, bootstrap, 0, seed));
  }
  if (per.size() == 1) return per.front();
  LeverageFunction avg = per.front();
  const auto n = static_cast<double>(per.size());
  std::fill(avg.values.begin(), avg.values.end(), 0.0);
  avg.sigma = 0.0;
  avg.n_obs = 0;
  if (avg.std_errors) std::fill(avg.std_errors->begin(), avg.std_errors->end(), 0.0);
  for (const auto& g : per) {
    for (std::size_t l = 0; l < avg.values.size(); ++l) {
      avg.values[l] += g.values[l] / n;
      if (avg.std_errors) (*avg.std_errors)[l] += (*g.std_errors)[l] * (*g.std_errors)[l];
    }
    avg.sigma += g.sigma / n;
    avg.n_obs += g.n_obs;
  }
  if (avg.std_errors)
    for (double& s : *avg.std_errors) s = std::sqrt(s) / n;
  return avg;
}

int run_compare(const CompareArgs& a) {
  if (a.gl.empty() && a.in.prices.empty())
    throw Error(ErrorCode::invalid_input, "missing prerequisite: leverage function (--gl or --prices)");
  const bool have_panels = !a.in.panels.empty();

  std::optional<PanelRun> run;
  if (have_panels) run = regress_panels(a.in);

  std::vector<int> maturities = sorted_unique(a.maturities);
  if (maturities.empty() && run)
    for (const auto& r : run->results) maturities.push_back(r.maturity);
  maturities = sorted_unique(maturities);
  if (maturities.empty()) throw Error(ErrorCode::invalid_input, "missing prerequisite: maturities (--maturities)");

  const int max_lag = a.max_lag > 0 ? a.max_lag : maturities.back();
  const auto gl = a.gl.empty() ? pooled_leverage(a.in, max_lag, a.bootstrap, a.seed) : load_leverage_function(a.gl);
  const auto term = term_for(maturities, a.term, gl.sigma);

  const auto moneyness = gamma_moneyness(gl, term);
  const auto strike = gamma_strike(gl, term);
  SkewCurve skew;
  if (a.skew.empty()) {
    skew = theoretical_skew(gl, term);
  } else {
    const auto file = load_skew_curve(a.skew);
    for (int m : maturities) {
      const auto it = std::find(file.maturities.begin(), file.maturities.end(), m);
      if (it == file.maturities.end())
        throw Error(ErrorCode::maturity_mismatch, "skew file " + a.skew + " has no maturity " + std::to_string(m));
      skew.maturities.push_back(m);
      skew.skews.push_back(file.skews[static_cast<std::size_t>(it - file.maturities.begin())]);
    }
  }
  const auto sticky = gamma_sticky_strike(skew, term);
  const auto local = gamma_local_vol(sticky);
  const auto delta = gamma_sticky_delta(maturities);

  std::optional<GammaCurve> empirical;
  if (run) {
    std::vector<RegressionResult> kept;
    for (const auto& r : run->results)
      if (std::binary_search(maturities.begin(), maturities.end(), r.maturity)) kept.push_back(r);
    const auto avg = tranche_average(group_by_maturity(kept));
    GammaCurve e{maturities, {}, std::vector<double>{}, GammaKind::empirical};
    for (int m : maturities) {
      const auto it = std::find(avg.maturities.begin(), avg.maturities.end(), m);
      if (it == avg.maturities.end())
        throw Error(ErrorCode::insufficient_observations,
                    "missing prerequisite: no empirical regression at maturity " + std::to_string(m));
      const auto idx = static_cast<std::size_t>(it - avg.maturities.begin());
      e.gammas.push_back(avg.gammas[idx]);
      e.std_errors->push_back((*avg.std_errors)[idx]);
    }
    empirical = std::move(e);
  }

  std::vector<const GammaCurve*> curves;
  if (empirical) curves.push_back(&*empirical);
  for (const auto* c : {&moneyness, &strike, &sticky, &delta, &local}) curves.push_back(c);

  std::string out;
  out += "# tool: implev " + std::string(kVersion) + "\n";
  std::string tickers;
  if (run) {
    for (const auto& t : run->tickers) tickers += (tickers.empty() ? "" : ";") + t;
  } else {
    for (const auto& p : a.in.prices)
      tickers += (tickers.empty() ? "" : ";") + std::filesystem::path(p).stem().string();
  }
  out += "# tickers: " + (tickers.empty() ? std::string("none") : tickers) + "\n";
  out += "# date_range: " + (run ? run->first_date + ".." + run->last_date : std::string("n/a")) + "\n";
  out += "# seed: " + std::to_string(a.seed) + "\n";
  out += "# leverage_source: " + (a.gl.empty() ? std::string("estimated") : a.gl) + "\n";
  out += "# term_source: " + (a.term.empty() ? std::string("flat_sigma") : a.term) + "\n";
  out += "# skew_source: " + (a.skew.empty() ? std::string("theoretical") : a.skew) + "\n";
  out += "# sigma_daily: " + format_real(gl.sigma) + "\n";
  if (a.annualize) out += "# sigma_annualized: " + format_real(annualize(gl.sigma)) + "\n";
  std::string kinds;
  for (const auto* c : curves) kinds += (kinds.empty() ? "" : ",") + std::string(kind_name(c->kind));
  out += "# kinds: " + kinds + "\n";
  out += std::string("# absent: ") + (empirical ? "none" : "empirical") + "\n";
  out += "maturity_days,kind,gamma,std_err\n";
  for (std::size_t i = 0; i < maturities.size(); ++i) {
    for (const auto* c : curves) {
      out += std::to_string(maturities[i]) + "," + std::string(kind_name(c->kind)) + "," + format_real(c->gammas[i]) +
             ",";
      if (c->std_errors) out += format_real((*c->std_errors)[i]);
      out += "\n";
    }
  }
  emit(a.out, out);
  return 0;
}

void add_panel_inputs(CLI::App* cmd, PanelInputs& in) {
  cmd->add_option("--panel", in.panels, "Vol panel CSV (date,maturity_days,atm_vol); repeat per ticker");
  cmd->add_option("--prices", in.prices, "Price CSV matching each --panel, in the same order");
  cmd->add_option("--ticker", in.tickers, "Ticker label per --panel (default: price file stem)");
  cmd->add_option("--date-column", in.date_col, "Date column of the price files");
  cmd->add_option("--price-column", in.price_col, "Price column (default: first non-date column)");
  cmd->add_option("--return-kind", in.return_kind, "log or simple");
  cmd->add_option("--clip", in.clip, "Winsorize vol changes at quantile Q and 1-Q");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"implev: leverage correlation and implied-volatility response"};
  app.set_version_flag("--version", std::string(implev::kVersion));
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate the leverage correlation function g_L");
  estimate->add_option("--prices", est.prices, "Price CSV");
  estimate->add_option("--returns", est.returns, "Return CSV (date_index,return) instead of prices");
  estimate->add_option("--date-column", est.date_col, "Date column");
  estimate->add_option("--price-column", est.price_col, "Price column (default: first non-date column)");
  estimate->add_option("--return-kind", est.return_kind, "log or simple");
  estimate->add_option("--from", est.from, "First date of the sample window");
  estimate->add_option("--to", est.to, "Last date of the sample window");
  estimate->add_option("--max-lag", est.max_lag, "Largest lag in trading days")->required();
  estimate->add_option("--bootstrap", est.bootstrap, "Block-bootstrap replicates (0: no error bars)");
  estimate->add_option("--block-len", est.block_len, "Bootstrap block length (default 2 x max lag)");
  estimate->add_option("--seed", est.seed, "Random seed");
  estimate->add_option("--out", est.out, "Output CSV (default stdout)");
  estimate->add_flag("--annualize", est.annualize, "Also print sigma in annual units");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Theoretical gamma(T) from a leverage function");
  predict->add_option("--gl", pred.gl, "Leverage function CSV from `estimate`")->required();
  predict->add_option("--maturities", pred.maturities, "Maturities in trading days")->delimiter(',')->required();
  predict->add_option("--term-structure", pred.term, "ATM vols CSV (maturity_days,atm_vol); default flat sigma");
  predict->add_option("--kind", pred.kind, "moneyness, strike or both");
  predict->add_option("--out", pred.out, "Output CSV (default stdout)");

  RegressArgs reg;
  auto* regress = app.add_subcommand("regress", "Empirical gamma(T) by regression on vol panels");
  add_panel_inputs(regress, reg.in);
  regress->add_option("--out", reg.out, "Per-ticker results CSV (default stdout)");
  regress->add_option("--tranche-out", reg.tranche_out, "Tranche-average gamma CSV");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo returns with a known leverage kernel");
  simulate_cmd->add_option("--config", sim.config, "Flat key=value config file");
  simulate_cmd->add_option("--kernel-form", sim.form, "exponential, powerlaw or table");
  simulate_cmd->add_option("--amplitude", sim.amplitude, "Kernel amplitude A");
  simulate_cmd->add_option("--tau", sim.tau, "Kernel timescale (days) or power-law exponent");
  simulate_cmd->add_option("--cutoff", sim.cutoff, "Kernel cutoff L in days");
  simulate_cmd->add_option("--kernel-values", sim.values, "Comma-separated k(1..L) for the table form");
  simulate_cmd->add_option("--sigma-bar", sim.sigma_bar, "Base daily vol");
  simulate_cmd->add_option("--n-days", sim.n_days, "Number of simulated days");
  simulate_cmd->add_option("--seed", sim.seed, "Random seed");
  simulate_cmd->add_option("--vol-floor-frac", sim.floor, "Vol floor as a fraction of sigma_bar");
  simulate_cmd->add_option("--out", sim.out, "Returns CSV (date_index,return)");
  simulate_cmd->add_option("--prices-out", sim.prices_out, "Price path CSV (date,price)");
  simulate_cmd->add_option("--oracle", sim.oracle, "Maturities for the forward-vol oracle")->delimiter(',');
  simulate_cmd->add_option("--oracle-out", sim.oracle_out, "Oracle CSV (default stdout)");
  simulate_cmd->add_flag("--overlapping", sim.overlapping, "Oracle windows with stride 1");
  simulate_cmd->add_option("--panel-out", sim.panel_out, "Synthetic vol panel with the theoretical gamma planted");
  simulate_cmd->add_option("--panel-maturities", sim.panel_maturities, "Panel maturities")->delimiter(',');
  simulate_cmd->add_option("--panel-noise", sim.panel_noise, "Noise sd of the synthetic panel");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "gamma(T) for every benchmark, long format for plotting");
  add_panel_inputs(compare, cmp.in);
  compare->add_option("--gl", cmp.gl, "Leverage function CSV (default: estimate from --prices)");
  compare->add_option("--maturities", cmp.maturities, "Maturities in trading days")->delimiter(',');
  compare->add_option("--max-lag", cmp.max_lag, "Max lag when estimating (default: largest maturity)");
  compare->add_option("--bootstrap", cmp.bootstrap, "Bootstrap replicates for g_L error bars");
  compare->add_option("--term-structure", cmp.term, "ATM vols CSV; default flat sigma");
  compare->add_option("--skew", cmp.skew, "Measured ATM skew CSV (maturity_days,skew); default theoretical");
  compare->add_option("--seed", cmp.seed, "Random seed");
  compare->add_option("--out", cmp.out, "Output CSV (default stdout)");
  compare->add_flag("--annualize", cmp.annualize, "Add annualized sigma to the metadata");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*estimate) return run_estimate(est);
    if (*predict) return run_predict(pred);
    if (*regress) return run_regress(reg);
    if (*simulate_cmd) return run_simulate(sim, *simulate_cmd);
    if (*compare) return run_compare(cmp);
  } catch (const implev::Error& e) {
    std::cerr << "error: " << implev::code_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
