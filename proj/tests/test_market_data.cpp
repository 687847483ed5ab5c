#include "implev/market_data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

namespace implev {
namespace {

using testing::TempDir;
using testing::write_text;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected implev::Error";
  return ErrorCode::invalid_input;
}

TEST(PriceSeriesTest, LoadsThreeRowsSortedByDate) {
  TempDir dir("prices");
  write_text(dir / "ABC.csv", "date,close\n2024-01-03,99.99\n2024-01-01,100\n2024-01-02,101\n");
  const auto p = load_price_series(dir / "ABC.csv", "date", "close");
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.ticker(), "ABC");
  EXPECT_EQ(p.dates().front(), "2024-01-01");
  EXPECT_DOUBLE_EQ(p.prices()[0], 100.0);
  EXPECT_DOUBLE_EQ(p.prices()[1], 101.0);
  EXPECT_DOUBLE_EQ(p.prices()[2], 99.99);
}

TEST(PriceSeriesTest, DefaultPriceColumnIsFirstNonDateColumn) {
  TempDir dir("prices");
  write_text(dir / "X.csv", "date,px,volume\n2024-01-01,10,5\n2024-01-02,11,6\n");
  const auto p = load_price_series(dir / "X.csv");
  EXPECT_DOUBLE_EQ(p.prices()[1], 11.0);
}

TEST(PriceSeriesTest, RejectsDuplicateDate) {
  TempDir dir("prices");
  write_text(dir / "d.csv", "date,close\n2024-01-01,100\n2024-01-02,101\n2024-01-01,102\n");
  EXPECT_EQ(code_of([&] { load_price_series(dir / "d.csv", "date", "close"); }), ErrorCode::duplicate_date);
}

TEST(PriceSeriesTest, RejectsNonPositivePrice) {
  TempDir dir("prices");
  write_text(dir / "z.csv", "date,close\n2024-01-01,100\n2024-01-02,0\n");
  EXPECT_EQ(code_of([&] { load_price_series(dir / "z.csv", "date", "close"); }), ErrorCode::non_positive_price);
}

TEST(PriceSeriesTest, ParseErrorNamesLineAndColumn) {
  TempDir dir("prices");
  write_text(dir / "p.csv", "date,close\n2024-01-01,100\n2024-01-02,abc\n");
  try {
    load_price_series(dir / "p.csv", "date", "close");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("close"), std::string::npos);
  }
}

TEST(PriceSeriesTest, MissingFileAndMissingColumn) {
  TempDir dir("prices");
  EXPECT_EQ(code_of([&] { load_price_series(dir / "nope.csv"); }), ErrorCode::io_error);
  write_text(dir / "c.csv", "day,close\n1,2\n2,3\n");
  EXPECT_EQ(code_of([&] { load_price_series(dir / "c.csv"); }), ErrorCode::parse_error);
}

TEST(ReturnsTest, WorkedExamples) {
  const PriceSeries flat("T", {"a", "b"}, {100.0, 100.0});
  EXPECT_EQ(compute_returns(flat).values(), std::vector<double>{0.0});

  const PriceSeries up("T", {"a", "b"}, {100.0, 110.0});
  EXPECT_NEAR(compute_returns(up, ReturnKind::log).values()[0], 0.0953101798, 1e-10);
  EXPECT_NEAR(compute_returns(up, ReturnKind::simple).values()[0], 0.1, 1e-15);
  EXPECT_EQ(compute_returns(up).dates().front(), "b");
}

TEST(ReturnsTest, TooShort) {
  EXPECT_EQ(code_of([] { PriceSeries("T", {"a"}, {1.0}); }), ErrorCode::series_too_short);
}

TEST(ReturnsTest, LogReturnsReconstructPrices) {
  std::mt19937_64 rng(7);
  std::lognormal_distribution<double> step(0.0, 0.02);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> prices{50.0 + trial};
    std::vector<std::string> dates{"d000"};
    for (int i = 1; i < 500; ++i) {
      prices.push_back(prices.back() * step(rng));
      char buf[16];
      std::snprintf(buf, sizeof buf, "d%03d", i);
      dates.emplace_back(buf);
    }
    const PriceSeries p("T", dates, prices);
    const auto r = compute_returns(p);
    double log_p = std::log(prices.front());
    for (std::size_t i = 0; i < r.size(); ++i) {
      log_p += r.values()[i];
      EXPECT_NEAR(std::exp(log_p) / prices[i + 1] - 1.0, 0.0, 1e-12);
    }
  }
}

TEST(VolPanelTest, FullGrid) {
  TempDir dir("panel");
  write_text(dir / "p.csv",
             "date,maturity_days,atm_vol\n2024-01-01,20,0.011\n2024-01-01,5,0.01\n"
             "2024-01-02,5,0.012\n2024-01-02,20,0.013\n");
  const auto panel = load_vol_panel(dir / "p.csv");
  EXPECT_EQ(panel.dates().size(), 2u);
  EXPECT_EQ(panel.maturities(), (std::vector<int>{5, 20}));
  EXPECT_EQ(panel.missing_count(), 0u);
  EXPECT_DOUBLE_EQ(*panel.vol(0, 1), 0.011);
}

TEST(VolPanelTest, MissingCellIsMarkedNotZeroFilled) {
  TempDir dir("panel");
  write_text(dir / "p.csv",
             "date,maturity_days,atm_vol\n2024-01-01,5,0.01\n2024-01-01,20,0.011\n2024-01-02,5,0.012\n");
  const auto panel = load_vol_panel(dir / "p.csv");
  EXPECT_EQ(panel.missing_count(), 1u);
  EXPECT_FALSE(panel.vol(1, 1).has_value());
}

TEST(VolPanelTest, RejectsNegativeVolAndConflicts) {
  TempDir dir("panel");
  write_text(dir / "n.csv", "date,maturity_days,atm_vol\n2024-01-01,5,-0.1\n");
  EXPECT_EQ(code_of([&] { load_vol_panel(dir / "n.csv"); }), ErrorCode::non_positive_vol);

  write_text(dir / "c.csv", "date,maturity_days,atm_vol\n2024-01-01,5,0.1\n2024-01-01,5,0.2\n");
  EXPECT_EQ(code_of([&] { load_vol_panel(dir / "c.csv"); }), ErrorCode::inconsistent_maturity_set);

  write_text(dir / "same.csv", "date,maturity_days,atm_vol\n2024-01-01,5,0.1\n2024-01-01,5,0.1\n");
  EXPECT_NO_THROW(load_vol_panel(dir / "same.csv"));

  write_text(dir / "m.csv", "date,maturity_days,atm_vol\n2024-01-01,0,0.1\n");
  EXPECT_EQ(code_of([&] { load_vol_panel(dir / "m.csv"); }), ErrorCode::parse_error);
}

TEST(VolPanelTest, ReserializationIsBitIdentical) {
  TempDir dir("panel");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.005, 0.03);
  std::string csv = "date,maturity_days,atm_vol\n";
  for (int d = 0; d < 40; ++d)
    for (int m : {5, 20, 60}) {
      if ((d * m) % 7 == 3) continue;  // leave holes
      csv += "2024-02-" + std::to_string(10 + d) + "," + std::to_string(m) + "," + detail::format_real(u(rng)) + "\n";
    }
  write_text(dir / "a.csv", csv);
  const auto first = write_vol_panel(load_vol_panel(dir / "a.csv"));
  write_text(dir / "b.csv", first);
  EXPECT_EQ(write_vol_panel(load_vol_panel(dir / "b.csv")), first);
  EXPECT_EQ(load_vol_panel(dir / "a.csv", "T"), load_vol_panel(dir / "b.csv", "T"));
}

ImpliedVolPanel small_panel(std::vector<std::string> dates) {
  std::vector<double> vols;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    vols.push_back(0.01 + 0.001 * static_cast<double>(i));
    vols.push_back(i % 2 ? std::nan("") : 0.02);
  }
  return ImpliedVolPanel("T", std::move(dates), {5, 20}, std::move(vols));
}

TEST(AlignTest, IdenticalDisjointAndSubset) {
  const ReturnSeries r("T", {"a", "b", "c", "d"}, {0.01, -0.02, 0.0, 0.03});

  const auto same = align(small_panel({"a", "b", "c", "d"}), r);
  EXPECT_EQ(same.dates.size(), 4u);
  EXPECT_EQ(same.returns, r.values());
  EXPECT_EQ(same.observations, (std::vector<std::size_t>{4, 2}));
  EXPECT_TRUE(same.sparse[0]);

  EXPECT_EQ(code_of([&] { align(small_panel({"x", "y"}), r); }), ErrorCode::empty_intersection);

  const auto sub = align(small_panel({"b", "d"}), r);
  EXPECT_EQ(sub.dates, (std::vector<std::string>{"b", "d"}));
  EXPECT_EQ(sub.returns, (std::vector<double>{-0.02, 0.03}));
}

TEST(AlignTest, KeepsDatesWithoutAnyVolAsGaps) {
  const ReturnSeries r("T", {"a", "b", "c"}, {0.01, 0.02, 0.03});
  const ImpliedVolPanel p("T", {"a", "b", "c"}, {5}, {0.01, std::nan(""), 0.02});
  const auto a = align(p, r);
  EXPECT_EQ(a.dates, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(std::isnan(a.vol(1, 0)));
  EXPECT_EQ(a.observations[0], 2u);
}

TEST(AlignTest, Idempotent) {
  const auto r = testing::gaussian_returns(80, 0.01, 11, "T");
  std::vector<std::string> dates;
  std::vector<double> vols;
  for (std::size_t i = 0; i < 100; i += 1) {
    dates.push_back(day_token(i));
    vols.push_back(i % 5 == 0 ? std::nan("") : 0.01 + 1e-4 * static_cast<double>(i));
    vols.push_back(0.02);
  }
  const ImpliedVolPanel p("T", dates, {5, 20}, vols);
  const auto once = align(p, r);
  const auto twice = align(once.as_panel(), r);
  EXPECT_TRUE(once == twice);
  EXPECT_FALSE(once.sparse[1]);
}

TEST(UnitsTest, AnnualizeIsDisplayScaling) { EXPECT_NEAR(annualize(0.01), 0.158745079, 1e-9); }

}  // namespace
}  // namespace implev
