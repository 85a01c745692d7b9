#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "fwdshape/error.hpp"
#include "fwdshape/shaper.hpp"

using namespace fwdshape;

namespace {

ShapingLevel table_level() {
  const auto cal = DeliveryPeriod::year(2014);
  ShapingLevel level;
  level.split = with_equal_weights(build_split(cal, children_of(cal, Granularity::Quarter)));
  level.coefficients = coefficients_of(fixture::robust_table());
  level.gap_tolerance = 2.5e-3;
  return level;
}

// Random arbitrage-free coefficients for the given weights.
std::vector<AffineCoefficient> random_free(std::mt19937_64& rng, const std::vector<double>& h) {
  std::uniform_real_distribution<double> a(0.7, 1.3), b(-3.0, 3.0);
  std::vector<AffineCoefficient> c(h.size());
  double sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    c[k] = {a(rng), b(rng)};
    sa += h[k] * c[k].slope;
    sb += h[k] * c[k].intercept;
  }
  for (auto& x : c) {
    x.slope /= sa;
    x.intercept -= sb;
  }
  return c;
}

ShapingCascade four_levels() {
  ShapingCascade c;
  c.levels = {{"YtQ", Granularity::Quarter, WeightMode::Hours, {}, {}},
              {"QtM", Granularity::Month, WeightMode::Hours, {}, {}},
              {"MtD", Granularity::DayType, WeightMode::Hours, {}, {}},
              {"DtH", Granularity::Hour, WeightMode::Hours, {}, {}}};
  return c;
}

}  // namespace

TEST(ApplyLevel, WorkedQuarterExample) {
  const auto prices = apply_level(50.20, table_level());
  ASSERT_EQ(prices.size(), 4u);
  EXPECT_NEAR(prices[0], 54.67, 5e-3);
  EXPECT_NEAR(prices[1], 45.33, 5e-3);
  EXPECT_NEAR(prices[2], 47.16, 5e-3);
  EXPECT_NEAR(prices[3], 53.63, 5e-3);
}

TEST(ApplyLevel, RefusesArbitrage) {
  auto level = table_level();
  level.coefficients[0].intercept += 1.0;
  try {
    apply_level(50.0, level);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("arbitrage"), std::string::npos);
  }
  EXPECT_NO_THROW(apply_level(50.0, level, true));
}

TEST(ApplyLevel, ConsistencyResidual) {
  auto level = table_level();
  level.gap_tolerance = 1e-6;
  level.coefficients = coefficients_of(fixture::robust_table());
  const std::vector<double> prices{54.6702, 45.331, 47.1642, 53.6346};
  EXPECT_NEAR(verify_consistency(50.20, prices, level.split.weights), 0.0, 1e-12);
}

TEST(StressShift, KeepsArbitrageFreedom) {
  std::mt19937_64 rng(2);
  auto level = table_level();
  level.split = build_split(level.split.parent, level.split.children);
  level.coefficients = random_free(rng, level.split.weights);
  level.gap_tolerance = 1e-12;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto shocked = stress_shift(level, k, 2.5);
    EXPECT_NEAR(shocked.intercept_gap(), 0.0, 1e-12);
    EXPECT_NEAR(shocked.coefficients[k].intercept - level.coefficients[k].intercept, 2.5, 1e-12);
  }
  EXPECT_THROW(stress_shift(level, 4, 1.0), Error);
}

TEST(Cascade, QuarterThroughMonthlyLevels) {
  std::mt19937_64 rng(6);
  auto c = four_levels();
  c.levels.resize(2);
  const auto cal = DeliveryPeriod::year(2014);
  const auto year_split = build_split(cal, children_of(cal, Granularity::Quarter));
  c.levels[0].coefficients["*"] = random_free(rng, year_split.weights);
  for (int q = 1; q <= 4; ++q) {
    const auto qp = DeliveryPeriod::quarter(2014, q);
    c.levels[1].coefficients[qp.lookup_keys().front()] =
        random_free(rng, build_split(qp, children_of(qp, Granularity::Month)).weights);
  }
  const double p = 48.0;
  const double q2 = cascade(p, cal, c, DeliveryPeriod::quarter(2014, 2));
  EXPECT_NEAR(q2, c.levels[0].coefficients["*"][1].slope * p + c.levels[0].coefficients["*"][1].intercept, 1e-12);
  const double may = cascade(p, cal, c, DeliveryPeriod::month(2014, 5));
  const auto& m = c.levels[1].coefficients[DeliveryPeriod::quarter(2014, 2).lookup_keys().front()][1];
  EXPECT_NEAR(may, m.slope * q2 + m.intercept, 1e-12);
}

TEST(Cascade, NoPath) {
  auto c = four_levels();
  c.levels.resize(1);
  c.levels[0].coefficients["*"] = coefficients_of(fixture::robust_table());
  c.gap_tolerance = 1e-2;
  const auto cal = DeliveryPeriod::year(2014);
  EXPECT_THROW(cascade(50.0, cal, c, DeliveryPeriod::quarter(2015, 1)), Error);
  // Straddles Q1 and Q2.
  auto straddle = DeliveryPeriod::month(2014, 3);
  straddle.last = parse_date("2014-04-10");
  EXPECT_THROW(cascade(50.0, cal, c, straddle), Error);
}

TEST(Cascade, IdentityGivesFlatCurve) {
  auto c = four_levels();
  for (auto& l : c.levels) l.coefficients["*"];  // filled below per size
  const auto cal = DeliveryPeriod::year(2014);
  c.levels[0].coefficients["*"] = std::vector<AffineCoefficient>(4);
  c.levels[1].coefficients["*"] = std::vector<AffineCoefficient>(3);
  c.levels[2].coefficients["*"] = std::vector<AffineCoefficient>(3);
  c.levels[3].coefficients["*"] = std::vector<AffineCoefficient>(24);
  const auto curve = shape_curve(42.5, cal, c, Granularity::Hour);
  ASSERT_EQ(curve.size(), 8760u);
  for (const auto& p : curve) EXPECT_NEAR(p.price, 42.5, 1e-12);
}

TEST(Cascade, HourlyMeanMatchesCalendar) {
  std::mt19937_64 rng(77);
  const auto cal = DeliveryPeriod::year(2015);
  auto c = four_levels();
  c.levels[0].coefficients["*"] = random_free(rng, build_split(cal, children_of(cal, Granularity::Quarter)).weights);
  for (const auto& q : children_of(cal, Granularity::Quarter)) {
    c.levels[1].coefficients[q.lookup_keys().front()] =
        random_free(rng, build_split(q, children_of(q, Granularity::Month)).weights);
    for (const auto& m : children_of(q, Granularity::Month)) {
      c.levels[2].coefficients[m.lookup_keys().front()] =
          random_free(rng, build_split(m, children_of(m, Granularity::DayType)).weights);
    }
  }
  for (const auto* tag : {"WD", "SAT", "SUN"}) c.levels[3].coefficients[tag] = random_free(rng, std::vector<double>(24, 1.0 / 24));
  c.gap_tolerance = 1e-9;
  const double p = 51.3;
  const auto hours = shape_curve(p, cal, c, Granularity::Hour);
  double s = 0.0;
  for (const auto& h : hours) s += h.price;
  EXPECT_NEAR(s / static_cast<double>(hours.size()), p, 1e-9 * p);
  const auto months = shape_curve(p, cal, c, Granularity::Month);
  ASSERT_EQ(months.size(), 12u);
  double sm = 0.0;
  for (const auto& m : months) sm += m.price * static_cast<double>(delivery_hours(m.period));
  EXPECT_NEAR(sm / 8760.0, p, 1e-9 * p);
}

TEST(Curve, CsvRoundTrip) {
  std::vector<CurvePoint> curve{{DeliveryPeriod::quarter(2014, 1), 54.5},
                                {DeliveryPeriod::hour(parse_date("2014-01-01"), 23), 0.1}};
  std::ostringstream out;
  write_curve_csv(curve, out);
  EXPECT_EQ(out.str(),
            "period_start,period_end,price\n2014-01-01T00:00,2014-04-01T00:00,54.5\n"
            "2014-01-01T23:00,2014-01-02T00:00,0.1\n");
  std::istringstream in(out.str());
  const auto rows = read_curve_csv(in);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].second, 0.1);
}

TEST(Recalibrate, FixedChildHeldAndGapClosed) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(30, 70);
  std::normal_distribution<double> z;
  const auto g = fixture::robust_table();
  Dataset d;
  d.x.resize(200);
  d.y.resize(200, 4);
  for (Eigen::Index i = 0; i < 200; ++i) {
    d.x(i) = ux(rng);
    for (Eigen::Index k = 0; k < 4; ++k) d.y(i, k) = g(2 * k) * d.x(i) + g(2 * k + 1) + z(rng);
  }
  const auto sys = build_constraints(std::vector<double>(4, 0.25));
  const auto fit = recalibrate_with_traded(d, sys, FitConfig{}, {{0, TradedChild::fixed(1.15, -2.0)}});
  EXPECT_EQ(fit.slope(0), 1.15);
  EXPECT_EQ(fit.intercept(0), -2.0);
  EXPECT_LE(max_abs_gap(sys, fit.gamma), 1e-6);

  const auto market = recalibrate_with_traded(d, sys, FitConfig{}, {{0, TradedChild::market(57.0, 50.0)}});
  EXPECT_NEAR(market.slope(0) * 50.0 + market.intercept(0), 57.0, 1e-12);
  EXPECT_LE(max_abs_gap(sys, market.gamma), 1e-6);
}

TEST(Recalibrate, InfeasibleFixing) {
  Dataset d;
  d.x.resize(4);
  d.x << 1, 2, 3, 4;
  d.y = d.x.replicate(1, 2);
  const auto sys = build_constraints(std::vector<double>{0.5, 0.5});
  EXPECT_THROW(recalibrate_with_traded(d, sys, FitConfig{},
                                       {{0, TradedChild::fixed(1.0, 0.0)}, {1, TradedChild::fixed(2.0, 0.0)}}),
               Error);
}
