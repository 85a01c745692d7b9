#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "fwdshape/backtest.hpp"
#include "fwdshape/error.hpp"
#include "fwdshape/market_data.hpp"

using namespace fwdshape;

namespace {

QuoteTable parse(const std::string& csv) {
  std::istringstream in(csv);
  return load_quotes(in);
}

std::string error_of(const std::string& csv) {
  try {
    parse(csv);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

SplitSpec year_quarters() {
  SplitSpec s;
  s.reference_parent = DeliveryPeriod::year(2013);
  return s;
}

}  // namespace

TEST(LoadQuotes, TableOneResolvesToDistinctWindows) {
  const auto t = parse(fixture::kTableOne);
  ASSERT_EQ(t.size(), 18u);
  const Day q = parse_date("2012-05-03");
  EXPECT_EQ(*t.price(q, DeliveryPeriod::day(parse_date("2012-05-04"))), 44.75);
  EXPECT_EQ(*t.price(q, DeliveryPeriod::quarter(2012, 3)), 43.20);
  EXPECT_EQ(*t.price(q, DeliveryPeriod::quarter(2013, 3)), 45.80);
  EXPECT_EQ(*t.price(q, DeliveryPeriod::year(2014)), 50.20);
  EXPECT_EQ(*t.price(q, DeliveryPeriod::weekend(parse_date("2012-05-05"))), 36.60);
  EXPECT_EQ(*t.price(q, DeliveryPeriod::iso_week(parse_date("2012-05-07"))), 43.00);
  EXPECT_FALSE(t.price(q, DeliveryPeriod::year(2016)).has_value());
}

TEST(LoadQuotes, EmptyAfterHeader) { EXPECT_TRUE(parse("quote_date,contract,price\n").empty()); }

TEST(LoadQuotes, MalformedRowsNameTheLine) {
  EXPECT_NE(error_of("quote_date,contract,price\n2012-05-03,D+1,44\n2012-05-03,D+2,abc\n").find("line 3"),
            std::string::npos);
  EXPECT_NE(error_of("quote_date,contract,price\n2012-05-03,D+1\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("date,contract,price\n").find("header"), std::string::npos);
  EXPECT_NE(error_of("quote_date,contract,price\n2012-05-03,Q9-2012,1\n").find("line 2"), std::string::npos);
}

TEST(LoadQuotes, DuplicatesRejected) {
  // Q+1 and Q3-2012 are the same window on this date.
  EXPECT_NE(error_of("quote_date,contract,price\n2012-05-03,Q+1,1\n2012-05-03,Q3-2012,2\n").find("duplicate"),
            std::string::npos);
}

TEST(LoadQuotes, StartedDeliveryRejected) {
  EXPECT_FALSE(error_of("quote_date,contract,price\n2012-05-03,M-2012-05,1\n").empty());
}

TEST(LoadQuotes, MissingFileNamesPath) {
  try {
    load_quotes_file("/nonexistent/quotes.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/quotes.csv"), std::string::npos);
  }
}

TEST(LoadQuotes, SaveLoadIdentity) {
  const auto t = parse(fixture::kTableOne);
  std::ostringstream out;
  save_quotes(t, out);
  EXPECT_EQ(parse(out.str()), t);
  SyntheticMarketConfig c;
  c.dates = 40;
  const auto m = synthesize_market(c);
  std::ostringstream out2;
  save_quotes(m.table, out2);
  EXPECT_EQ(parse(out2.str()), m.table);
}

TEST(DateRanges, Parse) {
  const auto r = parse_date_range("2012-01-01:2012-12-31");
  EXPECT_TRUE(r.contains(parse_date("2012-06-01")));
  EXPECT_FALSE(r.contains(parse_date("2013-01-01")));
  EXPECT_TRUE(parse_date_range(":").contains(parse_date("1999-01-01")));
  EXPECT_THROW(parse_date_range("2012-01-01"), Error);
  EXPECT_THROW(parse_date_range("2013-01-01:2012-01-01"), Error);
}

TEST(Dataset, OneRowPerCompleteDate) {
  std::string csv = "quote_date,contract,price\n";
  for (int d = 1; d <= 9; ++d) {
    const std::string date = "2012-02-0" + std::to_string(d);
    csv += date + ",CAL-2013," + std::to_string(50 + d) + "\n";
    for (int q = 1; q <= 4; ++q) {
      if (d == 5 && q == 4) continue;
      csv += date + ",Q" + std::to_string(q) + "-2013," + std::to_string(48 + d + q) + "\n";
    }
  }
  const auto a = build_regression_dataset(parse(csv), year_quarters());
  EXPECT_EQ(a.data.cases(), 8);
  EXPECT_EQ(a.completeness.candidate_rows, 9u);
  EXPECT_EQ(a.completeness.dropped_rows, 1u);
  EXPECT_EQ(a.completeness.missing_per_child[3], 1u);
  EXPECT_EQ(a.data.child_labels, (std::vector<std::string>{"Q1", "Q2", "Q3", "Q4"}));
  EXPECT_EQ(a.data.case_ids.front(), "2012-02-01|CAL-2013");
}

TEST(Dataset, NoJointObservations) {
  try {
    build_regression_dataset(parse("quote_date,contract,price\n2012-02-01,CAL-2013,50\n"), year_quarters());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no joint observations"), std::string::npos);
  }
}

TEST(Dataset, SyntheticRoundTripIsExact) {
  SyntheticMarketConfig c;
  c.dates = 120;
  c.noise_multiplier = 0.0;
  const auto m = synthesize_market(c);
  const auto a = build_regression_dataset(m.table, m.spec);
  EXPECT_EQ(a.data.cases(), 120);
  for (Eigen::Index i = 0; i < a.data.cases(); ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) {
      EXPECT_NEAR(a.data.y(i, k), m.gamma(2 * k) * a.data.x(i) + m.gamma(2 * k + 1), 1e-12);
    }
  }
}

TEST(SplitSpec, Families) {
  SplitSpec s;
  s.parent_family = Granularity::Quarter;
  s.child = Granularity::Month;
  s.reference_parent = DeliveryPeriod::quarter(2014, 2);
  EXPECT_EQ(s.reference_split().size(), 3u);
  EXPECT_THROW(s.split_for(DeliveryPeriod::year(2014)), Error);
  s.weight_mode = WeightMode::Equal;
  EXPECT_DOUBLE_EQ(s.reference_split().weights[0], 1.0 / 3.0);
}
