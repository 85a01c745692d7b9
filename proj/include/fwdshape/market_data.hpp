#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fwdshape/constraints.hpp"
#include "fwdshape/estimator.hpp"
#include "fwdshape/period.hpp"

namespace fwdshape {

struct Quote {
  Day quote_date;
  DeliveryPeriod period;  // always absolute once loaded
  double price = 0.0;
};

// Immutable after construction; one price per (quote date, delivery period).
class QuoteTable {
 public:
  QuoteTable() = default;
  // Throws on duplicates, non-finite prices or deliveries starting before the quote date.
  explicit QuoteTable(std::vector<Quote> quotes);

  const std::vector<Quote>& quotes() const { return quotes_; }
  std::size_t size() const { return quotes_.size(); }
  bool empty() const { return quotes_.empty(); }

  std::optional<double> price(Day quote_date, const DeliveryPeriod& period) const;
  std::vector<Day> quote_dates() const;

  friend bool operator==(const QuoteTable& a, const QuoteTable& b);

 private:
  std::vector<Quote> quotes_;  // sorted by (date, period)
  std::map<std::pair<Day, DeliveryPeriod>, double> index_;
};

// CSV with header `quote_date,contract,price`. Relative codes are resolved
// against each row's quote date.
QuoteTable load_quotes(std::istream& in);
QuoteTable load_quotes_file(const std::string& path);
void save_quotes(const QuoteTable& table, std::ostream& out);
void save_quotes_file(const QuoteTable& table, const std::string& path);

enum class WeightMode { Hours, Equal, Explicit };

// Declarative description of a granularity split that applies to every
// parent of one family (e.g. each calendar year into its four quarters).
struct SplitSpec {
  Granularity parent_family = Granularity::Year;
  Granularity child = Granularity::Quarter;
  std::optional<DeliveryPeriod> reference_parent;  // source of hour weights
  WeightMode weight_mode = WeightMode::Hours;
  std::vector<double> explicit_weights;
  CalendarConfig calendar;

  GranularitySplit split_for(const DeliveryPeriod& parent) const;
  // Split used for the constraint system.
  GranularitySplit reference_split() const;
  ConstraintSystem constraints() const { return build_constraints(reference_split()); }
};

struct DateRange {
  std::optional<Day> from;
  std::optional<Day> to;
  bool contains(Day d) const { return (!from || *from <= d) && (!to || d <= *to); }
};

// "2012-01-01:2013-12-31"; either side may be empty.
DateRange parse_date_range(std::string_view text);

struct CompletenessReport {
  std::size_t candidate_rows = 0;
  std::size_t complete_rows = 0;
  std::size_t dropped_rows = 0;
  std::vector<std::size_t> missing_per_child;
  std::vector<std::string> child_labels;
};

struct AssembledDataset {
  Dataset data;
  std::vector<Day> quote_dates;            // per case
  std::vector<DeliveryPeriod> parents;     // per case
  CompletenessReport completeness;
};

// One case per (quote date, quoted parent) whose K children are all quoted on
// that date; incomplete rows are dropped and counted.
AssembledDataset build_regression_dataset(const QuoteTable& table, const SplitSpec& spec,
                                          const DateRange& range = {});

}  // namespace fwdshape
