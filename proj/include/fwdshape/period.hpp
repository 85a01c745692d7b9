#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

namespace fwdshape {

using Day = std::chrono::sys_days;

Day parse_date(std::string_view iso);
std::string format_date(Day day);

enum class Granularity { Year, Quarter, Month, Week, Weekend, Day, DayType, Hour };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view name);

enum class DayFilter { All, Weekday, Saturday, Sunday };

bool matches(DayFilter filter, Day day);

struct CalendarConfig {
  // Count the 23h / 25h days of the EU daylight-saving switch (last Sunday
  // of March / October, local hour 02:00).
  bool dst_aware = false;
};

// A set of delivery hours: every hour in [hour_first, hour_last] of every
// day in [first, last] that passes the day filter. Covers calendar
// contracts, day-type buckets (all Saturdays of a month) and single hours.
struct DeliveryPeriod {
  Granularity granularity = Granularity::Day;
  Day first{};
  Day last{};
  DayFilter days = DayFilter::All;
  int hour_first = 0;
  int hour_last = 23;

  static DeliveryPeriod year(int y);
  static DeliveryPeriod quarter(int y, int q);
  static DeliveryPeriod month(int y, unsigned m);
  static DeliveryPeriod iso_week(Day monday);
  static DeliveryPeriod weekend(Day saturday);
  static DeliveryPeriod day(Day d);
  static DeliveryPeriod day_type(int y, unsigned m, DayFilter filter);
  static DeliveryPeriod hour(Day d, int h);

  // Canonical absolute code, e.g. CAL-2014, Q3-2012, M-2012-07, D-2012-05-04.
  std::string code() const;
  // Position label within a parent: Q1, M07, SAT, H03, D04, ...
  std::string label() const;
  // Coefficient lookup keys from most to least specific, ending in "*".
  std::vector<std::string> lookup_keys() const;

  bool contains(const DeliveryPeriod& other) const;
  bool contains_cell(Day d, int h) const;
  std::int64_t day_count() const;

  friend bool operator==(const DeliveryPeriod&, const DeliveryPeriod&) = default;
  friend auto operator<=>(const DeliveryPeriod& a, const DeliveryPeriod& b) {
    return std::tie(a.first, a.last, a.days, a.hour_first, a.hour_last, a.granularity) <=>
           std::tie(b.first, b.last, b.days, b.hour_first, b.hour_last, b.granularity);
  }
};

// Parses any absolute code produced by DeliveryPeriod::code().
DeliveryPeriod parse_period(std::string_view code);

// Number of delivery hours; throws "invalid delivery window" if last < first.
std::int64_t delivery_hours(const DeliveryPeriod& period, const CalendarConfig& calendar = {});

// Enumerates the children of a period at a finer granularity, in delivery order.
std::vector<DeliveryPeriod> children_of(const DeliveryPeriod& parent, Granularity child);

enum class RelativeKind { Day, Weekend, Week, Month, Quarter, Year };

struct RelativeCode {
  RelativeKind kind;
  int offset;  // >= 1
  friend bool operator==(const RelativeCode&, const RelativeCode&) = default;
};

using ContractCode = std::variant<DeliveryPeriod, RelativeCode>;

// Accepts relative codes (D+1, WE+2, W+1, M+3, Q+1, Y+2) and absolute codes.
ContractCode parse_contract(std::string_view text);

// Absolute window of a relative code as seen on quote_date. M/Q/Y skip the
// period containing quote_date; WE+n starts on the n-th Saturday after it;
// W+n is the n-th Monday-starting week after the current one.
DeliveryPeriod resolve_relative(const RelativeCode& code, Day quote_date);
DeliveryPeriod resolve(const ContractCode& code, Day quote_date);

}  // namespace fwdshape
