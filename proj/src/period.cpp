#include "fwdshape/period.hpp"

#include <charconv>
#include <cstdio>
#include <set>

#include "fwdshape/error.hpp"

namespace fwdshape {

namespace chr = std::chrono;

namespace {

int to_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    fail(ErrorKind::Data, "invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_dash(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find('-', start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

Day make_day(int y, unsigned m, unsigned d) {
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) fail(ErrorKind::Data, "invalid calendar date");
  return Day{ymd};
}

Day month_end(int y, unsigned m) {
  return Day{chr::year_month_day_last{chr::year{y}, chr::month_day_last{chr::month{m}}}};
}

chr::year_month_day ymd_of(Day d) { return chr::year_month_day{d}; }

std::string two_digits(unsigned v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u", v);
  return buf;
}

std::string_view filter_name(DayFilter f) {
  switch (f) {
    case DayFilter::Weekday: return "WD";
    case DayFilter::Saturday: return "SAT";
    case DayFilter::Sunday: return "SUN";
    case DayFilter::All: break;
  }
  return "ALL";
}

DayFilter day_class(Day d) {
  const chr::weekday wd{d};
  if (wd == chr::Saturday) return DayFilter::Saturday;
  if (wd == chr::Sunday) return DayFilter::Sunday;
  return DayFilter::Weekday;
}

Day last_sunday(int y, unsigned m) {
  return Day{chr::year_month_weekday_last{chr::year{y}, chr::month{m}, chr::weekday_last{chr::Sunday}}};
}

// Hours in [h0, h1] on day d, with the optional daylight-saving adjustment.
int hours_on(Day d, int h0, int h1, bool dst_aware) {
  int hours = h1 - h0 + 1;
  if (dst_aware && h0 <= 2 && 2 <= h1) {
    const int y = static_cast<int>(ymd_of(d).year());
    if (d == last_sunday(y, 3)) --hours;
    if (d == last_sunday(y, 10)) ++hours;
  }
  return hours;
}

Day iso_week_monday(int iso_year, int week) {
  // Week 1 contains January 4th.
  const Day jan4 = make_day(iso_year, 1, 4);
  const Day monday1 = jan4 - (chr::weekday{jan4} - chr::Monday);
  return monday1 + chr::days{7 * (week - 1)};
}

std::pair<int, int> iso_week_of(Day monday) {
  const Day thursday = monday + chr::days{3};
  const int y = static_cast<int>(ymd_of(thursday).year());
  const Day monday1 = iso_week_monday(y, 1);
  return {y, static_cast<int>((monday - monday1).count() / 7) + 1};
}

}  // namespace

Day parse_date(std::string_view iso) {
  const auto parts = split_dash(iso);
  if (parts.size() != 3 || parts[0].size() != 4 || parts[1].size() != 2 || parts[2].size() != 2) {
    fail(ErrorKind::Data, "invalid ISO date '" + std::string(iso) + "'");
  }
  const chr::year_month_day ymd{chr::year{to_int(parts[0], "year")},
                                chr::month{static_cast<unsigned>(to_int(parts[1], "month"))},
                                chr::day{static_cast<unsigned>(to_int(parts[2], "day"))}};
  if (!ymd.ok()) fail(ErrorKind::Data, "invalid ISO date '" + std::string(iso) + "'");
  return Day{ymd};
}

std::string format_date(Day day) {
  const auto ymd = ymd_of(day);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::Year: return "year";
    case Granularity::Quarter: return "quarter";
    case Granularity::Month: return "month";
    case Granularity::Week: return "week";
    case Granularity::Weekend: return "weekend";
    case Granularity::Day: return "day";
    case Granularity::DayType: return "daytype";
    case Granularity::Hour: return "hour";
  }
  return "?";
}

Granularity parse_granularity(std::string_view name) {
  for (auto g : {Granularity::Year, Granularity::Quarter, Granularity::Month, Granularity::Week,
                 Granularity::Weekend, Granularity::Day, Granularity::DayType, Granularity::Hour}) {
    if (to_string(g) == name) return g;
  }
  fail(ErrorKind::InvalidArgument, "unknown granularity '" + std::string(name) + "'");
}

bool matches(DayFilter filter, Day day) {
  return filter == DayFilter::All || filter == day_class(day);
}

DeliveryPeriod DeliveryPeriod::year(int y) {
  return {Granularity::Year, make_day(y, 1, 1), make_day(y, 12, 31)};
}

DeliveryPeriod DeliveryPeriod::quarter(int y, int q) {
  if (q < 1 || q > 4) fail(ErrorKind::Data, "quarter must be 1..4");
  const unsigned m0 = static_cast<unsigned>(3 * (q - 1) + 1);
  return {Granularity::Quarter, make_day(y, m0, 1), month_end(y, m0 + 2)};
}

DeliveryPeriod DeliveryPeriod::month(int y, unsigned m) {
  if (m < 1 || m > 12) fail(ErrorKind::Data, "month must be 1..12");
  return {Granularity::Month, make_day(y, m, 1), month_end(y, m)};
}

DeliveryPeriod DeliveryPeriod::iso_week(Day monday) {
  if (chr::weekday{monday} != chr::Monday) fail(ErrorKind::Data, "week must start on a Monday");
  return {Granularity::Week, monday, monday + chr::days{6}};
}

DeliveryPeriod DeliveryPeriod::weekend(Day saturday) {
  if (chr::weekday{saturday} != chr::Saturday) fail(ErrorKind::Data, "weekend must start on a Saturday");
  return {Granularity::Weekend, saturday, saturday + chr::days{1}};
}

DeliveryPeriod DeliveryPeriod::day(Day d) { return {Granularity::Day, d, d}; }

DeliveryPeriod DeliveryPeriod::day_type(int y, unsigned m, DayFilter filter) {
  if (filter == DayFilter::All) fail(ErrorKind::InvalidArgument, "day-type bucket needs a day filter");
  auto p = month(y, m);
  p.granularity = Granularity::DayType;
  p.days = filter;
  return p;
}

DeliveryPeriod DeliveryPeriod::hour(Day d, int h) {
  if (h < 0 || h > 23) fail(ErrorKind::Data, "hour must be 0..23");
  return {Granularity::Hour, d, d, DayFilter::All, h, h};
}

std::string DeliveryPeriod::code() const {
  const auto a = ymd_of(first);
  const int y = static_cast<int>(a.year());
  const unsigned m = static_cast<unsigned>(a.month());
  switch (granularity) {
    case Granularity::Year: return "CAL-" + std::to_string(y);
    case Granularity::Quarter: return "Q" + std::to_string((m - 1) / 3 + 1) + "-" + std::to_string(y);
    case Granularity::Month: return "M-" + std::to_string(y) + "-" + two_digits(m);
    case Granularity::Week: {
      const auto [wy, wk] = iso_week_of(first);
      return "W-" + std::to_string(wy) + "-" + two_digits(static_cast<unsigned>(wk));
    }
    case Granularity::Weekend: return "WE-" + format_date(first);
    case Granularity::Day: return "D-" + format_date(first);
    case Granularity::DayType:
      return std::string(filter_name(days)) + "-" + std::to_string(y) + "-" + two_digits(m);
    case Granularity::Hour:
      if (days == DayFilter::All && first == last) {
        return "H-" + format_date(first) + "-" + two_digits(static_cast<unsigned>(hour_first));
      }
      return std::string(filter_name(days)) + "-" + std::to_string(y) + "-" + two_digits(m) + "-H" +
             two_digits(static_cast<unsigned>(hour_first));
  }
  return "?";
}

std::string DeliveryPeriod::label() const {
  const auto a = ymd_of(first);
  const unsigned m = static_cast<unsigned>(a.month());
  switch (granularity) {
    case Granularity::Quarter: return "Q" + std::to_string((m - 1) / 3 + 1);
    case Granularity::Month: return "M" + two_digits(m);
    case Granularity::DayType: return std::string(filter_name(days));
    case Granularity::Hour: return "H" + two_digits(static_cast<unsigned>(hour_first));
    case Granularity::Day: return "D" + two_digits(static_cast<unsigned>(a.day()));
    default: return code();
  }
}

std::vector<std::string> DeliveryPeriod::lookup_keys() const {
  const auto a = ymd_of(first);
  const std::string month_key = "M" + two_digits(static_cast<unsigned>(a.month()));
  std::vector<std::string> keys{code()};
  switch (granularity) {
    case Granularity::Year: keys.push_back("Y"); break;
    case Granularity::Quarter: keys.push_back(label()); break;
    case Granularity::Month: keys.push_back(month_key); break;
    case Granularity::DayType:
      keys.push_back(month_key + "-" + std::string(filter_name(days)));
      keys.push_back(std::string(filter_name(days)));
      break;
    case Granularity::Day: keys.push_back(std::string(filter_name(day_class(first)))); break;
    default: break;
  }
  keys.push_back("*");
  return keys;
}

bool DeliveryPeriod::contains_cell(Day d, int h) const {
  return first <= d && d <= last && hour_first <= h && h <= hour_last && matches(days, d);
}

bool DeliveryPeriod::contains(const DeliveryPeriod& other) const {
  if (other.first < first || other.last > last) return false;
  if (other.hour_first < hour_first || other.hour_last > hour_last) return false;
  if (days == DayFilter::All || days == other.days) return true;
  for (Day d = other.first; d <= other.last; d += chr::days{1}) {
    if (matches(other.days, d) && !matches(days, d)) return false;
  }
  return true;
}

std::int64_t DeliveryPeriod::day_count() const { return (last - first).count() + 1; }

DeliveryPeriod parse_period(std::string_view code) {
  const auto parts = split_dash(code);
  const auto bad = [&]() -> DeliveryPeriod { fail(ErrorKind::Data, "invalid contract code '" + std::string(code) + "'"); };
  if (parts.empty()) return bad();
  const std::string_view head = parts[0];
  const auto full_date = [&](std::size_t from) {
    return parse_date(code.substr(static_cast<std::size_t>(parts[from].data() - code.data()), 10));
  };
  if ((head == "CAL" || head == "Cal" || head == "Y") && parts.size() == 2) {
    return DeliveryPeriod::year(to_int(parts[1], "year"));
  }
  if (head.size() == 2 && head[0] == 'Q' && parts.size() == 2) {
    return DeliveryPeriod::quarter(to_int(parts[1], "year"), to_int(head.substr(1), "quarter"));
  }
  if (head == "M" && parts.size() == 3) {
    return DeliveryPeriod::month(to_int(parts[1], "year"), static_cast<unsigned>(to_int(parts[2], "month")));
  }
  if (head == "W" && parts.size() == 3) {
    const int week = to_int(parts[2], "week");
    if (week < 1 || week > 53) return bad();
    const Day monday = iso_week_monday(to_int(parts[1], "year"), week);
    if (iso_week_of(monday).first != to_int(parts[1], "year")) return bad();
    return DeliveryPeriod::iso_week(monday);
  }
  if (head == "WE" && parts.size() == 4) return DeliveryPeriod::weekend(full_date(1));
  if (head == "D" && parts.size() == 4) return DeliveryPeriod::day(full_date(1));
  if (head == "H" && parts.size() == 5) return DeliveryPeriod::hour(full_date(1), to_int(parts[4], "hour"));
  DayFilter filter = DayFilter::All;
  if (head == "WD") filter = DayFilter::Weekday;
  if (head == "SAT") filter = DayFilter::Saturday;
  if (head == "SUN") filter = DayFilter::Sunday;
  if (filter != DayFilter::All && (parts.size() == 3 || parts.size() == 4)) {
    auto p = DeliveryPeriod::day_type(to_int(parts[1], "year"), static_cast<unsigned>(to_int(parts[2], "month")), filter);
    if (parts.size() == 4) {
      if (parts[3].size() != 3 || parts[3][0] != 'H') return bad();
      const int h = to_int(parts[3].substr(1), "hour");
      if (h < 0 || h > 23) return bad();
      p.granularity = Granularity::Hour;
      p.hour_first = p.hour_last = h;
    }
    return p;
  }
  return bad();
}

std::int64_t delivery_hours(const DeliveryPeriod& period, const CalendarConfig& calendar) {
  if (period.last < period.first || period.hour_last < period.hour_first) {
    fail(ErrorKind::InvalidArgument, "invalid delivery window");
  }
  std::int64_t hours = 0;
  for (Day d = period.first; d <= period.last; d += chr::days{1}) {
    if (matches(period.days, d)) hours += hours_on(d, period.hour_first, period.hour_last, calendar.dst_aware);
  }
  return hours;
}

std::vector<DeliveryPeriod> children_of(const DeliveryPeriod& parent, Granularity child) {
  std::vector<DeliveryPeriod> out;
  const auto a = ymd_of(parent.first);
  const int y = static_cast<int>(a.year());
  const unsigned m = static_cast<unsigned>(a.month());
  const auto unsupported = [&]() {
    fail(ErrorKind::InvalidArgument, "cannot split " + std::string(to_string(parent.granularity)) + " into " +
                                         std::string(to_string(child)));
  };
  switch (parent.granularity) {
    case Granularity::Year:
      if (child == Granularity::Quarter) {
        for (int q = 1; q <= 4; ++q) out.push_back(DeliveryPeriod::quarter(y, q));
      } else if (child == Granularity::Month) {
        for (unsigned mm = 1; mm <= 12; ++mm) out.push_back(DeliveryPeriod::month(y, mm));
      } else {
        unsupported();
      }
      break;
    case Granularity::Quarter:
      if (child != Granularity::Month) unsupported();
      for (unsigned mm = m; mm < m + 3; ++mm) out.push_back(DeliveryPeriod::month(y, mm));
      break;
    case Granularity::Month:
      if (child == Granularity::DayType) {
        for (auto f : {DayFilter::Weekday, DayFilter::Saturday, DayFilter::Sunday}) {
          out.push_back(DeliveryPeriod::day_type(y, m, f));
        }
      } else if (child == Granularity::Day) {
        for (Day d = parent.first; d <= parent.last; d += chr::days{1}) out.push_back(DeliveryPeriod::day(d));
      } else {
        unsupported();
      }
      break;
    case Granularity::Week:
    case Granularity::Weekend:
      if (child != Granularity::Day) unsupported();
      for (Day d = parent.first; d <= parent.last; d += chr::days{1}) out.push_back(DeliveryPeriod::day(d));
      break;
    case Granularity::Day:
    case Granularity::DayType:
      if (child != Granularity::Hour) unsupported();
      for (int h = parent.hour_first; h <= parent.hour_last; ++h) {
        DeliveryPeriod p = parent;
        p.granularity = Granularity::Hour;
        p.hour_first = p.hour_last = h;
        out.push_back(p);
      }
      break;
    case Granularity::Hour:
      unsupported();
  }
  return out;
}

ContractCode parse_contract(std::string_view text) {
  const auto plus = text.find('+');
  if (plus == std::string_view::npos) return parse_period(text);
  const std::string_view kind = text.substr(0, plus);
  const int offset = to_int(text.substr(plus + 1), "contract offset");
  if (offset < 1) fail(ErrorKind::Data, "relative offset must be >= 1 in '" + std::string(text) + "'");
  RelativeKind k;
  if (kind == "D") k = RelativeKind::Day;
  else if (kind == "WE") k = RelativeKind::Weekend;
  else if (kind == "W") k = RelativeKind::Week;
  else if (kind == "M") k = RelativeKind::Month;
  else if (kind == "Q") k = RelativeKind::Quarter;
  else if (kind == "Y") k = RelativeKind::Year;
  else fail(ErrorKind::Data, "invalid contract code '" + std::string(text) + "'");
  return RelativeCode{k, offset};
}

DeliveryPeriod resolve_relative(const RelativeCode& code, Day quote_date) {
  if (code.offset < 1) fail(ErrorKind::InvalidArgument, "relative offset must be >= 1");
  const int n = code.offset;
  const auto a = ymd_of(quote_date);
  const int y = static_cast<int>(a.year());
  const int m0 = static_cast<int>(static_cast<unsigned>(a.month())) - 1;  // 0-based
  switch (code.kind) {
    case RelativeKind::Day: return DeliveryPeriod::day(quote_date + chr::days{n});
    case RelativeKind::Weekend: {
      const Day next_sat = quote_date + chr::days{1} + (chr::Saturday - chr::weekday{quote_date + chr::days{1}});
      return DeliveryPeriod::weekend(next_sat + chr::days{7 * (n - 1)});
    }
    case RelativeKind::Week: {
      const Day this_monday = quote_date - (chr::weekday{quote_date} - chr::Monday);
      return DeliveryPeriod::iso_week(this_monday + chr::days{7 * n});
    }
    case RelativeKind::Month: {
      const int idx = y * 12 + m0 + n;
      return DeliveryPeriod::month(idx / 12, static_cast<unsigned>(idx % 12 + 1));
    }
    case RelativeKind::Quarter: {
      const int idx = y * 4 + m0 / 3 + n;
      return DeliveryPeriod::quarter(idx / 4, idx % 4 + 1);
    }
    case RelativeKind::Year: return DeliveryPeriod::year(y + n);
  }
  fail(ErrorKind::InvalidArgument, "unknown relative kind");
}

DeliveryPeriod resolve(const ContractCode& code, Day quote_date) {
  if (const auto* rel = std::get_if<RelativeCode>(&code)) return resolve_relative(*rel, quote_date);
  return std::get<DeliveryPeriod>(code);
}

}  // namespace fwdshape
