#include "fwdshape/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fwdshape/error.hpp"

namespace fwdshape {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_price(double p) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, ptr);
}

}  // namespace

QuoteTable::QuoteTable(std::vector<Quote> quotes) : quotes_(std::move(quotes)) {
  std::sort(quotes_.begin(), quotes_.end(), [](const Quote& a, const Quote& b) {
    return std::tie(a.quote_date, a.period) < std::tie(b.quote_date, b.period);
  });
  for (const auto& q : quotes_) {
    if (!std::isfinite(q.price)) fail(ErrorKind::Data, "non-finite price for " + q.period.code());
    if (q.period.first < q.quote_date) {
      fail(ErrorKind::Data, "delivery of " + q.period.code() + " starts before quote date " + format_date(q.quote_date));
    }
    if (!index_.emplace(std::make_pair(q.quote_date, q.period), q.price).second) {
      fail(ErrorKind::Data, "duplicate quote for " + q.period.code() + " on " + format_date(q.quote_date));
    }
  }
}

std::optional<double> QuoteTable::price(Day quote_date, const DeliveryPeriod& period) const {
  const auto it = index_.find({quote_date, period});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Day> QuoteTable::quote_dates() const {
  std::vector<Day> dates;
  for (const auto& q : quotes_) {
    if (dates.empty() || dates.back() != q.quote_date) dates.push_back(q.quote_date);
  }
  return dates;
}

bool operator==(const QuoteTable& a, const QuoteTable& b) { return a.index_ == b.index_; }

QuoteTable load_quotes(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<Quote> quotes;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      if (row != "quote_date,contract,price") {
        fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": expected header 'quote_date,contract,price'");
      }
      header_seen = true;
      continue;
    }
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const auto date_text = trim(row.substr(0, c1));
    const auto code_text = trim(row.substr(c1 + 1, c2 - c1 - 1));
    const auto price_text = trim(row.substr(c2 + 1));
    try {
      Quote q;
      q.quote_date = parse_date(date_text);
      q.period = resolve(parse_contract(code_text), q.quote_date);
      auto [ptr, ec] = std::from_chars(price_text.data(), price_text.data() + price_text.size(), q.price);
      if (ec != std::errc{} || ptr != price_text.data() + price_text.size() || price_text.empty() ||
          !std::isfinite(q.price)) {
        fail(ErrorKind::Data, "invalid price '" + std::string(price_text) + "'");
      }
      quotes.push_back(q);
    } catch (const Error& e) {
      fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) fail(ErrorKind::Data, "line 1: expected header 'quote_date,contract,price'");
  return QuoteTable(std::move(quotes));
}

QuoteTable load_quotes_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read quotes file '" + path + "'");
  try {
    return load_quotes(in);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

void save_quotes(const QuoteTable& table, std::ostream& out) {
  out << "quote_date,contract,price\n";
  for (const auto& q : table.quotes()) {
    out << format_date(q.quote_date) << ',' << q.period.code() << ',' << format_price(q.price) << '\n';
  }
}

void save_quotes_file(const QuoteTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  save_quotes(table, out);
}

GranularitySplit SplitSpec::split_for(const DeliveryPeriod& parent) const {
  if (parent.granularity != parent_family) {
    fail(ErrorKind::InvalidArgument, parent.code() + " is not a " + std::string(to_string(parent_family)));
  }
  auto split = build_split(parent, children_of(parent, child), calendar);
  switch (weight_mode) {
    case WeightMode::Hours: return split;
    case WeightMode::Equal: return with_equal_weights(std::move(split));
    case WeightMode::Explicit: return with_weights(std::move(split), explicit_weights);
  }
  return split;
}

GranularitySplit SplitSpec::reference_split() const {
  if (!reference_parent) fail(ErrorKind::InvalidArgument, "split has no reference parent");
  return split_for(*reference_parent);
}

DateRange parse_date_range(std::string_view text) {
  DateRange r;
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) fail(ErrorKind::InvalidArgument, "date range must look like FROM:TO");
  const auto a = trim(text.substr(0, colon));
  const auto b = trim(text.substr(colon + 1));
  if (!a.empty()) r.from = parse_date(a);
  if (!b.empty()) r.to = parse_date(b);
  if (r.from && r.to && *r.to < *r.from) fail(ErrorKind::InvalidArgument, "date range ends before it starts");
  return r;
}

AssembledDataset build_regression_dataset(const QuoteTable& table, const SplitSpec& spec, const DateRange& range) {
  AssembledDataset out;
  std::vector<double> xs;
  std::vector<std::vector<double>> ys;
  std::optional<std::size_t> k;
  for (const auto& q : table.quotes()) {
    if (q.period.granularity != spec.parent_family || !range.contains(q.quote_date)) continue;
    const auto children = children_of(q.period, spec.child);
    if (!k) {
      k = children.size();
      out.completeness.missing_per_child.assign(*k, 0);
      for (const auto& c : children) out.completeness.child_labels.push_back(c.label());
    }
    ++out.completeness.candidate_rows;
    std::vector<double> row;
    bool complete = true;
    for (std::size_t j = 0; j < children.size(); ++j) {
      const auto p = table.price(q.quote_date, children[j]);
      if (!p) {
        complete = false;
        ++out.completeness.missing_per_child[j];
      } else {
        row.push_back(*p);
      }
    }
    if (!complete) {
      ++out.completeness.dropped_rows;
      continue;
    }
    xs.push_back(q.price);
    ys.push_back(std::move(row));
    out.quote_dates.push_back(q.quote_date);
    out.parents.push_back(q.period);
    out.data.case_ids.push_back(format_date(q.quote_date) + "|" + q.period.code());
  }
  out.completeness.complete_rows = xs.size();
  if (xs.empty()) fail(ErrorKind::Data, "no joint observations");
  const auto n = static_cast<Eigen::Index>(xs.size());
  out.data.x = Eigen::Map<Eigen::VectorXd>(xs.data(), n);
  out.data.y.resize(n, static_cast<Eigen::Index>(*k));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < out.data.y.cols(); ++j) {
      out.data.y(i, j) = ys[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  out.data.child_labels = out.completeness.child_labels;
  return out;
}

}  // namespace fwdshape
