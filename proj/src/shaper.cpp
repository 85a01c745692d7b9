#include "fwdshape/shaper.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "fwdshape/error.hpp"

namespace fwdshape {

namespace chr = std::chrono;

namespace {

bool can_split(Granularity parent, Granularity child) {
  using G = Granularity;
  switch (parent) {
    case G::Year: return child == G::Quarter || child == G::Month;
    case G::Quarter: return child == G::Month;
    case G::Month: return child == G::DayType || child == G::Day;
    case G::Week:
    case G::Weekend: return child == G::Day;
    case G::Day:
    case G::DayType: return child == G::Hour;
    case G::Hour: return false;
  }
  return false;
}

bool same_cells(const DeliveryPeriod& a, const DeliveryPeriod& b) {
  return a.first == b.first && a.last == b.last && a.days == b.days && a.hour_first == b.hour_first &&
         a.hour_last == b.hour_last;
}

std::string timestamp(Day d, int hour) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "T%02d:00", hour);
  return format_date(d) + buf;
}

// Hour weight of one (day, hour) cell; hour 2 of the switch days counts 0 or 2.
double cell_weight(Day d, int h, const CalendarConfig& calendar) {
  if (!calendar.dst_aware || h != 2) return 1.0;
  return static_cast<double>(delivery_hours(DeliveryPeriod::hour(d, h), calendar));
}

void collect_leaves(double price, const DeliveryPeriod& period, const ShapingCascade& shaping, std::size_t idx,
                    std::vector<CurvePoint>& out) {
  if (idx == shaping.levels.size()) {
    out.push_back({period, price});
    return;
  }
  const auto level = shaping.level_for(idx, period);
  const auto prices = apply_level(price, level, shaping.allow_arbitrage);
  for (std::size_t k = 0; k < prices.size(); ++k) collect_leaves(prices[k], level.split.children[k], shaping, idx + 1, out);
}

}  // namespace

std::vector<AffineCoefficient> coefficients_of(const Eigen::VectorXd& gamma) {
  if (gamma.size() % 2 != 0) fail(ErrorKind::InvalidArgument, "gamma length must be even");
  std::vector<AffineCoefficient> out;
  for (Eigen::Index k = 0; k < gamma.size() / 2; ++k) out.push_back({gamma(slope_index(k)), gamma(intercept_index(k))});
  return out;
}

Eigen::VectorXd gamma_of(const std::vector<AffineCoefficient>& coefficients) {
  Eigen::VectorXd gamma(2 * static_cast<Eigen::Index>(coefficients.size()));
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    gamma(slope_index(static_cast<Eigen::Index>(k))) = coefficients[k].slope;
    gamma(intercept_index(static_cast<Eigen::Index>(k))) = coefficients[k].intercept;
  }
  return gamma;
}

double ShapingLevel::slope_gap() const {
  double s = 0.0;
  for (std::size_t k = 0; k < coefficients.size(); ++k) s += split.weights[k] * coefficients[k].slope;
  return s - 1.0;
}

double ShapingLevel::intercept_gap() const {
  double s = 0.0;
  for (std::size_t k = 0; k < coefficients.size(); ++k) s += split.weights[k] * coefficients[k].intercept;
  return s;
}

bool ShapingLevel::arbitrage_free() const {
  return std::fabs(slope_gap()) <= gap_tolerance && std::fabs(intercept_gap()) <= gap_tolerance;
}

std::vector<double> apply_level(double parent_price, const ShapingLevel& level, bool allow_arbitrage) {
  if (level.coefficients.size() != level.split.size() || level.split.weights.size() != level.split.size()) {
    fail(ErrorKind::InvalidArgument, "level needs one coefficient pair and one weight per child");
  }
  if (!allow_arbitrage && !level.arbitrage_free()) {
    fail(ErrorKind::Numerical, "arbitrage-violating level for " + level.split.parent.code() +
                                   " (slope gap " + std::to_string(level.slope_gap()) + ", intercept gap " +
                                   std::to_string(level.intercept_gap()) + ")");
  }
  std::vector<double> out;
  out.reserve(level.coefficients.size());
  for (const auto& c : level.coefficients) out.push_back(c.slope * parent_price + c.intercept);
  return out;
}

double verify_consistency(double parent_price, std::span<const double> child_prices, std::span<const double> weights) {
  if (child_prices.size() != weights.size()) fail(ErrorKind::InvalidArgument, "one weight per child price required");
  double s = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * child_prices[k];
  return s - parent_price;
}

ShapingLevel stress_shift(const ShapingLevel& level, std::size_t k, double delta) {
  const std::size_t n = level.coefficients.size();
  if (k >= n) fail(ErrorKind::InvalidArgument, "stress shift child index out of range");
  if (n < 2) fail(ErrorKind::InvalidArgument, "stress shift needs at least one sibling");
  double sibling_weight = 0.0;
  for (std::size_t j = 0; j < n; ++j) sibling_weight += j == k ? 0.0 : level.split.weights[j];
  const double offset = level.split.weights[k] * delta / sibling_weight;
  ShapingLevel out = level;
  for (std::size_t j = 0; j < n; ++j) out.coefficients[j].intercept += j == k ? delta : -offset;
  return out;
}

void ShapingCascade::validate() const {
  if (levels.empty()) fail(ErrorKind::InvalidArgument, "cascade needs at least one level");
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    if (!can_split(levels[i].child, levels[i + 1].child)) {
      fail(ErrorKind::InvalidArgument, "cascade level '" + levels[i + 1].name + "' cannot split " +
                                           std::string(to_string(levels[i].child)) + " periods");
    }
  }
  if (root && !can_split(root->granularity, levels.front().child)) {
    fail(ErrorKind::InvalidArgument, "first cascade level cannot split the root " + root->code());
  }
}

ShapingLevel ShapingCascade::level_for(std::size_t index, const DeliveryPeriod& parent) const {
  const auto& def = levels.at(index);
  ShapingLevel level;
  level.gap_tolerance = gap_tolerance;
  level.split = build_split(parent, children_of(parent, def.child), calendar);
  if (def.weight_mode == WeightMode::Equal) level.split = with_equal_weights(std::move(level.split));
  if (def.weight_mode == WeightMode::Explicit) level.split = with_weights(std::move(level.split), def.explicit_weights);
  for (const auto& key : parent.lookup_keys()) {
    if (auto it = def.coefficients.find(key); it != def.coefficients.end()) {
      level.coefficients = it->second;
      break;
    }
  }
  if (level.coefficients.empty()) {
    fail(ErrorKind::InvalidArgument, "level '" + def.name + "' has no coefficients for " + parent.code());
  }
  if (level.coefficients.size() != level.split.size()) {
    fail(ErrorKind::InvalidArgument, "level '" + def.name + "' expects " + std::to_string(level.split.size()) +
                                         " coefficient pairs for " + parent.code());
  }
  return level;
}

double cascade(double parent_price, const DeliveryPeriod& root, const ShapingCascade& shaping,
               const DeliveryPeriod& target) {
  shaping.validate();
  if (!root.contains(target)) fail(ErrorKind::InvalidArgument, "no shaping path from " + root.code() + " to " + target.code());
  DeliveryPeriod current = root;
  double price = parent_price;
  for (std::size_t idx = 0; idx < shaping.levels.size(); ++idx) {
    if (same_cells(current, target)) return price;
    const auto level = shaping.level_for(idx, current);
    const auto prices = apply_level(price, level, shaping.allow_arbitrage);
    bool found = false;
    for (std::size_t k = 0; k < prices.size(); ++k) {
      if (level.split.children[k].contains(target)) {
        current = level.split.children[k];
        price = prices[k];
        found = true;
        break;
      }
    }
    if (!found) fail(ErrorKind::InvalidArgument, "no shaping path from " + root.code() + " to " + target.code());
  }
  return price;
}

std::vector<CurvePoint> cascade_leaves(double parent_price, const DeliveryPeriod& root, const ShapingCascade& shaping) {
  shaping.validate();
  std::vector<CurvePoint> out;
  collect_leaves(parent_price, root, shaping, 0, out);
  return out;
}

std::vector<CurvePoint> shape_curve(double parent_price, const DeliveryPeriod& root, const ShapingCascade& shaping,
                                    Granularity granularity) {
  const auto leaves = cascade_leaves(parent_price, root, shaping);
  const auto days = static_cast<std::size_t>(root.day_count());
  std::vector<double> cell(days * 24, std::numeric_limits<double>::quiet_NaN());
  for (const auto& leaf : leaves) {
    for (Day d = leaf.period.first; d <= leaf.period.last; d += chr::days{1}) {
      if (!matches(leaf.period.days, d)) continue;
      const auto offset = static_cast<std::size_t>((d - root.first).count());
      for (int h = leaf.period.hour_first; h <= leaf.period.hour_last; ++h) cell[offset * 24 + static_cast<std::size_t>(h)] = leaf.price;
    }
  }

  std::vector<DeliveryPeriod> periods;
  switch (granularity) {
    case Granularity::Quarter:
    case Granularity::Month:
      periods = root.granularity == granularity ? std::vector<DeliveryPeriod>{root} : children_of(root, granularity);
      break;
    case Granularity::Day:
    case Granularity::Hour:
      for (Day d = root.first; d <= root.last; d += chr::days{1}) {
        if (!matches(root.days, d)) continue;
        if (granularity == Granularity::Day) {
          periods.push_back(DeliveryPeriod::day(d));
        } else {
          for (int h = root.hour_first; h <= root.hour_last; ++h) periods.push_back(DeliveryPeriod::hour(d, h));
        }
      }
      break;
    default:
      fail(ErrorKind::InvalidArgument, "curves are exported at quarter, month, day or hour granularity");
  }

  std::vector<CurvePoint> curve;
  curve.reserve(periods.size());
  for (const auto& p : periods) {
    double sum = 0.0;
    double hours = 0.0;
    for (Day d = p.first; d <= p.last; d += chr::days{1}) {
      const auto offset = static_cast<std::size_t>((d - root.first).count());
      for (int h = p.hour_first; h <= p.hour_last; ++h) {
        const double value = cell[offset * 24 + static_cast<std::size_t>(h)];
        if (std::isnan(value)) continue;
        const double w = cell_weight(d, h, shaping.calendar);
        sum += w * value;
        hours += w;
      }
    }
    curve.push_back({p, hours > 0.0 ? sum / hours : std::numeric_limits<double>::quiet_NaN()});
  }
  return curve;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out) {
  out << "period_start,period_end,price\n";
  for (const auto& point : curve) {
    const auto& p = point.period;
    const std::string end =
        p.hour_last == 23 ? timestamp(p.last + chr::days{1}, 0) : timestamp(p.last, p.hour_last + 1);
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, point.price);
    out << timestamp(p.first, p.hour_first) << ',' << end << ',' << std::string(buf, ptr) << '\n';
  }
}

std::vector<std::pair<std::string, double>> read_curve_csv(std::istream& in) {
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  std::getline(in, line);
  if (line.rfind("period_start,period_end,price", 0) != 0) fail(ErrorKind::Data, "not a curve CSV");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c2 == std::string::npos) fail(ErrorKind::Data, "malformed curve row");
    double price = 0.0;
    std::from_chars(line.data() + c2 + 1, line.data() + line.size(), price);
    rows.emplace_back(line.substr(0, c1), price);
  }
  return rows;
}

FitResult recalibrate_with_traded(const Dataset& data, const ConstraintSystem& system, const FitConfig& config,
                                  const std::map<Eigen::Index, TradedChild>& traded, const FitResult* prior) {
  data.validate();
  FitResult prior_fit;
  const bool needs_prior = std::any_of(traded.begin(), traded.end(), [](const auto& kv) {
    return kv.second.mode == TradedChild::Mode::MarketPrice;
  });
  if (needs_prior && prior == nullptr) {
    prior_fit = irls_fit(data, system, config);
    prior = &prior_fit;
  }

  std::map<Eigen::Index, double> fixed;
  for (const auto& [child, spec] : traded) {
    if (child < 0 || child >= data.children()) fail(ErrorKind::InvalidArgument, "traded child index out of range");
    AffineCoefficient c = spec.coefficients;
    if (spec.mode == TradedChild::Mode::MarketPrice) {
      if (spec.parent_quote == 0.0 && !spec.solve_intercept) fail(ErrorKind::InvalidArgument, "parent quote must be nonzero");
      if (spec.solve_intercept) {
        c.slope = prior->slope(child);
        c.intercept = spec.traded_price - c.slope * spec.parent_quote;
      } else {
        c.intercept = prior->intercept(child);
        c.slope = (spec.traded_price - c.intercept) / spec.parent_quote;
      }
    }
    fixed[slope_index(child)] = c.slope;
    fixed[intercept_index(child)] = c.intercept;
  }
  // Validates feasibility of the remaining system.
  const auto reduced = fix_coefficients(system, fixed);
  (void)reduced;

  FitConfig cfg = config;
  cfg.feasibility_refits = std::max(cfg.feasibility_refits, 12);
  FitResult res = irls_fit(data, system, cfg, fixed);
  res.method = "mcrm-recalibrated";
  return res;
}

}  // namespace fwdshape
