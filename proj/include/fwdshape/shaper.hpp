#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwdshape/estimator.hpp"
#include "fwdshape/market_data.hpp"

namespace fwdshape {

struct AffineCoefficient {
  double slope = 1.0;
  double intercept = 0.0;
};

std::vector<AffineCoefficient> coefficients_of(const Eigen::VectorXd& gamma);
Eigen::VectorXd gamma_of(const std::vector<AffineCoefficient>& coefficients);

// One split with its fitted (A_k, B_k).
struct ShapingLevel {
  GranularitySplit split;
  std::vector<AffineCoefficient> coefficients;
  double gap_tolerance = 1e-6;

  double slope_gap() const;      // sum h_k A_k - 1
  double intercept_gap() const;  // sum h_k B_k
  bool arbitrage_free() const;
};

// child_k = A_k * parent + B_k. Refuses arbitrage-violating levels unless allowed.
std::vector<double> apply_level(double parent_price, const ShapingLevel& level, bool allow_arbitrage = false);

// sum h_k child_k - parent.
double verify_consistency(double parent_price, std::span<const double> child_prices, std::span<const double> weights);

// Adds delta to B_k and spreads the offsetting shift uniformly over the
// siblings so the weighted intercept sum is unchanged.
ShapingLevel stress_shift(const ShapingLevel& level, std::size_t k, double delta);

struct CascadeLevel {
  std::string name;  // YtQ, QtM, MtD, DtH, ...
  Granularity child = Granularity::Quarter;
  WeightMode weight_mode = WeightMode::Hours;
  std::vector<double> explicit_weights;
  // Keyed by parent lookup key (see DeliveryPeriod::lookup_keys).
  std::map<std::string, std::vector<AffineCoefficient>> coefficients;
};

struct ShapingCascade {
  std::vector<CascadeLevel> levels;
  std::optional<DeliveryPeriod> root;
  CalendarConfig calendar;
  double gap_tolerance = 1e-6;
  bool allow_arbitrage = false;

  // Adjacent levels must chain: level l's children can be split by level l+1.
  void validate() const;
  ShapingLevel level_for(std::size_t index, const DeliveryPeriod& parent) const;
};

// Price of `target` obtained by applying the levels along the chain of
// periods from root down to the period containing it.
double cascade(double parent_price, const DeliveryPeriod& root, const ShapingCascade& shaping,
               const DeliveryPeriod& target);

struct CurvePoint {
  DeliveryPeriod period;
  double price;
};

// Finest-level prices for every period produced by the cascade under root.
std::vector<CurvePoint> cascade_leaves(double parent_price, const DeliveryPeriod& root, const ShapingCascade& shaping);

// Shaped curve at a calendar granularity (quarter, month, day or hour);
// each period price is the hour-weighted mean of the leaf prices it covers.
std::vector<CurvePoint> shape_curve(double parent_price, const DeliveryPeriod& root, const ShapingCascade& shaping,
                                    Granularity granularity);

// CSV `period_start,period_end,price` with ISO-8601 timestamps (end exclusive).
void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out);
std::vector<std::pair<std::string, double>> read_curve_csv(std::istream& in);

struct TradedChild {
  enum class Mode { Coefficients, MarketPrice };
  Mode mode = Mode::Coefficients;
  AffineCoefficient coefficients;
  double traded_price = 0.0;
  double parent_quote = 0.0;
  // Market mode: keep A from the prior fit and solve B instead of the default
  // (keep B, solve A).
  bool solve_intercept = false;

  static TradedChild fixed(double slope, double intercept) {
    TradedChild t;
    t.coefficients = {slope, intercept};
    return t;
  }
  static TradedChild market(double traded, double parent) {
    TradedChild t;
    t.mode = Mode::MarketPrice;
    t.traded_price = traded;
    t.parent_quote = parent;
    return t;
  }
};

// Re-estimates the remaining children with the traded ones held fixed. The
// alpha escalation continues until the gap meets config.gap_tolerance.
FitResult recalibrate_with_traded(const Dataset& data, const ConstraintSystem& system, const FitConfig& config,
                                  const std::map<Eigen::Index, TradedChild>& traded, const FitResult* prior = nullptr);

}  // namespace fwdshape
