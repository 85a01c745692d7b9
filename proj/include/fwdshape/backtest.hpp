#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fwdshape/estimator.hpp"
#include "fwdshape/market_data.hpp"

namespace fwdshape {

struct MetricsReport {
  double mean_ae = 0.0;
  double med_ae = 0.0;
  double mean_se = 0.0;
  double med_se = 0.0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Median metrics take the median over cases of the per-case mean error.
MetricsReport compute_metrics(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);

// Known names: mcrm, classical, ratio-average, ratio-average-rescaled.
// Child weights for the rescaled baseline come from the first constraint row.
FitResult fit_by_name(const std::string& method, const Dataset& data, const ConstraintSystem& system,
                      const FitConfig& config);
bool is_known_method(const std::string& method);

struct BacktestOptions {
  FitConfig config;
  // Refit before each test date on every case quoted earlier (train plus
  // already seen test dates). Off: coefficients are frozen after training.
  bool walk_forward = false;
  bool parallel = true;
};

struct BacktestRow {
  std::string method;
  MetricsReport in_sample;
  MetricsReport out_of_sample;
};

struct BacktestReport {
  std::vector<BacktestRow> rows;
  std::size_t train_cases = 0;
  std::size_t test_cases = 0;
  std::vector<FitResult> fits;  // per method, fitted on the train range

  const BacktestRow& row(const std::string& method) const;
};

BacktestReport backtest(const QuoteTable& table, const SplitSpec& spec, const DateRange& train,
                        const DateRange& test, const std::vector<std::string>& methods,
                        const BacktestOptions& options = {});

void write_backtest_csv(const BacktestReport& report, std::ostream& out);
std::vector<BacktestRow> read_backtest_csv(std::istream& in);

enum class Contamination { Vertical, Leverage };

struct SyntheticMarketConfig {
  Eigen::VectorXd gamma;  // empty: 1.121, -1.604, 0.875, 1.406, 0.921, 0.930, 1.083, -0.732
  WeightMode weight_mode = WeightMode::Equal;
  std::string start_date = "2012-01-02";
  std::size_t dates = 600;  // business days, one Y+1 case each
  double x_low = 30.0;
  double x_high = 70.0;
  Eigen::VectorXd noise_scale;  // per child; empty: all 1
  double noise_multiplier = 1.0;
  // Remove the component of each noise draw that would break the hour-weighted
  // average, so clean rows are exactly arbitrage-consistent.
  bool consistent_noise = true;
  double contamination_fraction = 0.0;
  double magnitude = 10.0;
  Contamination contamination = Contamination::Vertical;
  int contaminated_child = -1;  // vertical outliers hit this child; -1 = a random one per case
  std::size_t contaminate_leading = 0;  // only the first n dates may be hit; 0 = all
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticMarket {
  QuoteTable table;
  SplitSpec spec;
  std::vector<Day> dates;
  std::vector<bool> contaminated;  // per date
  Eigen::VectorXd gamma;
};

Eigen::VectorXd default_synthetic_gamma();
SyntheticMarket synthesize_market(const SyntheticMarketConfig& config);

}  // namespace fwdshape
