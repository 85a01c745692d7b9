#include "fwdshape/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "fwdshape/baselines.hpp"
#include "fwdshape/error.hpp"

namespace fwdshape {

namespace chr = std::chrono;

MetricsReport compute_metrics(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols()) {
    fail(ErrorKind::InvalidArgument, "actual and predicted shapes differ");
  }
  if (actual.rows() < 1 || actual.cols() < 1) fail(ErrorKind::InvalidArgument, "metrics need at least one case");
  const Eigen::MatrixXd err = actual - predicted;
  const Eigen::VectorXd row_ae = err.cwiseAbs().rowwise().mean();
  const Eigen::VectorXd row_se = err.cwiseAbs2().rowwise().mean();
  MetricsReport m;
  m.mean_ae = err.cwiseAbs().mean();
  m.mean_se = err.cwiseAbs2().mean();
  m.med_ae = median(std::span<const double>(row_ae.data(), static_cast<std::size_t>(row_ae.size())));
  m.med_se = median(std::span<const double>(row_se.data(), static_cast<std::size_t>(row_se.size())));
  return m;
}

bool is_known_method(const std::string& method) {
  return method == "mcrm" || method == "classical" || method == "ratio-average" || method == "ratio-average-rescaled";
}

FitResult fit_by_name(const std::string& method, const Dataset& data, const ConstraintSystem& system,
                      const FitConfig& config) {
  if (method == "mcrm") return irls_fit(data, system, config);
  if (method == "classical") return classical_fit(data, system, config.alpha);
  if (method == "ratio-average") return ratio_average_result(data, system);
  if (method == "ratio-average-rescaled") {
    std::vector<double> weights(static_cast<std::size_t>(data.children()));
    for (Eigen::Index k = 0; k < data.children(); ++k) weights[static_cast<std::size_t>(k)] = system.matrix(0, slope_index(k));
    return ratio_average_result(data, system, &weights);
  }
  fail(ErrorKind::InvalidArgument, "unknown method '" + method + "'");
}

const BacktestRow& BacktestReport::row(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  fail(ErrorKind::InvalidArgument, "no backtest row for '" + method + "'");
}

namespace {

AssembledDataset assemble(const QuoteTable& table, const SplitSpec& spec, const DateRange& range, const char* which) {
  try {
    return build_regression_dataset(table, spec, range);
  } catch (const Error& e) {
    fail(e.kind(), std::string(which) + " range: " + e.what());
  }
}

Eigen::MatrixXd walk_forward_predictions(const std::string& method, const AssembledDataset& train,
                                         const AssembledDataset& test, const ConstraintSystem& system,
                                         const FitConfig& config) {
  const auto n_train = train.data.cases();
  const auto n_test = test.data.cases();
  Dataset pooled;
  pooled.x.resize(n_train + n_test);
  pooled.y.resize(n_train + n_test, train.data.children());
  pooled.x << train.data.x, test.data.x;
  pooled.y << train.data.y, test.data.y;
  pooled.case_ids = train.data.case_ids;
  pooled.case_ids.insert(pooled.case_ids.end(), test.data.case_ids.begin(), test.data.case_ids.end());
  pooled.child_labels = train.data.child_labels;

  Eigen::MatrixXd predicted(n_test, train.data.children());
  Eigen::Index i = 0;
  while (i < n_test) {
    const Day date = test.quote_dates[static_cast<std::size_t>(i)];
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n_train));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    for (Eigen::Index j = 0; j < n_test; ++j) {
      if (test.quote_dates[static_cast<std::size_t>(j)] < date) rows.push_back(n_train + j);
    }
    const auto fit = fit_by_name(method, pooled.subset(rows), system, config);
    Eigen::Index j = i;
    while (j < n_test && test.quote_dates[static_cast<std::size_t>(j)] == date) ++j;
    predicted.middleRows(i, j - i) = fit.predict(test.data.x.segment(i, j - i));
    i = j;
  }
  return predicted;
}

}  // namespace

BacktestReport backtest(const QuoteTable& table, const SplitSpec& spec, const DateRange& train,
                        const DateRange& test, const std::vector<std::string>& methods,
                        const BacktestOptions& options) {
  if (methods.empty()) fail(ErrorKind::InvalidArgument, "no methods to backtest");
  for (const auto& m : methods) {
    if (!is_known_method(m)) fail(ErrorKind::InvalidArgument, "unknown method '" + m + "'");
  }
  options.config.validate();
  const auto train_set = assemble(table, spec, train, "train");
  const auto test_set = assemble(table, spec, test, "test");
  const auto system = spec.constraints();

  struct Outcome {
    FitResult fit;
    BacktestRow row;
  };
  auto run = [&](const std::string& method) {
    Outcome o;
    o.fit = fit_by_name(method, train_set.data, system, options.config);
    o.row.method = method;
    o.row.in_sample = compute_metrics(train_set.data.y, o.fit.predict(train_set.data.x));
    const Eigen::MatrixXd predicted = options.walk_forward
                                          ? walk_forward_predictions(method, train_set, test_set, system, options.config)
                                          : o.fit.predict(test_set.data.x);
    o.row.out_of_sample = compute_metrics(test_set.data.y, predicted);
    return o;
  };

  std::vector<Outcome> outcomes;
  if (options.parallel && methods.size() > 1) {
    std::vector<std::future<Outcome>> jobs;
    for (const auto& m : methods) jobs.push_back(std::async(std::launch::async, run, m));
    for (auto& j : jobs) outcomes.push_back(j.get());
  } else {
    for (const auto& m : methods) outcomes.push_back(run(m));
  }

  BacktestReport report;
  report.train_cases = static_cast<std::size_t>(train_set.data.cases());
  report.test_cases = static_cast<std::size_t>(test_set.data.cases());
  for (auto& o : outcomes) {
    report.rows.push_back(o.row);
    report.fits.push_back(std::move(o.fit));
  }
  return report;
}

namespace {

constexpr const char* kBacktestHeader =
    "method,in_mean_ae,in_med_ae,in_mean_se,in_med_se,out_mean_ae,out_med_ae,out_mean_se,out_med_se";

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_num(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorKind::Data, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void write_backtest_csv(const BacktestReport& report, std::ostream& out) {
  out << kBacktestHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.method;
    for (const auto* m : {&r.in_sample, &r.out_of_sample}) {
      out << ',' << num(m->mean_ae) << ',' << num(m->med_ae) << ',' << num(m->mean_se) << ',' << num(m->med_se);
    }
    out << '\n';
  }
}

std::vector<BacktestRow> read_backtest_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kBacktestHeader) fail(ErrorKind::Data, "not a backtest CSV");
  std::vector<BacktestRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) fail(ErrorKind::Data, "line " + std::to_string(n) + ": expected 9 fields");
    BacktestRow r;
    r.method = cells[0];
    r.in_sample = {parse_num(cells[1], n), parse_num(cells[2], n), parse_num(cells[3], n), parse_num(cells[4], n)};
    r.out_of_sample = {parse_num(cells[5], n), parse_num(cells[6], n), parse_num(cells[7], n), parse_num(cells[8], n)};
    rows.push_back(r);
  }
  return rows;
}

Eigen::VectorXd default_synthetic_gamma() {
  Eigen::VectorXd g(8);
  g << 1.121, -1.604, 0.875, 1.406, 0.921, 0.930, 1.083, -0.732;
  return g;
}

void SyntheticMarketConfig::validate() const {
  if (gamma.size() != 0 && (gamma.size() < 2 || gamma.size() % 2 != 0)) {
    fail(ErrorKind::InvalidArgument, "gamma needs one (slope, intercept) pair per child");
  }
  if (gamma.size() != 0 && gamma.size() != 8) {
    fail(ErrorKind::InvalidArgument, "synthetic markets split calendar years into four quarters");
  }
  if (noise_scale.size() != 0 && noise_scale.size() != 4) fail(ErrorKind::InvalidArgument, "noise scale needs four entries");
  if (noise_scale.size() != 0 && (noise_scale.array() < 0.0).any()) fail(ErrorKind::InvalidArgument, "noise scale must be >= 0");
  if (!(noise_multiplier >= 0.0)) fail(ErrorKind::InvalidArgument, "noise multiplier must be >= 0");
  if (dates < 3) fail(ErrorKind::InvalidArgument, "need at least three quote dates");
  if (!(x_low > 0.0 && x_low < x_high)) fail(ErrorKind::InvalidArgument, "parent price range must satisfy 0 < low < high");
  if (!(contamination_fraction >= 0.0 && contamination_fraction < 0.5)) {
    fail(ErrorKind::InvalidArgument, "contamination fraction must lie in [0, 0.5)");
  }
  if (contaminated_child < -1 || contaminated_child > 3) fail(ErrorKind::InvalidArgument, "contaminated child must be -1 or 0..3");
  if (weight_mode == WeightMode::Explicit) fail(ErrorKind::InvalidArgument, "synthetic markets use hours or equal weights");
  parse_date(start_date);
}

SyntheticMarket synthesize_market(const SyntheticMarketConfig& config) {
  config.validate();
  SyntheticMarket market;
  market.gamma = config.gamma.size() ? config.gamma : default_synthetic_gamma();
  const Eigen::VectorXd sigma =
      (config.noise_scale.size() ? config.noise_scale : Eigen::VectorXd::Ones(4)) * config.noise_multiplier;

  SplitSpec& spec = market.spec;
  spec.parent_family = Granularity::Year;
  spec.child = Granularity::Quarter;
  spec.weight_mode = config.weight_mode;

  // Business days from the start date.
  Day d = parse_date(config.start_date);
  while (market.dates.size() < config.dates) {
    const chr::weekday wd{d};
    if (wd != chr::Saturday && wd != chr::Sunday) market.dates.push_back(d);
    d += chr::days{1};
  }
  const int first_year = static_cast<int>(chr::year_month_day{market.dates.front()}.year()) + 1;
  spec.reference_parent = DeliveryPeriod::year(first_year);
  {
    const auto ref = spec.reference_split();
    const auto gap = max_abs_gap(build_constraints(ref), market.gamma);
    if (gap > 1e-10) fail(ErrorKind::InvalidArgument, "synthetic gamma is not arbitrage-free (gap " + std::to_string(gap) + ")");
  }

  std::mt19937_64 base(config.seed);
  std::uniform_real_distribution<double> parent_price(config.x_low, config.x_high);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t n = market.dates.size();
  std::vector<double> xs(n);
  Eigen::MatrixXd ys(static_cast<Eigen::Index>(n), 4);
  std::vector<GranularitySplit> splits;
  for (std::size_t i = 0; i < n; ++i) {
    const auto parent = resolve_relative({RelativeKind::Year, 1}, market.dates[i]);
    auto split = spec.split_for(parent);
    const Eigen::Map<const Eigen::VectorXd> h(split.weights.data(), 4);
    xs[i] = parent_price(base);
    Eigen::VectorXd eps(4);
    for (Eigen::Index k = 0; k < 4; ++k) eps(k) = sigma(k) * normal(base);
    if (config.consistent_noise) eps -= h * (h.dot(eps) / h.squaredNorm());
    for (Eigen::Index k = 0; k < 4; ++k) {
      ys(static_cast<Eigen::Index>(i), k) = market.gamma(slope_index(k)) * xs[i] + market.gamma(intercept_index(k)) + eps(k);
    }
    splits.push_back(std::move(split));
  }

  market.contaminated.assign(n, false);
  const std::size_t eligible = config.contaminate_leading ? std::min(config.contaminate_leading, n) : n;
  const auto hits = static_cast<std::size_t>(std::llround(config.contamination_fraction * static_cast<double>(eligible)));
  if (hits > 0) {
    std::mt19937_64 dirty(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(eligible);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), dirty);
    std::uniform_int_distribution<Eigen::Index> pick_child(0, 3);
    for (std::size_t j = 0; j < hits; ++j) {
      const auto i = order[j];
      market.contaminated[i] = true;
      if (config.contamination == Contamination::Vertical) {
        const Eigen::Index k = config.contaminated_child >= 0 ? config.contaminated_child : pick_child(dirty);
        const double scale = sigma(k) > 0.0 ? sigma(k) : 1.0;
        ys(static_cast<Eigen::Index>(i), k) += config.magnitude * scale;
      } else {
        xs[i] *= config.magnitude;
      }
    }
  }

  std::vector<Quote> quotes;
  quotes.reserve(n * 5);
  for (std::size_t i = 0; i < n; ++i) {
    quotes.push_back({market.dates[i], splits[i].parent, xs[i]});
    for (std::size_t k = 0; k < 4; ++k) {
      quotes.push_back({market.dates[i], splits[i].children[k], ys(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))});
    }
  }
  market.table = QuoteTable(std::move(quotes));
  return market;
}

}  // namespace fwdshape
