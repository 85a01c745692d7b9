#include "fwdshape/fwdshape.h"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>

#include "fwdshape/backtest.hpp"
#include "fwdshape/error.hpp"
#include "fwdshape/io.hpp"
#include "fwdshape/market_data.hpp"
#include "fwdshape/shaper.hpp"

struct fwdshape_quotes {
  fwdshape::QuoteTable table;
};

struct fwdshape_fit {
  fwdshape::FitReport report;
  std::optional<fwdshape::AssembledDataset> data;
  fwdshape::CompletenessReport completeness;
};

namespace {

using namespace fwdshape;

thread_local std::string last_error;

fwdshape_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return FWDSHAPE_INVALID_ARGUMENT;
    case ErrorKind::Data: return FWDSHAPE_DATA_ERROR;
    case ErrorKind::Io: return FWDSHAPE_IO_ERROR;
    case ErrorKind::Numerical: return FWDSHAPE_NUMERICAL_ERROR;
  }
  return FWDSHAPE_INTERNAL_ERROR;
}

template <typename F>
fwdshape_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return FWDSHAPE_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return FWDSHAPE_INTERNAL_ERROR;
}

void require(const void* p, const char* name) {
  if (p == nullptr) fail(ErrorKind::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorKind::InvalidArgument, std::string(what) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

AlphaPolicy parse_alpha(std::string_view text) {
  if (text == "auto") return AlphaPolicy::automatic();
  if (text.starts_with("auto:")) return AlphaPolicy::automatic(parse_double(text.substr(5), "alpha"));
  if (text.starts_with("per-case:")) return AlphaPolicy::per_case(parse_double(text.substr(9), "alpha"));
  return AlphaPolicy::fixed(parse_double(text, "alpha"));
}

FitConfig config_of(const fwdshape_fit_options* o, const std::string* split_text) {
  FitConfig c;
  if (split_text) c = fit_config_of_split(*split_text, c);
  if (o == nullptr) return c;
  if (o->fit_config_path) c = parse_fit_config(read_text_file(o->fit_config_path), c);
  if (o->alpha) c.alpha = parse_alpha(o->alpha);
  if (o->weight_function) {
    const std::string_view w = o->weight_function;
    if (w == "hampel") {
      c.weight_spec.kind = WeightKind::Hampel;
    } else if (w == "bisquare") {
      c.weight_spec.kind = WeightKind::Bisquare;
    } else {
      fail(ErrorKind::InvalidArgument, "weight function must be hampel or bisquare");
    }
  }
  if (o->scale) {
    const std::string_view s = o->scale;
    if (s == "mad") {
      c.scale_estimator = ScaleEstimator::Mad;
    } else if (s == "qn") {
      c.scale_estimator = ScaleEstimator::Qn;
    } else {
      fail(ErrorKind::InvalidArgument, "scale must be mad or qn");
    }
  }
  if (o->tolerance > 0.0) c.tolerance = o->tolerance;
  if (o->max_iterations > 0) c.max_iterations = o->max_iterations;
  if (o->feasibility_refits >= 0) c.feasibility_refits = o->feasibility_refits;
  if (o->gap_tolerance > 0.0) c.gap_tolerance = o->gap_tolerance;
  c.validate();
  return c;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::optional<Granularity> curve_granularity(std::string_view text) {
  try {
    const auto g = parse_granularity(text);
    if (g == Granularity::Quarter || g == Granularity::Month || g == Granularity::Day || g == Granularity::Hour) return g;
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

extern "C" {

const char* fwdshape_version(void) { return "0.1.0"; }

const char* fwdshape_last_error(void) { return last_error.c_str(); }

const char* fwdshape_status_name(fwdshape_status status) {
  switch (status) {
    case FWDSHAPE_OK: return "ok";
    case FWDSHAPE_INVALID_ARGUMENT: return "invalid argument";
    case FWDSHAPE_DATA_ERROR: return "data error";
    case FWDSHAPE_IO_ERROR: return "i/o error";
    case FWDSHAPE_NUMERICAL_ERROR: return "numerical failure";
    case FWDSHAPE_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

void fwdshape_string_free(char* s) { std::free(s); }

fwdshape_status fwdshape_quotes_load(const char* path, fwdshape_quotes** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new fwdshape_quotes{load_quotes_file(path)};
  });
}

fwdshape_status fwdshape_quotes_parse(const char* csv, fwdshape_quotes** out) {
  return guarded([&] {
    require(csv, "csv");
    require(out, "out");
    std::istringstream in(csv);
    *out = new fwdshape_quotes{load_quotes(in)};
  });
}

fwdshape_status fwdshape_quotes_save(const fwdshape_quotes* quotes, const char* path) {
  return guarded([&] {
    require(quotes, "quotes");
    require(path, "path");
    save_quotes_file(quotes->table, path);
  });
}

fwdshape_status fwdshape_quotes_csv(const fwdshape_quotes* quotes, char** out) {
  return guarded([&] {
    require(quotes, "quotes");
    require(out, "out");
    std::ostringstream ss;
    save_quotes(quotes->table, ss);
    *out = dup(ss.str());
  });
}

size_t fwdshape_quotes_size(const fwdshape_quotes* quotes) { return quotes ? quotes->table.size() : 0; }

void fwdshape_quotes_free(fwdshape_quotes* quotes) { delete quotes; }

void fwdshape_fit_options_init(fwdshape_fit_options* options) {
  if (options == nullptr) return;
  *options = fwdshape_fit_options{};
  options->feasibility_refits = -1;
}

fwdshape_status fwdshape_fit_quotes(const fwdshape_quotes* quotes, const char* split_path,
                                    const fwdshape_fit_options* options, fwdshape_fit** out) {
  return guarded([&] {
    require(quotes, "quotes");
    require(split_path, "split_path");
    require(out, "out");
    const auto split_text = read_text_file(split_path);
    const auto spec = parse_split_config(split_text);
    const auto config = config_of(options, &split_text);
    const std::string method = options && options->method ? options->method : "mcrm";
    if (!is_known_method(method)) fail(ErrorKind::InvalidArgument, "unknown method '" + method + "'");
    const DateRange range = options && options->range ? parse_date_range(options->range) : DateRange{};
    auto assembled = build_regression_dataset(quotes->table, spec, range);
    auto handle = std::make_unique<fwdshape_fit>();
    handle->report.result = fit_by_name(method, assembled.data, spec.constraints(), config);
    handle->report.split = spec.reference_split();
    handle->completeness = assembled.completeness;
    handle->data = std::move(assembled);
    *out = handle.release();
  });
}

fwdshape_status fwdshape_fit_load(const char* path, fwdshape_fit** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<fwdshape_fit>();
    handle->report = parse_fit_report(read_text_file(path));
    *out = handle.release();
  });
}

fwdshape_status fwdshape_fit_save(const fwdshape_fit* fit, const char* path) {
  return guarded([&] {
    require(fit, "fit");
    require(path, "path");
    write_text_file(path, fit_report_json(fit->report));
  });
}

fwdshape_status fwdshape_fit_report_json(const fwdshape_fit* fit, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = dup(fit_report_json(fit->report));
  });
}

fwdshape_status fwdshape_fit_completeness_json(const fwdshape_fit* fit, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = dup(completeness_json(fit->completeness));
  });
}

fwdshape_status fwdshape_fit_children(const fwdshape_fit* fit, size_t* out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = static_cast<size_t>(fit->report.result.gamma.size() / 2);
  });
}

fwdshape_status fwdshape_fit_gamma(const fwdshape_fit* fit, double* gamma, size_t length) {
  return guarded([&] {
    require(fit, "fit");
    require(gamma, "gamma");
    const auto& g = fit->report.result.gamma;
    if (length != static_cast<size_t>(g.size())) fail(ErrorKind::InvalidArgument, "gamma buffer has the wrong length");
    std::copy(g.data(), g.data() + g.size(), gamma);
  });
}

fwdshape_status fwdshape_fit_gap(const fwdshape_fit* fit, double* max_abs_gap) {
  return guarded([&] {
    require(fit, "fit");
    require(max_abs_gap, "max_abs_gap");
    *max_abs_gap = fit->report.result.arbitrage_gap_maxabs;
  });
}

fwdshape_status fwdshape_fit_outliers(const fwdshape_fit* fit, double threshold, char** flagged_csv, char** plot_csv) {
  return guarded([&] {
    require(fit, "fit");
    if (!fit->data) fail(ErrorKind::InvalidArgument, "outlier plots need a fit made from quotes");
    const auto& r = fit->report.result;
    const auto& d = fit->data->data;
    std::string flagged = "case_id,weight\n";
    for (const auto& c : outlier_report(r, threshold)) flagged += c.case_id + ',' + num(c.weight) + '\n';
    std::string plot = "case_id,weight,x";
    for (const auto& l : d.child_labels) plot += ',' + l;
    plot += ",flagged\n";
    for (Eigen::Index i = 0; i < d.cases(); ++i) {
      plot += d.case_ids[static_cast<std::size_t>(i)] + ',' + num(r.case_weights(i)) + ',' + num(d.x(i));
      for (Eigen::Index k = 0; k < d.children(); ++k) plot += ',' + num(d.y(i, k));
      plot += r.case_weights(i) < threshold ? ",1\n" : ",0\n";
    }
    if (flagged_csv) *flagged_csv = dup(flagged);
    if (plot_csv) *plot_csv = dup(plot);
  });
}

void fwdshape_fit_free(fwdshape_fit* fit) { delete fit; }

fwdshape_status fwdshape_check_arbitrage(const fwdshape_fit* fit, const double* weights, size_t length,
                                         int equal_weights, double* slope_gap, double* intercept_gap) {
  return guarded([&] {
    require(fit, "fit");
    const auto& g = fit->report.result.gamma;
    const auto k = static_cast<size_t>(g.size() / 2);
    std::vector<double> h;
    if (weights) {
      if (length != k) fail(ErrorKind::InvalidArgument, "need one weight per child");
      h.assign(weights, weights + length);
    } else if (equal_weights) {
      h.assign(k, 1.0);
    } else if (fit->report.split) {
      h = fit->report.split->weights;
    } else {
      fail(ErrorKind::InvalidArgument, "fit report has no child weights; pass weights explicitly");
    }
    const auto system = build_constraints(h);
    const Eigen::VectorXd gap = arbitrage_gap(system, g);
    if (slope_gap) *slope_gap = gap(0);
    if (intercept_gap) *intercept_gap = gap(1);
  });
}

fwdshape_status fwdshape_predict(const char* cascade_path, const char* const* report_paths, size_t report_count,
                                 double parent_price, const char* root, const char* target, char** curve_csv) {
  return guarded([&] {
    require(target, "target");
    require(curve_csv, "curve_csv");
    if (report_count > 0) require(report_paths, "report_paths");
    std::vector<FitReport> reports;
    for (size_t i = 0; i < report_count; ++i) reports.push_back(parse_fit_report(read_text_file(report_paths[i])));

    ShapingCascade shaping;
    if (cascade_path) {
      shaping = parse_cascade_config(read_text_file(cascade_path));
      std::size_t next = 0;
      for (auto& level : shaping.levels) {
        if (!level.coefficients.empty()) continue;
        if (next == reports.size()) fail(ErrorKind::InvalidArgument, "level '" + level.name + "' has no coefficients");
        const auto from_report = level_from_report(reports[next++], level.name);
        if (from_report.child != level.child) {
          fail(ErrorKind::InvalidArgument, "fit report does not match level '" + level.name + "'");
        }
        level.coefficients = from_report.coefficients;
        if (level.weight_mode == WeightMode::Explicit && level.explicit_weights.empty()) {
          level.explicit_weights = from_report.explicit_weights;
        }
      }
      if (next != reports.size()) fail(ErrorKind::InvalidArgument, "more fit reports than cascade levels to fill");
    } else {
      if (reports.size() != 1) fail(ErrorKind::InvalidArgument, "without a cascade config give exactly one fit report");
      shaping.levels.push_back(level_from_report(reports.front()));
    }

    DeliveryPeriod root_period;
    if (root) {
      root_period = parse_period(root);
    } else if (shaping.root) {
      root_period = *shaping.root;
    } else if (!reports.empty() && reports.front().split) {
      root_period = reports.front().split->parent;
    } else {
      fail(ErrorKind::InvalidArgument, "no root period given");
    }

    std::vector<CurvePoint> curve;
    if (const auto g = curve_granularity(target)) {
      curve = shape_curve(parent_price, root_period, shaping, *g);
    } else {
      const auto period = parse_period(target);
      curve.push_back({period, cascade(parent_price, root_period, shaping, period)});
    }
    std::ostringstream ss;
    write_curve_csv(curve, ss);
    *curve_csv = dup(ss.str());
  });
}

fwdshape_status fwdshape_backtest(const fwdshape_quotes* quotes, const char* split_path, const char* train_range,
                                  const char* test_range, const char* methods, const fwdshape_fit_options* options,
                                  int walk_forward, char** comparison_csv) {
  return guarded([&] {
    require(quotes, "quotes");
    require(split_path, "split_path");
    require(train_range, "train_range");
    require(test_range, "test_range");
    require(comparison_csv, "comparison_csv");
    const auto split_text = read_text_file(split_path);
    const auto spec = parse_split_config(split_text);
    BacktestOptions bo;
    bo.config = config_of(options, &split_text);
    bo.walk_forward = walk_forward != 0;
    const auto list = split_list(methods ? methods : "mcrm,classical,ratio-average");
    const auto report =
        backtest(quotes->table, spec, parse_date_range(train_range), parse_date_range(test_range), list, bo);
    std::ostringstream ss;
    write_backtest_csv(report, ss);
    *comparison_csv = dup(ss.str());
  });
}

void fwdshape_sim_options_init(fwdshape_sim_options* options) {
  if (options == nullptr) return;
  const SyntheticMarketConfig d;
  *options = fwdshape_sim_options{};
  options->seed = d.seed;
  options->dates = d.dates;
  options->x_low = d.x_low;
  options->x_high = d.x_high;
  options->noise = d.noise_multiplier;
  options->consistent_noise = d.consistent_noise ? 1 : 0;
  options->fraction = d.contamination_fraction;
  options->magnitude = d.magnitude;
  options->contaminated_child = d.contaminated_child;
}

fwdshape_status fwdshape_simulate(const fwdshape_sim_options* options, fwdshape_quotes** quotes, char** labels_csv,
                                  char** split_json) {
  return guarded([&] {
    require(options, "options");
    require(quotes, "quotes");
    SyntheticMarketConfig c;
    c.seed = options->seed;
    c.dates = options->dates;
    if (options->start_date) c.start_date = options->start_date;
    c.x_low = options->x_low;
    c.x_high = options->x_high;
    c.noise_multiplier = options->noise;
    c.consistent_noise = options->consistent_noise != 0;
    c.contamination_fraction = options->fraction;
    c.magnitude = options->magnitude;
    c.contaminate_leading = options->contaminate_leading;
    c.contaminated_child = options->contaminated_child;
    if (options->contamination) {
      const std::string_view t = options->contamination;
      if (t == "vertical") {
        c.contamination = Contamination::Vertical;
      } else if (t == "leverage") {
        c.contamination = Contamination::Leverage;
      } else {
        fail(ErrorKind::InvalidArgument, "contamination must be vertical or leverage");
      }
    }
    if (options->weights) {
      const std::string_view w = options->weights;
      if (w == "equal") {
        c.weight_mode = WeightMode::Equal;
      } else if (w == "hours") {
        c.weight_mode = WeightMode::Hours;
      } else {
        fail(ErrorKind::InvalidArgument, "synthetic weights must be equal or hours");
      }
    }
    if (options->gamma) c.gamma = Eigen::Map<const Eigen::VectorXd>(options->gamma, 8);
    auto market = synthesize_market(c);
    std::string labels = "quote_date,contaminated\n";
    for (std::size_t i = 0; i < market.dates.size(); ++i) {
      labels += format_date(market.dates[i]) + (market.contaminated[i] ? ",1\n" : ",0\n");
    }
    const auto split = split_config_json(market.spec);
    *quotes = new fwdshape_quotes{std::move(market.table)};
    if (labels_csv) *labels_csv = dup(labels);
    if (split_json) *split_json = dup(split);
  });
}

}  // extern "C"
