// Command-line front end. Talks to the library only through fwdshape.h.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "fwdshape/fwdshape.h"

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumerical = 3;

int exit_code(fwdshape_status s) {
  switch (s) {
    case FWDSHAPE_OK: return 0;
    case FWDSHAPE_INVALID_ARGUMENT: return kUsage;
    case FWDSHAPE_DATA_ERROR:
    case FWDSHAPE_IO_ERROR: return kData;
    default: return kNumerical;
  }
}

struct Failure {
  int code;
};

void check(fwdshape_status s) {
  if (s == FWDSHAPE_OK) return;
  std::cerr << "fwdshape: " << fwdshape_last_error() << '\n';
  throw Failure{exit_code(s)};
}

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { fwdshape_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using Quotes = std::unique_ptr<fwdshape_quotes, decltype(&fwdshape_quotes_free)>;
using Fit = std::unique_ptr<fwdshape_fit, decltype(&fwdshape_fit_free)>;

Quotes load(const std::string& path) {
  fwdshape_quotes* q = nullptr;
  check(fwdshape_quotes_load(path.c_str(), &q));
  return {q, &fwdshape_quotes_free};
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "fwdshape: cannot write " << path << '\n';
    throw Failure{kData};
  }
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct FitFlags {
  std::string method = "mcrm";
  std::string alpha;
  std::string weight_fn;
  std::string scale;
  std::string fit_config;
  std::string range;
  double tolerance = 0.0;
  int max_iterations = 0;
  int refits = -1;
  double gap_tolerance = 0.0;

  void add(CLI::App* app, bool with_method) {
    if (with_method) {
      app->add_option("--method", method, "mcrm | classical | ratio-average | ratio-average-rescaled")
          ->capture_default_str();
    }
    app->add_option("--alpha", alpha, "auto, auto:C, per-case:C or a fixed penalty (default auto)");
    app->add_option("--weight-fn", weight_fn, "hampel | bisquare (default hampel)")
        ->check(CLI::IsMember({"hampel", "bisquare"}));
    app->add_option("--scale", scale, "residual scale: mad | qn (default mad)")->check(CLI::IsMember({"mad", "qn"}));
    app->add_option("--fit-config", fit_config, "JSON fit config (weight-function parameters, alpha, tolerances)");
    app->add_option("--tolerance", tolerance, "convergence tolerance on intercept changes (default 1e-8)");
    app->add_option("--max-iter", max_iterations, "IRLS iteration cap (default 100)");
    app->add_option("--refits", refits, "penalty escalations when the gap is too large (default 1)");
    app->add_option("--gap-tol", gap_tolerance, "arbitrage gap that triggers a refit (default 1e-6)");
  }

  fwdshape_fit_options options() const {
    fwdshape_fit_options o;
    fwdshape_fit_options_init(&o);
    o.method = method.c_str();
    o.alpha = opt(alpha);
    o.weight_function = opt(weight_fn);
    o.scale = opt(scale);
    o.fit_config_path = opt(fit_config);
    o.range = opt(range);
    o.tolerance = tolerance;
    o.max_iterations = max_iterations;
    o.feasibility_refits = refits;
    o.gap_tolerance = gap_tolerance;
    return o;
  }
};

Fit fit_from(const std::string& quotes_path, const std::string& split, const FitFlags& flags) {
  auto quotes = load(quotes_path);
  const auto o = flags.options();
  fwdshape_fit* f = nullptr;
  check(fwdshape_fit_quotes(quotes.get(), split.c_str(), &o, &f));
  return {f, &fwdshape_fit_free};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arbitrage-free shaping of electricity forward curves"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fwdshape_version()));

  // fit
  auto* fit = app.add_subcommand("fit", "Estimate shaping coefficients from quotes");
  std::string quotes_path, split_path, out_path, completeness_path;
  FitFlags fit_flags;
  fit->add_option("--quotes", quotes_path, "quote CSV (quote_date,contract,price)")->required();
  fit->add_option("--split", split_path, "JSON split config")->required();
  fit->add_option("--range", fit_flags.range, "quote-date range FROM:TO");
  fit->add_option("--out", out_path, "fit report (JSON); stdout when omitted");
  fit->add_option("--completeness", completeness_path, "write the dataset completeness report (JSON)");
  fit_flags.add(fit, true);

  // predict
  auto* predict = app.add_subcommand("predict", "Shape a parent price into a curve");
  std::vector<std::string> coeff_paths;
  std::string cascade_path, root, target;
  double parent_price = 0.0;
  predict->add_option("--coeffs", coeff_paths, "fit report(s); fill cascade levels without coefficients, in order");
  predict->add_option("--cascade", cascade_path, "JSON cascade config");
  predict->add_option("--parent-price", parent_price, "price of the root contract")->required();
  predict->add_option("--root", root, "root period code, e.g. CAL-2014");
  predict->add_option("--target", target, "quarter | month | day | hour, or a period code")->required();
  predict->add_option("--out", out_path, "curve CSV; stdout when omitted");

  // backtest
  auto* bt = app.add_subcommand("backtest", "Compare methods in and out of sample");
  std::string train, test, methods = "mcrm,classical,ratio-average";
  bool walk_forward = false;
  FitFlags bt_flags;
  bt->add_option("--quotes", quotes_path, "quote CSV")->required();
  bt->add_option("--split", split_path, "JSON split config")->required();
  bt->add_option("--train", train, "train quote-date range FROM:TO")->required();
  bt->add_option("--test", test, "test quote-date range FROM:TO")->required();
  bt->add_option("--methods", methods, "comma-separated method list")->capture_default_str();
  bt->add_flag("--walk-forward", walk_forward, "refit before every test date instead of freezing coefficients");
  bt->add_option("--out", out_path, "comparison CSV; stdout when omitted");
  bt_flags.add(bt, false);

  // outliers
  auto* outl = app.add_subcommand("outliers", "List downweighted cases of a robust fit");
  double threshold = 0.6;
  std::string plot_path;
  FitFlags out_flags;
  outl->add_option("--quotes", quotes_path, "quote CSV")->required();
  outl->add_option("--split", split_path, "JSON split config")->required();
  outl->add_option("--range", out_flags.range, "quote-date range FROM:TO");
  outl->add_option("--threshold", threshold, "flag cases with weight below this")->capture_default_str();
  outl->add_option("--out", out_path, "flagged cases CSV; stdout when omitted");
  outl->add_option("--plot", plot_path, "plot-data CSV with every case");
  out_flags.add(outl, false);

  // check-arbitrage
  auto* chk = app.add_subcommand("check-arbitrage", "Check coefficients against the non-arbitrage equations");
  std::string coeff_path, weights = "report";
  double tol = 1e-6;
  chk->add_option("--coeffs", coeff_path, "fit report (JSON)")->required();
  chk->add_option("--weights", weights, "report | equal | comma-separated child weights")->capture_default_str();
  chk->add_option("--tol", tol, "largest acceptable absolute gap")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic quote table");
  fwdshape_sim_options so;
  fwdshape_sim_options_init(&so);
  std::string labels_path, split_out, contamination = "vertical", sim_weights = "equal", start;
  bool inconsistent = false;
  sim->add_option("--seed", so.seed)->capture_default_str();
  sim->add_option("--dates", so.dates, "business days with one Y+1 case each")->capture_default_str();
  sim->add_option("--start", start, "first quote date (default 2012-01-02)");
  sim->add_option("--x-low", so.x_low)->capture_default_str();
  sim->add_option("--x-high", so.x_high)->capture_default_str();
  sim->add_option("--noise", so.noise, "noise multiplier (column scale 1)")->capture_default_str();
  sim->add_flag("--inconsistent-noise", inconsistent, "keep the arbitrage-breaking part of the noise");
  sim->add_option("--fraction", so.fraction, "contaminated share of dates")->capture_default_str();
  sim->add_option("--magnitude", so.magnitude, "outlier size in column scales")->capture_default_str();
  sim->add_option("--contamination", contamination)->check(CLI::IsMember({"vertical", "leverage"}))->capture_default_str();
  sim->add_option("--child", so.contaminated_child, "child hit by vertical outliers (0-3, -1 = random)")
      ->capture_default_str();
  sim->add_option("--leading", so.contaminate_leading, "only the first N dates may be contaminated (0 = any)");
  sim->add_option("--weights", sim_weights)->check(CLI::IsMember({"equal", "hours"}))->capture_default_str();
  sim->add_option("--out", out_path, "quote CSV; stdout when omitted");
  sim->add_option("--labels", labels_path, "contamination labels CSV");
  sim->add_option("--split-out", split_out, "split config matching the market");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*fit) {
      auto f = fit_from(quotes_path, split_path, fit_flags);
      OwnedString report;
      check(fwdshape_fit_report_json(f.get(), &report.p));
      emit(report.str(), out_path);
      if (!completeness_path.empty()) {
        OwnedString c;
        check(fwdshape_fit_completeness_json(f.get(), &c.p));
        emit(c.str(), completeness_path);
      }
    } else if (*predict) {
      std::vector<const char*> paths;
      for (const auto& p : coeff_paths) paths.push_back(p.c_str());
      OwnedString csv;
      check(fwdshape_predict(opt(cascade_path), paths.data(), paths.size(), parent_price, opt(root), target.c_str(),
                             &csv.p));
      emit(csv.str(), out_path);
    } else if (*bt) {
      auto quotes = load(quotes_path);
      const auto o = bt_flags.options();
      OwnedString csv;
      check(fwdshape_backtest(quotes.get(), split_path.c_str(), train.c_str(), test.c_str(), methods.c_str(), &o,
                              walk_forward ? 1 : 0, &csv.p));
      emit(csv.str(), out_path);
    } else if (*outl) {
      auto f = fit_from(quotes_path, split_path, out_flags);
      OwnedString flagged, plot;
      check(fwdshape_fit_outliers(f.get(), threshold, &flagged.p, &plot.p));
      emit(flagged.str(), out_path);
      if (!plot_path.empty()) emit(plot.str(), plot_path);
    } else if (*chk) {
      fwdshape_fit* raw = nullptr;
      check(fwdshape_fit_load(coeff_path.c_str(), &raw));
      Fit f{raw, &fwdshape_fit_free};
      double slope_gap = 0.0, intercept_gap = 0.0;
      if (weights == "report" || weights == "equal") {
        check(fwdshape_check_arbitrage(f.get(), nullptr, 0, weights == "equal", &slope_gap, &intercept_gap));
      } else {
        std::vector<double> h;
        try {
          for (const auto& item : CLI::detail::split(weights, ',')) h.push_back(std::stod(item));
        } catch (const std::exception&) {
          std::cerr << "fwdshape: --weights must be report, equal or a list of numbers\n";
          return kUsage;
        }
        check(fwdshape_check_arbitrage(f.get(), h.data(), h.size(), 0, &slope_gap, &intercept_gap));
      }
      const double worst = std::max(std::fabs(slope_gap), std::fabs(intercept_gap));
      std::printf("slope_gap %.10g\nintercept_gap %.10g\nmax_abs_gap %.10g\n", slope_gap, intercept_gap, worst);
      if (!(worst <= tol)) {
        std::cerr << "fwdshape: arbitrage gap " << worst << " exceeds tolerance " << tol << '\n';
        return kNumerical;
      }
    } else if (*sim) {
      so.consistent_noise = inconsistent ? 0 : 1;
      so.contamination = contamination.c_str();
      so.weights = sim_weights.c_str();
      so.start_date = opt(start);
      fwdshape_quotes* raw = nullptr;
      OwnedString labels, split;
      check(fwdshape_simulate(&so, &raw, &labels.p, &split.p));
      Quotes quotes{raw, &fwdshape_quotes_free};
      OwnedString csv;
      check(fwdshape_quotes_csv(quotes.get(), &csv.p));
      emit(csv.str(), out_path);
      if (!labels_path.empty()) emit(labels.str(), labels_path);
      if (!split_out.empty()) emit(split.str(), split_out);
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
