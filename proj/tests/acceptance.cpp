// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "fwdshape/backtest.hpp"
#include "fwdshape/baselines.hpp"
#include "fwdshape/error.hpp"
#include "fwdshape/estimator.hpp"
#include "fwdshape/robust.hpp"
#include "fwdshape/shaper.hpp"
#include "oracles.hpp"

using namespace fwdshape;
namespace chr = std::chrono;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += why;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int failures = 0;

void run(int id, const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %s%s%s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.empty() ? "" : " -- ",
              o.detail.c_str());
  std::fflush(stdout);
}

Outcome qn_oracle() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> small(0, 9);
  int mismatches = 0;
  for (std::size_t n = 2; n <= 200; ++n) {
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> v(n);
      for (auto& x : v) x = rep % 10 == 9 ? static_cast<double>(small(rng)) : 40.0 + 8.0 * z(rng);
      if (qn_scale(v) != oracle::qn_brute(v)) ++mismatches;
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  o.detail = o.pass ? "9950 samples, n = 2..200, exact" : o.detail;
  return o;
}

Outcome weight_anchors() {
  Outcome o;
  const auto h = WeightFunctionSpec::hampel(1.6449, 1.9600, 2.3263);
  o.require(hampel_weight(0.0, h) == 1.0, "hampel(0) != 1");
  const double w2 = hampel_weight(2.0, h);
  o.require(std::fabs(w2 - 0.7326) <= 1e-3, "hampel(2.0) = " + fmt(w2));
  o.require(hampel_weight(3.0, h) == 0.0, "hampel(3) != 0");
  const double k = kBisquareK;
  for (double x : {k, k + 1e-9, 5.0, 10.0, 1e6, -7.0}) {
    o.require(bisquare_loss(x, k) == k * k / 6.0, "bisquare plateau broken at " + fmt(x));
  }
  o.require(bisquare_loss(0.5 * k, k) < k * k / 6.0, "bisquare below plateau inside k");
  if (o.pass) o.detail = "hampel(2.0) = " + fmt(w2);
  return o;
}

double inner_objective(const Dataset& d, const Eigen::VectorXd& w, const ConstraintSystem& s, double alpha,
                       const Eigen::VectorXd& g) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < d.cases(); ++i) {
    for (Eigen::Index k = 0; k < d.children(); ++k) {
      const double r = w(i) * (d.y(i, k) - g(2 * k) * d.x(i) - g(2 * k + 1));
      f += r * r;
    }
  }
  for (Eigen::Index m = 0; m < s.rows(); ++m) {
    double row = -s.rhs(m);
    for (Eigen::Index c = 0; c < s.cols(); ++c) row += s.matrix(m, c) * g(c);
    f += alpha * row * row;
  }
  return f;
}

Outcome inner_solve() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<Eigen::Index> kk(1, 4), nn(3, 50);
  std::uniform_real_distribution<double> u(0.0, 1.0), ux(20.0, 80.0), uh(0.5, 2.0);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto k = kk(rng);
    const auto n = nn(rng);
    Dataset d;
    d.x.resize(n);
    d.y.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.x(i) = ux(rng);
      for (Eigen::Index j = 0; j < k; ++j) d.y(i, j) = (0.7 + 0.6 * u(rng)) * d.x(i) + 3.0 * z(rng);
    }
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = u(rng) < 0.15 ? 0.0 : u(rng);
    w(0) = 1.0;
    w(n - 1) = 0.5;
    d.x(n - 1) = d.x(0) + 1.0;  // two distinct weighted x values
    std::vector<double> h(static_cast<std::size_t>(k));
    for (auto& v : h) v = uh(rng);
    const auto sys = build_constraints(h);
    for (double alpha : {0.0, 1.0, 1e3}) {
      const auto got = penalized_wls_solve(d.x, d.y, w, sys, alpha);
      const auto want = oracle::quadratic_minimizer(
          [&](const Eigen::VectorXd& g) { return inner_objective(d, w, sys, alpha, g); }, 2 * k);
      worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    }
  }
  o.require(worst <= 1e-6, "max abs deviation " + fmt(worst));
  if (o.pass) o.detail = "300 solves, max abs deviation " + fmt(worst);
  return o;
}

Outcome decoupling() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(20.0, 80.0);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index k = 1 + rep % 4, n = 10 + rep;
    Dataset d;
    d.x.resize(n);
    d.y.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.x(i) = ux(rng);
      for (Eigen::Index j = 0; j < k; ++j) d.y(i, j) = (0.9 + 0.05 * static_cast<double>(j)) * d.x(i) + 4.0 * z(rng);
    }
    const auto fit = classical_fit(d, build_constraints(std::vector<double>(static_cast<std::size_t>(k), 1.0)), 0.0);
    worst = std::max(worst, (fit.gamma - oracle::per_column_ols(d.x, d.y)).cwiseAbs().maxCoeff());
  }
  o.require(worst <= 1e-8, "max abs deviation " + fmt(worst));
  if (o.pass) o.detail = "50 fits, max abs deviation " + fmt(worst);
  return o;
}

Outcome penalty_sensitivity() {
  Outcome o;
  SyntheticMarketConfig c;
  c.dates = 500;
  c.contamination_fraction = 0.2;
  c.magnitude = 10.0;
  c.consistent_noise = false;  // otherwise every fit is feasible at any penalty
  c.seed = 5;
  const auto m = synthesize_market(c);
  const auto a = build_regression_dataset(m.table, m.spec);
  const auto sys = m.spec.constraints();
  auto fit_at = [&](double mult) {
    FitConfig cfg;
    cfg.alpha = AlphaPolicy::automatic(mult);
    return irls_fit(a.data, sys, cfg);
  };
  std::string gaps;
  const auto low = fit_at(0.01);
  o.require(low.arbitrage_gap_maxabs > 1e-3, "gap at c=0.01 is " + fmt(low.arbitrage_gap_maxabs) + " (needs > 1e-3)");
  gaps = "c=0.01:" + fmt(low.arbitrage_gap_maxabs);
  FitResult at25, at100;
  for (double mult : {2.5, 5.0, 10.0, 100.0}) {
    const auto f = fit_at(mult);
    gaps += " c=" + fmt(mult) + ":" + fmt(f.arbitrage_gap_maxabs);
    o.require(f.arbitrage_gap_maxabs <= 1e-6, "gap at c=" + fmt(mult) + " is " + fmt(f.arbitrage_gap_maxabs));
    if (mult == 2.5) at25 = f;
    if (mult == 100.0) at100 = f;
  }
  const double rel = ((at25.gamma - at100.gamma).array() / at100.gamma.array().abs()).abs().maxCoeff();
  o.require(rel < 0.01, "coefficients at c=2.5 and c=100 differ by " + fmt(100 * rel) + "%");
  o.detail = (o.detail.empty() ? "" : o.detail + "; ") + "gaps " + gaps + ", c=2.5 vs 100 max rel diff " + fmt(rel);
  return o;
}

Outcome paper_tables() {
  Outcome o;
  const auto sys = build_constraints(std::vector<double>(4, 0.25));
  const double robust = max_abs_gap(sys, fixture::robust_table());
  const double classical = max_abs_gap(sys, fixture::classical_table());
  o.require(robust <= 2.5e-3, "robust table gap " + fmt(robust));
  o.require(classical <= 2.5e-3, "classical table gap " + fmt(classical));
  if (o.pass) o.detail = "robust " + fmt(robust) + ", classical " + fmt(classical);
  return o;
}

Outcome ratio_defect() {
  Outcome o;
  const auto b = fixture::ratio_average_betas();
  const std::vector<double> eq(4, 0.25);
  double avg = 0.0;
  for (int k = 0; k < 4; ++k) avg += 0.25 * b(k);
  o.require(std::fabs(avg - 1.000175) <= 5e-5, "weighted average " + fmt(avg));
  const auto r = rescale_to_no_arbitrage(b, eq);
  double after = 0.0;
  for (int k = 0; k < 4; ++k) after += 0.25 * r(k);
  o.require(std::fabs(after - 1.0) <= 1e-12, "rescaled average off by " + fmt(after - 1.0));
  if (o.pass) o.detail = "average " + std::to_string(avg) + ", rescaled error " + fmt(after - 1.0);
  return o;
}

// Shared fixture for the robustness and flagging criteria.
struct Contaminated {
  SyntheticMarket dirty;
  SyntheticMarket clean;
  DateRange train, test;
};

const Contaminated& contaminated() {
  static const Contaminated fx = [] {
    SyntheticMarketConfig c;
    c.dates = 600;
    c.contamination_fraction = 0.2;
    c.magnitude = 10.0;
    c.contaminate_leading = 500;
    c.contaminated_child = 0;
    c.seed = 42;
    Contaminated f;
    f.dirty = synthesize_market(c);
    c.contamination_fraction = 0.0;
    f.clean = synthesize_market(c);
    f.train = {f.dirty.dates.front(), f.dirty.dates[499]};
    f.test = {f.dirty.dates[500], f.dirty.dates.back()};
    return f;
  }();
  return fx;
}

Outcome robustness_ordering() {
  Outcome o;
  const auto& fx = contaminated();
  const auto report = backtest(fx.dirty.table, fx.dirty.spec, fx.train, fx.test, {"mcrm", "classical"});
  o.require(report.train_cases == 500 && report.test_cases == 100, "fixture sizes are wrong");
  const double rob = report.row("mcrm").out_of_sample.med_se;
  const double cls = report.row("classical").out_of_sample.med_se;
  o.require(rob < cls, "robust out-of-sample med_se " + fmt(rob) + " vs classical " + fmt(cls));
  // Reference: least squares on the train cases that were not contaminated.
  const auto train = build_regression_dataset(fx.dirty.table, fx.dirty.spec, fx.train);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < train.data.cases(); ++i) {
    if (!fx.dirty.contaminated[static_cast<std::size_t>(i)]) keep.push_back(i);
  }
  const auto sys = fx.dirty.spec.constraints();
  const auto reference = classical_fit(train.data.subset(keep), sys, FitConfig{}.alpha);
  const double dev_rob = (report.fits[0].gamma - reference.gamma).norm();
  const double dev_cls = (report.fits[1].gamma - reference.gamma).norm();
  o.require(dev_rob < 0.2 * dev_cls, "robust deviation " + fmt(dev_rob) + " vs classical " + fmt(dev_cls));
  // Same ratio against least squares on the uncontaminated twin market (informational).
  const auto twin = build_regression_dataset(fx.clean.table, fx.clean.spec, fx.train);
  const auto twin_fit = classical_fit(twin.data, sys, FitConfig{}.alpha);
  const double twin_ratio =
      (report.fits[0].gamma - twin_fit.gamma).norm() / (report.fits[1].gamma - twin_fit.gamma).norm();
  o.detail = (o.detail.empty() ? "" : o.detail + "; ") + "med_se robust " + fmt(rob) + " classical " + fmt(cls) +
             ", deviation ratio " + fmt(dev_rob / dev_cls) +
             " (vs twin market " + fmt(twin_ratio) + ")";
  return o;
}

Outcome outlier_detection() {
  Outcome o;
  const auto& fx = contaminated();
  const auto a = build_regression_dataset(fx.dirty.table, fx.dirty.spec, fx.train);
  const auto fit = irls_fit(a.data, fx.dirty.spec.constraints(), FitConfig{});
  int outliers = 0, caught = 0, clean = 0, false_flags = 0;
  for (Eigen::Index i = 0; i < a.data.cases(); ++i) {
    const bool dirty = fx.dirty.contaminated[static_cast<std::size_t>(i)];
    const bool flagged = fit.case_weights(i) < 0.6;
    if (dirty) {
      ++outliers;
      caught += flagged;
    } else {
      ++clean;
      false_flags += flagged;
    }
  }
  const double hit = static_cast<double>(caught) / outliers;
  const double fp = static_cast<double>(false_flags) / clean;
  o.require(hit >= 0.95, "only " + fmt(100 * hit) + "% of outliers flagged");
  o.require(fp <= 0.05, fmt(100 * fp) + "% of clean cases flagged");
  o.detail = (o.detail.empty() ? "" : o.detail + "; ") + std::to_string(caught) + "/" + std::to_string(outliers) +
             " outliers, " + std::to_string(false_flags) + "/" + std::to_string(clean) + " clean cases flagged";
  return o;
}

std::vector<AffineCoefficient> random_free(std::mt19937_64& rng, const std::vector<double>& h) {
  std::uniform_real_distribution<double> a(0.6, 1.4), b(-4.0, 4.0);
  std::vector<AffineCoefficient> c(h.size());
  double sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    c[k] = {a(rng), b(rng)};
    sa += h[k] * c[k].slope;
    sb += h[k] * c[k].intercept;
  }
  for (auto& x : c) {
    x.slope /= sa;
    x.intercept -= sb;
  }
  return c;
}

Outcome cascade_consistency() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> year(2010, 2030);
  std::uniform_real_distribution<double> price(20.0, 90.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    ShapingCascade c;
    c.calendar.dst_aware = rep % 2 == 1;
    c.gap_tolerance = 1e-9;
    c.levels = {{"YtQ", Granularity::Quarter, WeightMode::Hours, {}, {}},
                {"QtM", Granularity::Month, WeightMode::Hours, {}, {}},
                {"MtD", Granularity::DayType, WeightMode::Hours, {}, {}},
                {"DtH", Granularity::Hour, WeightMode::Hours, {}, {}}};
    const auto root = DeliveryPeriod::year(year(rng));
    auto weights_of = [&](const DeliveryPeriod& p, Granularity g) {
      return build_split(p, children_of(p, g), c.calendar).weights;
    };
    c.levels[0].coefficients["*"] = random_free(rng, weights_of(root, Granularity::Quarter));
    for (const auto& q : children_of(root, Granularity::Quarter)) {
      c.levels[1].coefficients[q.lookup_keys().front()] = random_free(rng, weights_of(q, Granularity::Month));
      for (const auto& m : children_of(q, Granularity::Month)) {
        c.levels[2].coefficients[m.lookup_keys().front()] = random_free(rng, weights_of(m, Granularity::DayType));
        for (const auto& t : children_of(m, Granularity::DayType)) {
          c.levels[3].coefficients[t.lookup_keys().front()] = random_free(rng, weights_of(t, Granularity::Hour));
        }
      }
    }
    const double p = price(rng);
    const auto hours = shape_curve(p, root, c, Granularity::Hour);
    double total = 0.0, count = 0.0;
    for (const auto& h : hours) {
      const double w = static_cast<double>(delivery_hours(h.period, c.calendar));
      if (w > 0.0) total += w * h.price;
      count += w;
    }
    worst = std::max(worst, std::fabs(total / count - p) / p);
  }
  o.require(worst <= 1e-9, "hourly mean off by " + fmt(worst) + " relative");

  // Recalibration with a traded child.
  std::uniform_real_distribution<double> ux(30.0, 70.0), u(0.0, 1.0);
  std::normal_distribution<double> z;
  double worst_gap = 0.0, worst_match = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index k = 2 + rep % 3;
    std::vector<double> h(static_cast<std::size_t>(k));
    for (auto& v : h) v = 0.5 + u(rng);
    const auto truth = random_free(rng, h);
    Dataset d;
    d.x.resize(80);
    d.y.resize(80, k);
    for (Eigen::Index i = 0; i < 80; ++i) {
      d.x(i) = ux(rng);
      for (Eigen::Index j = 0; j < k; ++j) {
        d.y(i, j) = truth[static_cast<std::size_t>(j)].slope * d.x(i) + truth[static_cast<std::size_t>(j)].intercept +
                    (u(rng) < 0.1 ? 15.0 : 1.0) * z(rng);
      }
    }
    const auto sys = build_constraints(h);
    const Eigen::Index child = rep % k;
    const double parent = ux(rng);
    const double traded = truth[static_cast<std::size_t>(child)].slope * parent + 3.0 * z(rng);
    std::map<Eigen::Index, TradedChild> spec;
    const bool market = rep % 2 == 0;
    if (market) {
      auto t = TradedChild::market(traded, parent);
      t.solve_intercept = rep % 4 == 0;
      spec[child] = t;
    } else {
      spec[child] = TradedChild::fixed(truth[static_cast<std::size_t>(child)].slope + 0.05 * z(rng), z(rng));
    }
    const auto fit = recalibrate_with_traded(d, sys, FitConfig{}, spec);
    worst_gap = std::max(worst_gap, max_abs_gap(sys, fit.gamma));
    if (market) worst_match = std::max(worst_match, std::fabs(fit.slope(child) * parent + fit.intercept(child) - traded));
  }
  o.require(worst_gap <= 1e-6, "recalibrated gap " + fmt(worst_gap));
  o.require(worst_match <= 1e-9, "traded price missed by " + fmt(worst_match));
  o.detail = (o.detail.empty() ? "" : o.detail + "; ") + "hourly mean rel err " + fmt(worst) +
             ", recalibrated gap " + fmt(worst_gap) + ", traded price err " + fmt(worst_match);
  return o;
}

Outcome metrics() {
  Outcome o;
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 3, 3;
  const auto m = compute_metrics(a, Eigen::MatrixXd::Zero(2, 2));
  o.require(m.mean_ae == 2 && m.med_ae == 2 && m.mean_se == 5 && m.med_se == 5, "hand instance mismatch");
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> dim(1, 30);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = dim(rng), k = dim(rng);
    Eigen::MatrixXd x(n, k), p(n, k);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        x(i, j) = 45 + 10 * z(rng);
        p(i, j) = 45 + 10 * z(rng);
      }
    }
    const auto got = compute_metrics(x, p);
    const auto want = oracle::metrics_loop(x, p);
    worst = std::max({worst, std::fabs(got.mean_ae - want.mean_ae), std::fabs(got.med_ae - want.med_ae),
                      std::fabs(got.mean_se - want.mean_se), std::fabs(got.med_se - want.med_se)});
  }
  o.require(worst <= 1e-12, "oracle deviation " + fmt(worst));
  if (o.pass) o.detail = "hand instance exact, oracle deviation " + fmt(worst);
  return o;
}

Outcome relative_codes() {
  Outcome o;
  const Day q0 = parse_date("2012-05-03");
  o.require(resolve_relative({RelativeKind::Day, 1}, q0) == DeliveryPeriod::day(parse_date("2012-05-04")),
            "D+1 on 2012-05-03");
  const char* dates[] = {"2012-05-03", "2012-12-28", "2012-12-31", "2013-01-01", "2011-12-30",
                         "2013-09-30", "2014-03-29", "2015-12-27", "2016-02-29", "2020-12-31"};
  const std::pair<RelativeKind, char> kinds[] = {
      {RelativeKind::Weekend, 'E'}, {RelativeKind::Week, 'W'}, {RelativeKind::Month, 'M'},
      {RelativeKind::Quarter, 'Q'}, {RelativeKind::Year, 'Y'}};
  int cases = 0, wrong = 0;
  for (std::size_t i = 0; i < std::size(dates); ++i) {
    const Day q = parse_date(dates[i]);
    for (const auto& [kind, tag] : kinds) {
      const int n = 1 + static_cast<int>((i + static_cast<std::size_t>(tag)) % 3);
      const auto got = resolve_relative({kind, n}, q);
      const auto want = oracle::relative_window(tag, n, q);
      ++cases;
      if (got.first != want.first || got.last != want.last) {
        ++wrong;
        o.require(false, std::string(dates[i]) + " " + tag + "+" + std::to_string(n));
      }
    }
  }
  o.require(cases == 50, "expected 50 oracle cases");
  if (o.pass) o.detail = "D+1 ok, " + std::to_string(cases) + " oracle cases agree";
  return o;
}

}  // namespace

int main() {
  run(1, "Qn oracle equivalence", qn_oracle);
  run(2, "weight-function anchors", weight_anchors);
  run(3, "inner-solve oracle", inner_solve);
  run(4, "decoupling at zero penalty", decoupling);
  run(5, "penalty sensitivity", penalty_sensitivity);
  run(6, "printed coefficient tables", paper_tables);
  run(7, "simple-average defect", ratio_defect);
  run(8, "robustness ordering", robustness_ordering);
  run(9, "outlier detection", outlier_detection);
  run(10, "cascade consistency and recalibration", cascade_consistency);
  run(11, "metrics correctness", metrics);
  run(12, "relative-code resolution", relative_codes);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures;
}
