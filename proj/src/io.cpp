#include "fwdshape/io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fwdshape/error.hpp"

namespace fwdshape {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed ") + what + ": " + e.what());
  }
}

// Wraps lookups so type errors surface as Data errors naming the key.
template <typename T>
T get(const json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Data, std::string(what) + ": missing or invalid '" + key + "'");
  }
}

std::string weight_mode_name(WeightMode m) {
  switch (m) {
    case WeightMode::Hours: return "hours";
    case WeightMode::Equal: return "equal";
    case WeightMode::Explicit: return "explicit";
  }
  return "hours";
}

void read_weights(const json& j, WeightMode& mode, std::vector<double>& explicit_weights, const char* what) {
  if (!j.contains("weights")) {
    mode = WeightMode::Hours;
    return;
  }
  const auto& w = j.at("weights");
  if (w.is_string()) {
    const auto s = w.get<std::string>();
    if (s == "hours") {
      mode = WeightMode::Hours;
    } else if (s == "equal") {
      mode = WeightMode::Equal;
    } else {
      fail(ErrorKind::Data, std::string(what) + ": weights must be \"hours\", \"equal\" or a list");
    }
  } else if (w.is_array()) {
    mode = WeightMode::Explicit;
    try {
      explicit_weights = w.get<std::vector<double>>();
    } catch (const json::exception&) {
      fail(ErrorKind::Data, std::string(what) + ": weights list must hold numbers");
    }
  } else {
    fail(ErrorKind::Data, std::string(what) + ": weights must be \"hours\", \"equal\" or a list");
  }
}

json weights_json(WeightMode mode, const std::vector<double>& explicit_weights) {
  if (mode == WeightMode::Explicit) return explicit_weights;
  return weight_mode_name(mode);
}

Granularity granularity_of(const json& j, const char* key, const char* what) {
  const auto name = get<std::string>(j, key, what);
  try {
    return parse_granularity(name);
  } catch (const Error& e) {
    fail(ErrorKind::Data, std::string(what) + ": " + e.what());
  }
}

DeliveryPeriod period_of(const std::string& code, const char* what) {
  try {
    return parse_period(code);
  } catch (const Error& e) {
    fail(ErrorKind::Data, std::string(what) + ": " + e.what());
  }
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void apply_fit_json(const json& j, FitConfig& c) {
  constexpr const char* what = "fit config";
  if (!j.is_object()) fail(ErrorKind::Data, "fit config must be an object");
  if (j.contains("weight_function")) {
    const auto& w = j.at("weight_function");
    const auto kind = get<std::string>(w, "kind", what);
    if (kind == "hampel") {
      c.weight_spec = WeightFunctionSpec::hampel(w.value("a", kHampelA), w.value("b", kHampelB), w.value("r", kHampelR));
    } else if (kind == "bisquare") {
      c.weight_spec = WeightFunctionSpec::bisquare(w.value("k", kBisquareK));
    } else {
      fail(ErrorKind::Data, "fit config: unknown weight function '" + kind + "'");
    }
  }
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    if (a.is_string() && a.get<std::string>() == "auto") {
      c.alpha = AlphaPolicy::automatic();
    } else if (a.is_number()) {
      c.alpha = AlphaPolicy::fixed(a.get<double>());
    } else if (a.is_object()) {
      const auto mode = get<std::string>(a, "mode", what);
      const double m = a.value("multiplier", 1.0);
      if (mode == "auto") {
        c.alpha = AlphaPolicy::automatic(m);
      } else if (mode == "per-case") {
        c.alpha = AlphaPolicy::per_case(m);
      } else if (mode == "fixed") {
        c.alpha = AlphaPolicy::fixed(m);
      } else {
        fail(ErrorKind::Data, "fit config: unknown alpha mode '" + mode + "'");
      }
    } else {
      fail(ErrorKind::Data, "fit config: alpha must be \"auto\", a number or an object");
    }
  }
  if (j.contains("scale")) {
    const auto s = get<std::string>(j, "scale", what);
    if (s == "mad") {
      c.scale_estimator = ScaleEstimator::Mad;
    } else if (s == "qn") {
      c.scale_estimator = ScaleEstimator::Qn;
    } else {
      fail(ErrorKind::Data, "fit config: scale must be \"mad\" or \"qn\"");
    }
  }
  if (j.contains("tolerance")) c.tolerance = get<double>(j, "tolerance", what);
  if (j.contains("max_iterations")) c.max_iterations = get<int>(j, "max_iterations", what);
  if (j.contains("feasibility_refits")) c.feasibility_refits = get<int>(j, "feasibility_refits", what);
  if (j.contains("gap_tolerance")) c.gap_tolerance = get<double>(j, "gap_tolerance", what);
  if (j.contains("center_for_distances")) c.center_for_distances = get<bool>(j, "center_for_distances", what);
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Data, std::string("fit config: ") + e.what());
  }
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

SplitSpec parse_split_config(std::string_view text) {
  constexpr const char* what = "split config";
  const auto j = parse_json(text, what);
  SplitSpec spec;
  const auto parent = period_of(get<std::string>(j, "parent", what), what);
  spec.parent_family = parent.granularity;
  spec.reference_parent = parent;
  spec.child = granularity_of(j, "children", what);
  read_weights(j, spec.weight_mode, spec.explicit_weights, what);
  spec.calendar.dst_aware = j.value("dst_aware", false);
  try {
    spec.reference_split();
  } catch (const Error& e) {
    fail(ErrorKind::Data, std::string("split config: ") + e.what());
  }
  return spec;
}

std::string split_config_json(const SplitSpec& spec) {
  json j;
  if (!spec.reference_parent) fail(ErrorKind::InvalidArgument, "split has no reference parent");
  j["parent"] = spec.reference_parent->code();
  j["children"] = std::string(to_string(spec.child));
  j["weights"] = weights_json(spec.weight_mode, spec.explicit_weights);
  j["dst_aware"] = spec.calendar.dst_aware;
  return j.dump(2) + "\n";
}

FitConfig parse_fit_config(std::string_view text, FitConfig base) {
  apply_fit_json(parse_json(text, "fit config"), base);
  return base;
}

FitConfig fit_config_of_split(std::string_view split_json, FitConfig base) {
  const auto j = parse_json(split_json, "split config");
  if (j.contains("fit")) apply_fit_json(j.at("fit"), base);
  return base;
}

std::string fit_config_json(const FitConfig& c) {
  json j;
  if (c.weight_spec.kind == WeightKind::Hampel) {
    j["weight_function"] = {{"kind", "hampel"}, {"a", c.weight_spec.hampel_a}, {"b", c.weight_spec.hampel_b},
                            {"r", c.weight_spec.hampel_r}};
  } else {
    j["weight_function"] = {{"kind", "bisquare"}, {"k", c.weight_spec.bisquare_k}};
  }
  const char* mode = c.alpha.mode == AlphaMode::Auto ? "auto" : c.alpha.mode == AlphaMode::PerCase ? "per-case" : "fixed";
  j["alpha"] = {{"mode", mode}, {"multiplier", c.alpha.multiplier}};
  j["scale"] = c.scale_estimator == ScaleEstimator::Mad ? "mad" : "qn";
  j["tolerance"] = c.tolerance;
  j["max_iterations"] = c.max_iterations;
  j["feasibility_refits"] = c.feasibility_refits;
  j["gap_tolerance"] = c.gap_tolerance;
  j["center_for_distances"] = c.center_for_distances;
  return j.dump(2) + "\n";
}

std::string fit_report_json(const FitReport& report) {
  const auto& r = report.result;
  json j;
  j["method"] = r.method;
  if (report.split) {
    const auto& s = *report.split;
    json children = json::array();
    for (const auto& c : s.children) children.push_back(c.code());
    j["split"] = {{"parent", s.parent.code()},
                  {"children_granularity", std::string(to_string(s.children.front().granularity))},
                  {"children", children},
                  {"weights", s.weights}};
  }
  json coeffs = json::array();
  for (Eigen::Index k = 0; k < r.gamma.size() / 2; ++k) {
    const auto label = static_cast<std::size_t>(k) < r.child_labels.size() ? r.child_labels[static_cast<std::size_t>(k)]
                                                                           : "C" + std::to_string(k + 1);
    coeffs.push_back({{"child", label}, {"slope", r.slope(k)}, {"intercept", r.intercept(k)}});
  }
  j["coefficients"] = coeffs;
  j["gamma"] = to_vector(r.gamma);
  json cases = json::array();
  for (Eigen::Index i = 0; i < r.case_weights.size(); ++i) {
    const auto id = static_cast<std::size_t>(i) < r.case_ids.size() ? r.case_ids[static_cast<std::size_t>(i)] : "";
    cases.push_back({{"id", id}, {"weight", r.case_weights(i)}});
  }
  j["cases"] = cases;
  j["diagnostics"] = {{"iterations", r.iterations},
                      {"converged", r.converged},
                      {"degenerate_scale", r.degenerate_scale},
                      {"feasibility_refits", r.feasibility_refits},
                      {"arbitrage_gap_maxabs", r.arbitrage_gap_maxabs},
                      {"residual_scales", to_vector(r.residual_scales)},
                      {"alpha", r.alpha_used}};
  return j.dump(2) + "\n";
}

FitReport parse_fit_report(std::string_view text) {
  constexpr const char* what = "fit report";
  const auto j = parse_json(text, what);
  FitReport report;
  auto& r = report.result;
  r.method = get<std::string>(j, "method", what);
  r.gamma = to_eigen(get<std::vector<double>>(j, "gamma", what));
  if (r.gamma.size() < 2 || r.gamma.size() % 2 != 0) fail(ErrorKind::Data, "fit report: gamma needs (slope, intercept) pairs");
  for (const auto& c : j.at("coefficients")) r.child_labels.push_back(get<std::string>(c, "child", what));
  if (j.contains("cases")) {
    std::vector<double> w;
    for (const auto& c : j.at("cases")) {
      r.case_ids.push_back(get<std::string>(c, "id", what));
      w.push_back(get<double>(c, "weight", what));
    }
    r.case_weights = to_eigen(w);
  }
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    r.iterations = get<int>(d, "iterations", what);
    r.converged = get<bool>(d, "converged", what);
    r.degenerate_scale = get<bool>(d, "degenerate_scale", what);
    r.feasibility_refits = get<int>(d, "feasibility_refits", what);
    r.arbitrage_gap_maxabs = get<double>(d, "arbitrage_gap_maxabs", what);
    r.residual_scales = to_eigen(get<std::vector<double>>(d, "residual_scales", what));
    r.alpha_used = get<double>(d, "alpha", what);
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    GranularitySplit split;
    split.parent = period_of(get<std::string>(s, "parent", what), what);
    for (const auto& c : s.at("children")) split.children.push_back(period_of(c.get<std::string>(), what));
    split.weights = get<std::vector<double>>(s, "weights", what);
    if (static_cast<Eigen::Index>(split.size()) * 2 != r.gamma.size()) {
      fail(ErrorKind::Data, "fit report: split and gamma disagree on the number of children");
    }
    report.split = std::move(split);
  }
  return report;
}

CascadeLevel level_from_report(const FitReport& report, std::string name) {
  if (!report.split) fail(ErrorKind::InvalidArgument, "fit report carries no split");
  CascadeLevel level;
  level.name = std::move(name);
  level.child = report.split->children.front().granularity;
  level.weight_mode = WeightMode::Explicit;
  level.explicit_weights = report.split->weights;
  level.coefficients["*"] = coefficients_of(report.result.gamma);
  return level;
}

ShapingCascade parse_cascade_config(std::string_view text) {
  constexpr const char* what = "cascade config";
  const auto j = parse_json(text, what);
  ShapingCascade c;
  if (j.contains("root")) c.root = period_of(get<std::string>(j, "root", what), what);
  c.gap_tolerance = j.value("gap_tolerance", 1e-6);
  c.allow_arbitrage = j.value("allow_arbitrage", false);
  c.calendar.dst_aware = j.value("dst_aware", false);
  if (!j.contains("levels") || !j.at("levels").is_array()) fail(ErrorKind::Data, "cascade config: missing 'levels' list");
  for (const auto& lj : j.at("levels")) {
    CascadeLevel level;
    level.child = granularity_of(lj, "children", what);
    level.name = lj.value("name", std::string(to_string(level.child)));
    read_weights(lj, level.weight_mode, level.explicit_weights, what);
    if (lj.contains("coefficients")) {
      for (const auto& [key, pairs] : lj.at("coefficients").items()) {
        std::vector<AffineCoefficient> coeffs;
        for (const auto& p : pairs) {
          if (!p.is_array() || p.size() != 2) fail(ErrorKind::Data, "cascade config: coefficients are [slope, intercept] pairs");
          coeffs.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        level.coefficients[key] = std::move(coeffs);
      }
    }
    c.levels.push_back(std::move(level));
  }
  return c;
}

std::string cascade_config_json(const ShapingCascade& cascade) {
  json j;
  if (cascade.root) j["root"] = cascade.root->code();
  j["gap_tolerance"] = cascade.gap_tolerance;
  j["allow_arbitrage"] = cascade.allow_arbitrage;
  j["dst_aware"] = cascade.calendar.dst_aware;
  json levels = json::array();
  for (const auto& l : cascade.levels) {
    json lj;
    lj["name"] = l.name;
    lj["children"] = std::string(to_string(l.child));
    lj["weights"] = weights_json(l.weight_mode, l.explicit_weights);
    json coeffs = json::object();
    for (const auto& [key, list] : l.coefficients) {
      json pairs = json::array();
      for (const auto& c : list) pairs.push_back({c.slope, c.intercept});
      coeffs[key] = pairs;
    }
    lj["coefficients"] = coeffs;
    levels.push_back(lj);
  }
  j["levels"] = levels;
  return j.dump(2) + "\n";
}

std::string completeness_json(const CompletenessReport& report) {
  json j;
  j["candidate_rows"] = report.candidate_rows;
  j["complete_rows"] = report.complete_rows;
  j["dropped_rows"] = report.dropped_rows;
  json missing = json::object();
  for (std::size_t k = 0; k < report.missing_per_child.size(); ++k) {
    const auto label = k < report.child_labels.size() ? report.child_labels[k] : std::to_string(k + 1);
    missing[label] = report.missing_per_child[k];
  }
  j["missing_per_child"] = missing;
  return j.dump(2) + "\n";
}

}  // namespace fwdshape
