#include "fwdshape/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "fwdshape/error.hpp"

namespace fwdshape {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double column_median(const Eigen::MatrixXd& m, Eigen::Index col) {
  const Eigen::VectorXd c = m.col(col);
  return median(to_vector(c));
}

void check_fixed(const std::map<Eigen::Index, double>& fixed, Eigen::Index n) {
  for (const auto& [idx, value] : fixed) {
    if (idx < 0 || idx >= n) fail(ErrorKind::InvalidArgument, "fixed coefficient index out of range");
    if (!std::isfinite(value)) fail(ErrorKind::InvalidArgument, "fixed coefficient must be finite");
  }
}

}  // namespace

void Dataset::validate() const {
  if (x.size() < 3) fail(ErrorKind::Data, "dataset needs at least 3 cases");
  if (y.rows() != x.size()) fail(ErrorKind::Data, "x and y row counts differ");
  if (y.cols() < 1) fail(ErrorKind::Data, "dataset needs at least one child column");
  if (!x.allFinite() || !y.allFinite()) fail(ErrorKind::Data, "dataset contains non-finite prices");
  if (x.maxCoeff() == x.minCoeff()) fail(ErrorKind::Data, "parent prices are constant; slopes are not identifiable");
  if (!case_ids.empty() && static_cast<Eigen::Index>(case_ids.size()) != x.size()) {
    fail(ErrorKind::Data, "case id count does not match cases");
  }
  if (!child_labels.empty() && static_cast<Eigen::Index>(child_labels.size()) != y.cols()) {
    fail(ErrorKind::Data, "child label count does not match columns");
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()));
  out.y.resize(static_cast<Eigen::Index>(rows.size()), y.cols());
  out.child_labels = child_labels;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    out.x(static_cast<Eigen::Index>(i)) = x(r);
    out.y.row(static_cast<Eigen::Index>(i)) = y.row(r);
    if (!case_ids.empty()) out.case_ids.push_back(case_ids[static_cast<std::size_t>(r)]);
  }
  return out;
}

void FitConfig::validate() const {
  weight_spec.validate();
  if (!(tolerance > 0.0)) fail(ErrorKind::InvalidArgument, "tolerance must be positive");
  if (max_iterations < 1) fail(ErrorKind::InvalidArgument, "max_iterations must be >= 1");
  if (!(alpha.multiplier >= 0.0) || !std::isfinite(alpha.multiplier)) {
    fail(ErrorKind::InvalidArgument, "alpha must be a finite non-negative number");
  }
  if (feasibility_refits < 0) fail(ErrorKind::InvalidArgument, "feasibility_refits must be >= 0");
}

double resolve_alpha(const AlphaPolicy& policy, const Dataset& data) {
  const double n = static_cast<double>(data.cases());
  switch (policy.mode) {
    case AlphaMode::Auto: {
      const std::vector<double> pooled(data.y.data(), data.y.data() + data.y.size());
      return policy.multiplier * n * qn_scale(pooled);
    }
    case AlphaMode::PerCase: return policy.multiplier * n;
    case AlphaMode::Fixed: return policy.multiplier;
  }
  return policy.multiplier;
}

Eigen::MatrixXd FitResult::predict(const Eigen::VectorXd& x) const {
  const Eigen::Index k = gamma.size() / 2;
  Eigen::MatrixXd out(x.size(), k);
  for (Eigen::Index j = 0; j < k; ++j) out.col(j) = (x * slope(j)).array() + intercept(j);
  return out;
}

InitialWeights initial_weights(const Dataset& data, const WeightFunctionSpec& spec, bool center) {
  data.validate();
  spec.validate();
  const Eigen::Index n = data.cases();
  const Eigen::Index k = data.children();
  constexpr double kFloor = std::numeric_limits<double>::min();
  InitialWeights out;

  const double med_x = median(to_vector(data.x));
  const Eigen::VectorXd dev_x = (data.x.array() - med_x).abs();
  double denom_x = kMadConsistency * median(to_vector(dev_x));
  if (!(denom_x > 0.0)) {
    denom_x = kFloor;
    out.degenerate_scale = true;
  }
  out.x_distances = dev_x / denom_x;

  Eigen::RowVectorXd centre = Eigen::RowVectorXd::Zero(k);
  if (center) {
    for (Eigen::Index j = 0; j < k; ++j) centre(j) = column_median(data.y, j);
  }
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) norms(i) = (data.y.row(i) - centre).norm();
  double denom_y = median(to_vector(norms));
  if (!(denom_y > 0.0)) {
    denom_y = kFloor;
    out.degenerate_scale = true;
  }
  out.y_distances = norms / denom_y;

  out.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.weights(i) = std::sqrt(spec(out.x_distances(i)) * spec(out.y_distances(i)));
  }
  return out;
}

Eigen::VectorXd penalized_wls_solve(const Eigen::VectorXd& x, const Eigen::MatrixXd& y,
                                    const Eigen::VectorXd& case_weights, const ConstraintSystem& system,
                                    double alpha, const std::map<Eigen::Index, double>& fixed) {
  const Eigen::Index n = x.size();
  const Eigen::Index k = y.cols();
  const Eigen::Index dim = 2 * k;
  if (y.rows() != n || case_weights.size() != n) fail(ErrorKind::InvalidArgument, "dimension mismatch in weighted solve");
  if (system.cols() != dim) fail(ErrorKind::InvalidArgument, "constraint columns must equal 2K");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "alpha must be finite and >= 0");
  check_fixed(fixed, dim);

  const Eigen::VectorXd w2 = case_weights.array().square();
  const double s0 = w2.sum();
  const double s1 = w2.dot(x);
  const double s2 = w2.dot(x.cwiseProduct(x));
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) positive += case_weights(i) > 0.0 ? 1 : 0;
  // Weighted variance of x relative to its second moment.
  if (positive < 2 || !(s0 > 0.0) || s0 * s2 - s1 * s1 <= 1e-13 * s0 * s2) {
    fail(ErrorKind::Numerical, "rank-deficient weighted design");
  }

  Eigen::MatrixXd hess = alpha * system.matrix.transpose() * system.matrix;
  Eigen::VectorXd grad = alpha * system.matrix.transpose() * system.rhs;
  const Eigen::VectorXd w2x = w2.cwiseProduct(x);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto a = slope_index(j);
    const auto b = intercept_index(j);
    hess(a, a) += s2;
    hess(a, b) += s1;
    hess(b, a) += s1;
    hess(b, b) += s0;
    grad(a) += w2x.dot(y.col(j));
    grad(b) += w2.dot(y.col(j));
  }

  std::vector<Eigen::Index> free_idx;
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (auto it = fixed.find(j); it != fixed.end()) {
      gamma(j) = it->second;
    } else {
      free_idx.push_back(j);
    }
  }
  if (free_idx.empty()) return gamma;

  const auto m = static_cast<Eigen::Index>(free_idx.size());
  Eigen::MatrixXd h_ff(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto fr = free_idx[static_cast<std::size_t>(r)];
    rhs(r) = grad(fr);
    for (const auto& [idx, value] : fixed) rhs(r) -= hess(fr, idx) * value;
    for (Eigen::Index c = 0; c < m; ++c) h_ff(r, c) = hess(fr, free_idx[static_cast<std::size_t>(c)]);
  }

  // Symmetric diagonal equilibration before the factorization.
  const Eigen::VectorXd d = h_ff.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = d.asDiagonal() * h_ff * d.asDiagonal();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !h_ff.diagonal().allFinite() || pivots.minCoeff() <= 1e-14 * pivots.maxCoeff()) {
    fail(ErrorKind::Numerical, "rank-deficient weighted design");
  }
  const Eigen::VectorXd sol = d.asDiagonal() * ldlt.solve(d.asDiagonal() * rhs);
  for (Eigen::Index r = 0; r < m; ++r) gamma(free_idx[static_cast<std::size_t>(r)]) = sol(r);
  return gamma;
}

ResidualDistances residual_distances(const Eigen::MatrixXd& residuals, double zero_scale, ScaleEstimator scale) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index k = residuals.cols();
  if (n < 3) fail(ErrorKind::Data, "residual distances need at least 3 cases");
  if (k < 1) fail(ErrorKind::Data, "residual distances need at least one column");
  ResidualDistances out;
  out.column_scales.resize(k);
  Eigen::MatrixXd z(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const std::vector<double> col = to_vector(residuals.col(j));
    const double centre = median(col);
    const double s = scale == ScaleEstimator::Mad ? mad_scale(col) : qn_scale(col);
    out.column_scales(j) = s;
    if (!(s > zero_scale)) {
      z.col(j).setZero();
      out.degenerate_scale = true;
    } else {
      z.col(j) = (residuals.col(j).array() - centre) / s;
    }
  }
  out.distances = z.rowwise().norm() / std::sqrt(static_cast<double>(k));
  return out;
}

Eigen::MatrixXd residuals_of(const Dataset& data, const Eigen::VectorXd& gamma) {
  const Eigen::Index k = data.children();
  if (gamma.size() != 2 * k) fail(ErrorKind::InvalidArgument, "gamma length must be 2K");
  Eigen::MatrixXd r(data.cases(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    r.col(j) = data.y.col(j).array() - gamma(slope_index(j)) * data.x.array() - gamma(intercept_index(j));
  }
  return r;
}

namespace {

FitResult run_irls(const Dataset& data, const ConstraintSystem& system, const FitConfig& config,
                   const std::map<Eigen::Index, double>& fixed, const InitialWeights& init, double alpha) {
  const Eigen::Index n = data.cases();
  const Eigen::Index k = data.children();
  const double zero_scale = 1e-12 * (1.0 + data.y.cwiseAbs().maxCoeff());

  Eigen::VectorXd x_weight(n);
  for (Eigen::Index i = 0; i < n; ++i) x_weight(i) = config.weight_spec(init.x_distances(i));

  FitResult res;
  res.method = "mcrm";
  res.alpha_used = alpha;
  res.converged = false;
  res.degenerate_scale = init.degenerate_scale;

  Eigen::VectorXd weights = init.weights;
  Eigen::VectorXd prev_intercepts;
  for (int t = 1; t <= config.max_iterations; ++t) {
    res.gamma = penalized_wls_solve(data.x, data.y, weights, system, alpha, fixed);
    // Distances come from unweighted residuals: weighted residuals of
    // zero-weight cases are identically zero and would re-enter at weight one.
    const auto rd = residual_distances(residuals_of(data, res.gamma), zero_scale, config.scale_estimator);
    Eigen::VectorXd updated(n);
    for (Eigen::Index i = 0; i < n; ++i) updated(i) = std::sqrt(x_weight(i) * config.weight_spec(rd.distances(i)));

    Eigen::VectorXd intercepts(k);
    for (Eigen::Index j = 0; j < k; ++j) intercepts(j) = res.gamma(intercept_index(j));
    res.iterations = t;
    res.residual_scales = rd.column_scales;
    res.degenerate_scale = init.degenerate_scale || rd.degenerate_scale;
    weights = updated;
    if (t > 1 && (intercepts - prev_intercepts).cwiseAbs().maxCoeff() < config.tolerance) {
      res.converged = true;
      break;
    }
    prev_intercepts = intercepts;
  }
  res.case_weights = weights;
  res.arbitrage_gap_maxabs = max_abs_gap(system, res.gamma);
  return res;
}

std::vector<std::string> ids_or_index(const Dataset& data) {
  if (!data.case_ids.empty()) return data.case_ids;
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < data.cases(); ++i) ids.push_back(std::to_string(i));
  return ids;
}

}  // namespace

FitResult irls_fit(const Dataset& data, const ConstraintSystem& system, const FitConfig& config,
                   const std::map<Eigen::Index, double>& fixed) {
  data.validate();
  config.validate();
  if (system.cols() != 2 * data.children()) fail(ErrorKind::InvalidArgument, "constraint columns must equal 2K");
  check_fixed(fixed, system.cols());

  const auto init = initial_weights(data, config.weight_spec, config.center_for_distances);
  double alpha = resolve_alpha(config.alpha, data);
  FitResult res = run_irls(data, system, config, fixed, init, alpha);
  for (int refit = 1; refit <= config.feasibility_refits && res.arbitrage_gap_maxabs > config.gap_tolerance; ++refit) {
    alpha = (alpha > 0.0 ? alpha : 1.0) * 10.0;
    res = run_irls(data, system, config, fixed, init, alpha);
    res.feasibility_refits = refit;
  }
  res.case_ids = ids_or_index(data);
  res.child_labels = data.child_labels;
  return res;
}

FitResult classical_fit(const Dataset& data, const ConstraintSystem& system, double alpha) {
  data.validate();
  if (system.cols() != 2 * data.children()) fail(ErrorKind::InvalidArgument, "constraint columns must equal 2K");
  FitResult res;
  res.method = "classical";
  res.case_weights = Eigen::VectorXd::Ones(data.cases());
  res.gamma = penalized_wls_solve(data.x, data.y, res.case_weights, system, alpha);
  res.iterations = 1;
  res.alpha_used = alpha;
  const auto rd = residual_distances(residuals_of(data, res.gamma), 1e-12 * (1.0 + data.y.cwiseAbs().maxCoeff()));
  res.residual_scales = rd.column_scales;
  res.degenerate_scale = rd.degenerate_scale;
  res.arbitrage_gap_maxabs = max_abs_gap(system, res.gamma);
  res.case_ids = ids_or_index(data);
  res.child_labels = data.child_labels;
  return res;
}

FitResult classical_fit(const Dataset& data, const ConstraintSystem& system, const AlphaPolicy& alpha) {
  data.validate();
  return classical_fit(data, system, resolve_alpha(alpha, data));
}

std::vector<FlaggedCase> outlier_report(const FitResult& result, double threshold) {
  std::vector<FlaggedCase> out;
  for (Eigen::Index i = 0; i < result.case_weights.size(); ++i) {
    if (result.case_weights(i) < threshold) {
      const auto id = static_cast<std::size_t>(i) < result.case_ids.size() ? result.case_ids[static_cast<std::size_t>(i)]
                                                                            : std::to_string(i);
      out.push_back({id, i, result.case_weights(i)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const FlaggedCase& a, const FlaggedCase& b) { return a.weight < b.weight; });
  return out;
}

}  // namespace fwdshape
