#include "fwdshape/constraints.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "fwdshape/error.hpp"

namespace fwdshape {

namespace chr = std::chrono;

std::vector<std::string> GranularitySplit::labels() const {
  std::vector<std::string> out;
  out.reserve(children.size());
  for (const auto& c : children) out.push_back(c.label());
  return out;
}

void GranularitySplit::validate() const {
  if (children.empty()) fail(ErrorKind::InvalidArgument, "split needs at least one child");
  if (weights.size() != children.size()) fail(ErrorKind::InvalidArgument, "one weight per child required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorKind::InvalidArgument, "split weights must be positive");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "split weights must sum to one");
}

GranularitySplit build_split(const DeliveryPeriod& parent, std::vector<DeliveryPeriod> children,
                             const CalendarConfig& calendar) {
  if (children.empty()) fail(ErrorKind::InvalidArgument, "split needs at least one child");
  // Cell-level tiling check: every parent (day, hour) cell in exactly one child.
  std::set<std::pair<std::int64_t, int>> seen;
  std::size_t child_cells = 0;
  for (const auto& child : children) {
    if (!parent.contains(child)) fail(ErrorKind::InvalidArgument, "children do not partition parent");
    for (Day d = child.first; d <= child.last; d += chr::days{1}) {
      if (!matches(child.days, d)) continue;
      for (int h = child.hour_first; h <= child.hour_last; ++h) {
        ++child_cells;
        if (!seen.emplace(d.time_since_epoch().count(), h).second) {
          fail(ErrorKind::InvalidArgument, "children do not partition parent");
        }
      }
    }
  }
  std::size_t parent_cells = 0;
  for (Day d = parent.first; d <= parent.last; d += chr::days{1}) {
    if (matches(parent.days, d)) parent_cells += static_cast<std::size_t>(parent.hour_last - parent.hour_first + 1);
  }
  if (parent_cells != child_cells) fail(ErrorKind::InvalidArgument, "children do not partition parent");

  const double parent_hours = static_cast<double>(delivery_hours(parent, calendar));
  GranularitySplit split{parent, std::move(children), {}};
  split.weights.reserve(split.children.size());
  for (const auto& child : split.children) {
    split.weights.push_back(static_cast<double>(delivery_hours(child, calendar)) / parent_hours);
  }
  return split;
}

GranularitySplit with_weights(GranularitySplit split, std::vector<double> weights) {
  if (weights.size() != split.children.size()) fail(ErrorKind::InvalidArgument, "one weight per child required");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) fail(ErrorKind::InvalidArgument, "split weights must be positive");
  for (double& w : weights) w /= total;
  split.weights = std::move(weights);
  split.validate();
  return split;
}

GranularitySplit with_equal_weights(GranularitySplit split) {
  const std::size_t k = split.children.size();
  return with_weights(std::move(split), std::vector<double>(k, 1.0));
}

ConstraintSystem build_constraints(const std::vector<double>& weights) {
  const auto k = static_cast<Eigen::Index>(weights.size());
  if (k < 1) fail(ErrorKind::InvalidArgument, "split needs at least one child");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorKind::InvalidArgument, "split weights must be positive");
    total += w;
  }
  ConstraintSystem sys{Eigen::MatrixXd::Zero(2, 2 * k), Eigen::VectorXd::Zero(2)};
  for (Eigen::Index j = 0; j < k; ++j) {
    sys.matrix(0, slope_index(j)) = weights[static_cast<std::size_t>(j)] / total;
    sys.matrix(1, intercept_index(j)) = weights[static_cast<std::size_t>(j)] / total;
  }
  sys.rhs(0) = 1.0;
  return sys;
}

ConstraintSystem build_constraints(const GranularitySplit& split) {
  split.validate();
  return build_constraints(split.weights);
}

ConstraintSystem zero_intercept_constraints(Eigen::Index k) {
  if (k < 1) fail(ErrorKind::InvalidArgument, "split needs at least one child");
  ConstraintSystem sys{Eigen::MatrixXd::Zero(k, 2 * k), Eigen::VectorXd::Zero(k)};
  for (Eigen::Index j = 0; j < k; ++j) sys.matrix(j, intercept_index(j)) = 1.0;
  return sys;
}

ConstraintSystem append_rows(const ConstraintSystem& base, const ConstraintSystem& extra) {
  if (base.cols() != extra.cols()) fail(ErrorKind::InvalidArgument, "constraint column counts differ");
  ConstraintSystem out{Eigen::MatrixXd(base.rows() + extra.rows(), base.cols()),
                       Eigen::VectorXd(base.rows() + extra.rows())};
  out.matrix << base.matrix, extra.matrix;
  out.rhs << base.rhs, extra.rhs;
  return out;
}

Eigen::VectorXd arbitrage_gap(const ConstraintSystem& system, const Eigen::VectorXd& gamma) {
  if (gamma.size() != system.cols()) fail(ErrorKind::InvalidArgument, "gamma length does not match constraint columns");
  return system.matrix * gamma - system.rhs;
}

double max_abs_gap(const ConstraintSystem& system, const Eigen::VectorXd& gamma) {
  return arbitrage_gap(system, gamma).cwiseAbs().maxCoeff();
}

Eigen::VectorXd ReducedSystem::expand(const Eigen::VectorXd& reduced) const {
  if (reduced.size() != static_cast<Eigen::Index>(free_to_full.size())) {
    fail(ErrorKind::InvalidArgument, "reduced solution has wrong length");
  }
  Eigen::VectorXd full(static_cast<Eigen::Index>(free_to_full.size() + fixed.size()));
  for (std::size_t j = 0; j < free_to_full.size(); ++j) full(free_to_full[j]) = reduced(static_cast<Eigen::Index>(j));
  for (const auto& [idx, value] : fixed) full(idx) = value;
  return full;
}

ReducedSystem fix_coefficients(const ConstraintSystem& system, const std::map<Eigen::Index, double>& fixed) {
  const Eigen::Index n = system.cols();
  ReducedSystem out;
  out.fixed = fixed;
  Eigen::VectorXd rhs = system.rhs;
  std::vector<bool> is_fixed(static_cast<std::size_t>(n), false);
  for (const auto& [idx, value] : fixed) {
    if (idx < 0 || idx >= n) fail(ErrorKind::InvalidArgument, "fixed coefficient index out of range");
    if (!std::isfinite(value)) fail(ErrorKind::InvalidArgument, "fixed coefficient must be finite");
    is_fixed[static_cast<std::size_t>(idx)] = true;
    rhs -= system.matrix.col(idx) * value;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!is_fixed[static_cast<std::size_t>(j)]) out.free_to_full.push_back(j);
  }
  out.system.matrix.resize(system.rows(), static_cast<Eigen::Index>(out.free_to_full.size()));
  for (std::size_t j = 0; j < out.free_to_full.size(); ++j) {
    out.system.matrix.col(static_cast<Eigen::Index>(j)) = system.matrix.col(out.free_to_full[j]);
  }
  out.system.rhs = rhs;
  for (Eigen::Index r = 0; r < system.rows(); ++r) {
    const bool has_free = out.system.matrix.cols() > 0 && out.system.matrix.row(r).cwiseAbs().maxCoeff() > 0.0;
    const double scale = 1.0 + system.rhs.cwiseAbs().maxCoeff();
    if (!has_free && std::fabs(rhs(r)) > 1e-12 * scale) fail(ErrorKind::InvalidArgument, "infeasible fixing");
  }
  return out;
}

}  // namespace fwdshape
