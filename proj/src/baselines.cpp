#include "fwdshape/baselines.hpp"

#include <cmath>

#include "fwdshape/error.hpp"

namespace fwdshape {

Eigen::VectorXd ratio_average_fit(const Dataset& data) {
  if (data.cases() < 1) fail(ErrorKind::Data, "empty sample");
  if (data.y.rows() != data.x.size()) fail(ErrorKind::Data, "x and y row counts differ");
  for (Eigen::Index i = 0; i < data.cases(); ++i) {
    if (data.x(i) == 0.0) fail(ErrorKind::Data, "zero parent price");
  }
  Eigen::VectorXd betas(data.children());
  for (Eigen::Index k = 0; k < data.children(); ++k) {
    betas(k) = data.y.col(k).cwiseQuotient(data.x).mean();
  }
  return betas;
}

Eigen::VectorXd rescale_to_no_arbitrage(const Eigen::VectorXd& betas, const std::vector<double>& weights) {
  if (static_cast<Eigen::Index>(weights.size()) != betas.size()) {
    fail(ErrorKind::InvalidArgument, "one weight per coefficient required");
  }
  double avg = 0.0;
  for (Eigen::Index k = 0; k < betas.size(); ++k) avg += weights[static_cast<std::size_t>(k)] * betas(k);
  if (!(avg > 0.0)) fail(ErrorKind::InvalidArgument, "weighted coefficient sum must be positive");
  return betas / avg;
}

Eigen::VectorXd slopes_to_gamma(const Eigen::VectorXd& betas) {
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(2 * betas.size());
  for (Eigen::Index k = 0; k < betas.size(); ++k) gamma(slope_index(k)) = betas(k);
  return gamma;
}

FitResult ratio_average_result(const Dataset& data, const ConstraintSystem& system,
                               const std::vector<double>* rescale_weights) {
  Eigen::VectorXd betas = ratio_average_fit(data);
  FitResult res;
  res.method = "ratio-average";
  if (rescale_weights != nullptr) {
    betas = rescale_to_no_arbitrage(betas, *rescale_weights);
    res.method = "ratio-average-rescaled";
  }
  res.gamma = slopes_to_gamma(betas);
  res.case_weights = Eigen::VectorXd::Ones(data.cases());
  res.iterations = 1;
  res.arbitrage_gap_maxabs = max_abs_gap(system, res.gamma);
  res.child_labels = data.child_labels;
  res.case_ids = data.case_ids;
  res.residual_scales = Eigen::VectorXd::Zero(data.children());
  if (data.cases() >= 3) res.residual_scales = residual_distances(residuals_of(data, res.gamma)).column_scales;
  return res;
}

}  // namespace fwdshape
