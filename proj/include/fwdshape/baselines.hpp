#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fwdshape/estimator.hpp"

namespace fwdshape {

// beta_k = mean_i y_ik / x_i (the simple ratio-average shape).
Eigen::VectorXd ratio_average_fit(const Dataset& data);

// beta_k / sum_j h_j beta_j, so the weighted average is exactly one.
Eigen::VectorXd rescale_to_no_arbitrage(const Eigen::VectorXd& betas, const std::vector<double>& weights);

// Slopes as a full gamma vector with zero intercepts.
Eigen::VectorXd slopes_to_gamma(const Eigen::VectorXd& betas);

// Wraps either baseline as a FitResult (unit case weights, one iteration).
FitResult ratio_average_result(const Dataset& data, const ConstraintSystem& system,
                               const std::vector<double>* rescale_weights = nullptr);

}  // namespace fwdshape
