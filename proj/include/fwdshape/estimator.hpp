#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "fwdshape/constraints.hpp"
#include "fwdshape/robust.hpp"

namespace fwdshape {

// N paired observations: a parent price x_i and K child prices y_i.
struct Dataset {
  Eigen::VectorXd x;
  Eigen::MatrixXd y;  // N x K
  std::vector<std::string> case_ids;
  std::vector<std::string> child_labels;

  Eigen::Index cases() const { return x.size(); }
  Eigen::Index children() const { return y.cols(); }

  // N >= 3, K >= 1, finite entries, non-constant x, ids sized N (filled if empty).
  void validate() const;
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

enum class ScaleEstimator { Mad, Qn };

enum class AlphaMode {
  Auto,     // alpha = multiplier * N * Qn(pooled y)
  PerCase,  // alpha = multiplier * N
  Fixed,    // alpha = multiplier
};

struct AlphaPolicy {
  AlphaMode mode = AlphaMode::Auto;
  double multiplier = 1.0;

  static AlphaPolicy automatic(double c = 1.0) { return {AlphaMode::Auto, c}; }
  static AlphaPolicy per_case(double c) { return {AlphaMode::PerCase, c}; }
  static AlphaPolicy fixed(double alpha) { return {AlphaMode::Fixed, alpha}; }
};

double resolve_alpha(const AlphaPolicy& policy, const Dataset& data);

struct FitConfig {
  WeightFunctionSpec weight_spec;
  AlphaPolicy alpha;
  ScaleEstimator scale_estimator = ScaleEstimator::Mad;
  double tolerance = 1e-8;  // on max |B_k^(t) - B_k^(t-1)|
  int max_iterations = 100;
  // Median-center before computing the initial y distances.
  bool center_for_distances = true;
  // When the fitted gap exceeds gap_tolerance, refit with alpha * 10 up to
  // this many times.
  int feasibility_refits = 1;
  double gap_tolerance = 1e-6;

  void validate() const;
};

struct FitResult {
  std::string method;
  Eigen::VectorXd gamma;  // (A_1, B_1, ..., A_K, B_K)
  Eigen::VectorXd case_weights;
  std::vector<std::string> case_ids;
  std::vector<std::string> child_labels;
  int iterations = 0;
  bool converged = true;
  bool degenerate_scale = false;
  int feasibility_refits = 0;
  double arbitrage_gap_maxabs = 0.0;
  Eigen::VectorXd residual_scales;  // K
  double alpha_used = 0.0;

  double slope(Eigen::Index k) const { return gamma(slope_index(k)); }
  double intercept(Eigen::Index k) const { return gamma(intercept_index(k)); }
  // Child prices predicted from parent prices.
  Eigen::MatrixXd predict(const Eigen::VectorXd& x) const;
};

struct InitialWeights {
  Eigen::VectorXd weights;
  Eigen::VectorXd x_distances;
  Eigen::VectorXd y_distances;
  bool degenerate_scale = false;
};

InitialWeights initial_weights(const Dataset& data, const WeightFunctionSpec& spec, bool center = true);

// Minimizer of sum_k sum_i (w_i y_ik - A_k w_i x_i - B_k w_i)^2
//   + alpha * |A_eq gamma - b_eq|^2
// over the free coefficients, with `fixed` gamma entries held at their values.
Eigen::VectorXd penalized_wls_solve(const Eigen::VectorXd& x, const Eigen::MatrixXd& y,
                                    const Eigen::VectorXd& case_weights, const ConstraintSystem& system,
                                    double alpha, const std::map<Eigen::Index, double>& fixed = {});

struct ResidualDistances {
  Eigen::VectorXd distances;
  Eigen::VectorXd column_scales;
  bool degenerate_scale = false;
};

// Column-wise median/MAD standardization, combined as |z_i| / sqrt(K).
// Columns whose MAD is <= zero_scale are treated as degenerate (z = 0).
ResidualDistances residual_distances(const Eigen::MatrixXd& residuals, double zero_scale = 0.0,
                                     ScaleEstimator scale = ScaleEstimator::Mad);

Eigen::MatrixXd residuals_of(const Dataset& data, const Eigen::VectorXd& gamma);

FitResult irls_fit(const Dataset& data, const ConstraintSystem& system, const FitConfig& config,
                   const std::map<Eigen::Index, double>& fixed = {});

FitResult classical_fit(const Dataset& data, const ConstraintSystem& system, double alpha);
FitResult classical_fit(const Dataset& data, const ConstraintSystem& system, const AlphaPolicy& alpha);

struct FlaggedCase {
  std::string case_id;
  Eigen::Index index;
  double weight;
};

// Cases with weight < threshold, ascending by weight.
std::vector<FlaggedCase> outlier_report(const FitResult& result, double threshold = 0.6);

}  // namespace fwdshape
