#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "fwdshape/period.hpp"

namespace fwdshape {

// A parent delivery period broken into K children with hour-share weights.
struct GranularitySplit {
  DeliveryPeriod parent;
  std::vector<DeliveryPeriod> children;
  std::vector<double> weights;  // h_k, positive, summing to one

  std::size_t size() const { return children.size(); }
  std::vector<std::string> labels() const;
  void validate() const;
};

// Children must tile the parent; weights are delivery-hour shares.
GranularitySplit build_split(const DeliveryPeriod& parent, std::vector<DeliveryPeriod> children,
                             const CalendarConfig& calendar = {});

// Same children with caller-supplied weights (normalized to sum one).
GranularitySplit with_weights(GranularitySplit split, std::vector<double> weights);
GranularitySplit with_equal_weights(GranularitySplit split);

// A_eq * gamma = b_eq with gamma ordered (A_1, B_1, ..., A_K, B_K).
struct ConstraintSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

inline Eigen::Index slope_index(Eigen::Index k) { return 2 * k; }
inline Eigen::Index intercept_index(Eigen::Index k) { return 2 * k + 1; }

// Canonical non-arbitrage rows: sum h_k A_k = 1 and sum h_k B_k = 0.
ConstraintSystem build_constraints(const GranularitySplit& split);
// Raw weights (e.g. hour counts) are normalized to shares first.
ConstraintSystem build_constraints(const std::vector<double>& weights);

// One row per intercept forcing B_k = 0 (pure scaling model).
ConstraintSystem zero_intercept_constraints(Eigen::Index k);

ConstraintSystem append_rows(const ConstraintSystem& base, const ConstraintSystem& extra);

// A_eq * gamma - b_eq.
Eigen::VectorXd arbitrage_gap(const ConstraintSystem& system, const Eigen::VectorXd& gamma);
double max_abs_gap(const ConstraintSystem& system, const Eigen::VectorXd& gamma);

struct ReducedSystem {
  ConstraintSystem system;            // columns of the free coefficients only
  std::vector<Eigen::Index> free_to_full;  // reduced column -> full gamma index
  std::map<Eigen::Index, double> fixed;

  // Re-inserts the fixed values around a reduced solution.
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;
};

// Eliminates fixed columns: rhs becomes b_eq - A_eq[:, fixed] * gamma_fixed.
// Throws "infeasible fixing" when a row has no free column left but a
// nonzero remaining right-hand side.
ReducedSystem fix_coefficients(const ConstraintSystem& system, const std::map<Eigen::Index, double>& fixed);

}  // namespace fwdshape
