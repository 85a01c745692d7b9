#pragma once

#include <Eigen/Dense>
#include <string>

namespace fixture {

// German baseload quotes on 2012-05-03 (relative codes).
inline const std::string kTableOne =
    "quote_date,contract,price\n"
    "2012-05-03,D+1,44.75\n"
    "2012-05-03,D+2,39.00\n"
    "2012-05-03,WE+1,36.60\n"
    "2012-05-03,WE+2,33.50\n"
    "2012-05-03,W+1,43.00\n"
    "2012-05-03,W+2,38.50\n"
    "2012-05-03,M+1,41.45\n"
    "2012-05-03,M+2,42.40\n"
    "2012-05-03,M+3,41.00\n"
    "2012-05-03,M+4,46.50\n"
    "2012-05-03,Q+1,43.20\n"
    "2012-05-03,Q+2,52.85\n"
    "2012-05-03,Q+3,54.40\n"
    "2012-05-03,Q+4,45.10\n"
    "2012-05-03,Q+5,45.80\n"
    "2012-05-03,Y+1,50.20\n"
    "2012-05-03,Y+2,50.20\n"
    "2012-05-03,Y+3,50.50\n";

// Year-to-quarter coefficients, (slope, intercept) per quarter.
inline Eigen::VectorXd robust_table() {
  Eigen::VectorXd g(8);
  g << 1.121, -1.604, 0.875, 1.406, 0.921, 0.930, 1.083, -0.732;
  return g;
}

inline Eigen::VectorXd classical_table() {
  Eigen::VectorXd g(8);
  g << 1.146, -2.409, 0.857, 1.830, 0.926, 0.610, 1.071, -0.030;
  return g;
}

inline Eigen::VectorXd ratio_average_betas() {
  Eigen::VectorXd b(4);
  b << 1.0926, 0.8994, 0.9398, 1.0689;
  return b;
}

}  // namespace fixture
