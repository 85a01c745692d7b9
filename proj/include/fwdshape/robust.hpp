#pragma once

#include <cstddef>
#include <span>

namespace fwdshape {

// Normal-consistency constant for the MAD.
inline constexpr double kMadConsistency = 1.4826;

// Standard-normal 0.95 / 0.975 / 0.99 quantiles.
inline constexpr double kHampelA = 1.6449;
inline constexpr double kHampelB = 1.9600;
inline constexpr double kHampelR = 2.3263;

// 95% efficiency constant for Tukey's biweight.
inline constexpr double kBisquareK = 4.685;

enum class WeightKind { Hampel, Bisquare };

// Downweighting function applied to standardized distances.
struct WeightFunctionSpec {
  WeightKind kind = WeightKind::Hampel;
  double hampel_a = kHampelA;
  double hampel_b = kHampelB;
  double hampel_r = kHampelR;
  double bisquare_k = kBisquareK;

  static WeightFunctionSpec hampel(double a = kHampelA, double b = kHampelB, double r = kHampelR);
  static WeightFunctionSpec bisquare(double k = kBisquareK);

  // Throws InvalidArgument unless 0 < a < b < r and k > 0.
  void validate() const;

  // Evaluates the configured weight at a standardized distance.
  double operator()(double x) const;
};

// Average of the two central order statistics for even lengths.
double median(std::span<const double> values);

// consistency * median(|v - median(v)|)
double mad_scale(std::span<const double> values, double consistency = kMadConsistency);

/// Rousseeuw-Croux Qn scale: d * c_n * {|v_i - v_j|; i < j}_(k) with
/// k = C(h, 2), h = floor(n/2) + 1 and d = 2.2219. Uses the O(n log n)
/// selection over the implicit matrix of sorted pairwise differences.
double qn_scale(std::span<const double> values);

// Multiplicative small-sample correction applied by qn_scale.
double qn_correction(std::size_t n);

// Unscaled k-th order statistic of pairwise differences (1-based k).
double qn_order_statistic(std::span<const double> values, std::size_t k);

double hampel_weight(double x, const WeightFunctionSpec& spec);
double bisquare_loss(double x, double k);
double bisquare_weight(double x, double k);

}  // namespace fwdshape
