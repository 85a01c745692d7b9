#include "fwdshape/robust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fwdshape/error.hpp"

namespace fwdshape {

namespace {

constexpr double kQnConstant = 2.2219;

void require_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::Data, "non-finite value in sample");
  }
}

// Weighted high median: the smallest candidate c such that the total weight
// of candidates <= c exceeds half of the overall weight.
double weighted_high_median(std::vector<double>& values, std::vector<std::int64_t>& weights) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const std::int64_t total = std::accumulate(weights.begin(), weights.end(), std::int64_t{0});
  std::int64_t running = 0;
  for (std::size_t idx : order) {
    running += weights[idx];
    if (2 * running > total) return values[idx];
  }
  return values[order.back()];
}

}  // namespace

WeightFunctionSpec WeightFunctionSpec::hampel(double a, double b, double r) {
  WeightFunctionSpec s;
  s.kind = WeightKind::Hampel;
  s.hampel_a = a;
  s.hampel_b = b;
  s.hampel_r = r;
  return s;
}

WeightFunctionSpec WeightFunctionSpec::bisquare(double k) {
  WeightFunctionSpec s;
  s.kind = WeightKind::Bisquare;
  s.bisquare_k = k;
  return s;
}

void WeightFunctionSpec::validate() const {
  if (!(hampel_a > 0.0 && hampel_a < hampel_b && hampel_b < hampel_r)) {
    fail(ErrorKind::InvalidArgument, "Hampel cutoffs must satisfy 0 < a < b < r");
  }
  if (!(bisquare_k > 0.0)) fail(ErrorKind::InvalidArgument, "bisquare constant must be positive");
}

double WeightFunctionSpec::operator()(double x) const {
  return kind == WeightKind::Hampel ? hampel_weight(x, *this) : bisquare_weight(x, bisquare_k);
}

double median(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::Data, "empty sample");
  require_finite(values);
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double mad_scale(std::span<const double> values, double consistency) {
  if (values.size() < 2) fail(ErrorKind::Data, "degenerate sample");
  const double center = median(values);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [center](double v) { return std::fabs(v - center); });
  return consistency * median(dev);
}

double qn_correction(std::size_t n) {
  static constexpr double kSmall[] = {0.0, 0.0, 0.399, 0.994, 0.512, 0.844, 0.611, 0.857, 0.669, 0.872};
  if (n <= 9) return kSmall[n];
  const double dn = static_cast<double>(n);
  return n % 2 == 1 ? dn / (dn + 1.4) : dn / (dn + 3.8);
}

// Selection of the k-th smallest element of {y_i - y_j : i > j} without
// materializing all pairs. Rows are indexed by i, columns by j over the
// reversed sorted sample so that every row is increasing; left/right bound
// the still-undecided band of each row.
double qn_order_statistic(std::span<const double> values, std::size_t k) {
  const std::size_t n = values.size();
  if (n < 2) fail(ErrorKind::Data, "degenerate sample");
  require_finite(values);
  const std::size_t pairs = n * (n - 1) / 2;
  if (k < 1 || k > pairs) fail(ErrorKind::InvalidArgument, "order statistic index out of range");

  // 1-based working arrays, index 0 unused.
  std::vector<double> y(n + 1);
  std::copy(values.begin(), values.end(), y.begin() + 1);
  std::sort(y.begin() + 1, y.end());

  using Index = std::int64_t;
  const Index nn = static_cast<Index>(n);
  std::vector<Index> left(n + 1), right(n + 1), p(n + 1), q(n + 1);
  for (Index i = 1; i <= nn; ++i) {
    left[i] = nn - i + 2;
    right[i] = nn;
  }
  Index count_left = nn * (nn + 1) / 2;
  Index count_right = nn * nn;
  const Index target = static_cast<Index>(k) + count_left;

  std::vector<double> work;
  std::vector<Index> weight;
  work.reserve(n);
  weight.reserve(n);

  while (count_right - count_left > nn) {
    work.clear();
    weight.clear();
    for (Index i = 2; i <= nn; ++i) {
      if (left[i] <= right[i]) {
        const Index w = right[i] - left[i] + 1;
        const Index mid = left[i] + w / 2;
        weight.push_back(w);
        work.push_back(y[i] - y[nn + 1 - mid]);
      }
    }
    const double trial = weighted_high_median(work, weight);

    Index j = 0;
    for (Index i = nn; i >= 1; --i) {
      while (j < nn && y[i] - y[nn - j] < trial) ++j;
      p[i] = j;
    }
    j = nn + 1;
    for (Index i = 1; i <= nn; ++i) {
      while (y[i] - y[nn - j + 2] > trial) --j;
      q[i] = j;
    }
    Index sum_p = 0;
    Index sum_q = 0;
    for (Index i = 1; i <= nn; ++i) {
      sum_p += p[i];
      sum_q += q[i] - 1;
    }
    if (target <= sum_p) {
      right = p;
      count_right = sum_p;
    } else if (target > sum_q) {
      left = q;
      count_left = sum_q;
    } else {
      return trial;
    }
  }

  work.clear();
  for (Index i = 2; i <= nn; ++i) {
    for (Index jj = left[i]; jj <= right[i]; ++jj) work.push_back(y[i] - y[nn - jj + 1]);
  }
  const auto nth = work.begin() + (target - count_left - 1);
  std::nth_element(work.begin(), nth, work.end());
  return *nth;
}

double qn_scale(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) fail(ErrorKind::Data, "degenerate sample");
  const std::size_t h = n / 2 + 1;
  const std::size_t k = h * (h - 1) / 2;
  return kQnConstant * qn_correction(n) * qn_order_statistic(values, k);
}

double hampel_weight(double x, const WeightFunctionSpec& spec) {
  const double ax = std::fabs(x);
  const double a = spec.hampel_a;
  const double b = spec.hampel_b;
  const double r = spec.hampel_r;
  if (ax <= a) return 1.0;
  if (ax <= b) return a / ax;
  if (ax <= r) return (r - ax) / (r - b) * (a / ax);
  return 0.0;
}

double bisquare_loss(double x, double k) {
  const double plateau = k * k / 6.0;
  if (std::fabs(x) > k) return plateau;
  const double u = 1.0 - (x * x) / (k * k);
  return plateau * (1.0 - u * u * u);
}

double bisquare_weight(double x, double k) {
  if (std::fabs(x) > k) return 0.0;
  const double u = 1.0 - (x / k) * (x / k);
  return u * u;
}

}  // namespace fwdshape
