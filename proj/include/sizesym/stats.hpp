#pragma once

#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sizesym/error.hpp"

namespace sizesym::stats {

enum class Tail { one_sided_greater, two_sided };

std::string_view to_string(Tail tail);

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;   ///< for F tests: the numerator df; see df2
  double df2 = 0.0;  ///< denominator df (F tests only)
  double p = 1.0;
  Tail tail = Tail::two_sided;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

// Special functions. Targets |error| < 1e-12 for the argument ranges used here.

/// Continued fraction for the incomplete beta (modified Lentz).
template <typename Scalar>
Scalar incomplete_beta_cf(Scalar a, Scalar b, Scalar x) {
  constexpr int kMaxIter = 10000;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar tiny = std::numeric_limits<Scalar>::min() / eps;
  const Scalar qab = a + b;
  const Scalar qap = a + 1;
  const Scalar qam = a - 1;
  Scalar c = 1;
  Scalar d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  Scalar h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const Scalar m2 = 2 * m;
    Scalar aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const Scalar delta = d * c;
    h *= delta;
    if (std::abs(delta - 1) <= eps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

/// Regularized incomplete beta I_x(a, b).
template <typename Scalar>
Scalar regularized_incomplete_beta(Scalar a, Scalar b, Scalar x) {
  if (!(a > 0) || !(b > 0)) throw NumericalError("incomplete beta needs a, b > 0");
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const Scalar log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const Scalar front = std::exp(log_front);
  if (x < (a + 1) / (a + b + 2)) return front * incomplete_beta_cf(a, b, x) / a;
  return 1 - front * incomplete_beta_cf(b, a, 1 - x) / b;
}

/// Upper tail P(T > t) of Student's t with df degrees of freedom.
template <typename Scalar>
Scalar student_t_sf(Scalar t, Scalar df) {
  const Scalar t2 = t * t;
  // Near zero the complementary form keeps full relative precision.
  const Scalar tail = t2 < df ? (1 - regularized_incomplete_beta(Scalar(0.5), df / 2, t2 / (df + t2))) / 2
                              : regularized_incomplete_beta(df / 2, Scalar(0.5), df / (df + t2)) / 2;
  return t >= 0 ? tail : 1 - tail;
}

template <typename Scalar>
Scalar student_t_cdf(Scalar t, Scalar df) {
  return 1 - student_t_sf(t, df);
}

/// Quantile of Student's t (bisection on the CDF, |error| < 1e-12).
double student_t_quantile(double probability, double df);

/// Upper tail P(F > f) of the F distribution.
template <typename Scalar>
Scalar f_sf(Scalar f, Scalar df1, Scalar df2) {
  if (f <= 0) return 1;
  if (df1 * f < df2) return 1 - regularized_incomplete_beta(df1 / 2, df2 / 2, df1 * f / (df2 + df1 * f));
  return regularized_incomplete_beta(df2 / 2, df1 / 2, df2 / (df2 + df1 * f));
}

template <typename Derived>
double sample_mean(const Eigen::DenseBase<Derived>& values) {
  return static_cast<double>(values.derived().mean());
}

/// Unbiased (n - 1) standard deviation.
template <typename Derived>
double sample_sd(const Eigen::DenseBase<Derived>& values) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  const double m = sample_mean(values);
  const double ss = (values.derived().array().template cast<double>() - m).square().sum();
  return std::sqrt(ss / static_cast<double>(n - 1));
}

TestResult one_sample_t(const Eigen::Ref<const Eigen::VectorXd>& values, double mu, Tail tail);
TestResult paired_t(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);
TestResult anova_oneway(const std::vector<Eigen::VectorXd>& groups);
double cohens_d(const Eigen::Ref<const Eigen::VectorXd>& values, double mu);

/// Two-sample pooled-variance t (two-sided).
TestResult pooled_t(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

struct ConfidenceInterval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Student-t interval for the mean; degenerate (zero-width) if n < 2.
ConfidenceInterval mean_ci(const Eigen::Ref<const Eigen::VectorXd>& values, double level = 0.95);

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace sizesym::stats
