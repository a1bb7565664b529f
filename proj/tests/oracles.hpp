#pragma once

// Independent reference implementations used by unit tests and the
// acceptance binary. None of these call into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace sizesym::oracle {

using Real = long double;

inline Real simpson_step(const std::function<Real(Real)>& f, Real a, Real b, Real fa, Real fm, Real fb, Real whole,
                         Real tol, int depth) {
  const Real m = (a + b) / 2;
  const Real lm = (a + m) / 2;
  const Real rm = (m + b) / 2;
  const Real flm = f(lm);
  const Real frm = f(rm);
  const Real left = (m - a) / 6 * (fa + 4 * flm + fm);
  const Real right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

/// Adaptive Simpson quadrature.
inline Real integrate(const std::function<Real(Real)>& f, Real a, Real b, Real tol = 1e-14L) {
  const Real fa = f(a);
  const Real fb = f(b);
  const Real fm = f((a + b) / 2);
  const Real whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 60);
}

/// P(T > t) by integrating the Student t density.
inline double t_upper_tail(double t, double df) {
  const Real nu = df;
  const Real c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * std::numbers::pi_v<Real>);
  auto density = [&](Real x) { return c * std::pow(1 + x * x / nu, -(nu + 1) / 2); };
  const Real half = integrate(density, 0, std::fabs(static_cast<Real>(t)));
  return static_cast<double>(t >= 0 ? Real(0.5) - half : Real(0.5) + half);
}

/// P(F > f) by integrating the F density after substituting x = u^2.
inline double f_upper_tail(double f, double d1, double d2) {
  if (f <= 0) return 1.0;
  const Real a = d1 / 2.0L;
  const Real b = d2 / 2.0L;
  const Real log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(Real(d1) / Real(d2));
  auto integrand = [&](Real u) -> Real {
    if (u == 0) return d1 == 1 ? 2 * std::exp(log_norm) : 0;
    const Real x = u * u;
    return 2 * u * std::exp(log_norm + (a - 1) * std::log(x) - (a + b) * std::log1p(Real(d1) * x / Real(d2)));
  };
  return static_cast<double>(1 - integrate(integrand, 0, std::sqrt(static_cast<Real>(f))));
}

/// Minimum of mean cross-entropy + (l2 / 2) ||w||^2 (bias unpenalized) by
/// damped Newton iterations.
struct NewtonResult {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double objective = 0.0;
};

inline double logistic_loss(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& theta,
                            double l2) {
  const Eigen::Index d = X.cols();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double z = X.row(i).dot(theta.head(d)) + theta(d);
    // log(1 + e^z) - y z, computed stably
    loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y(i) * z;
  }
  return loss / static_cast<double>(X.rows()) + 0.5 * l2 * theta.head(d).squaredNorm();
}

inline NewtonResult newton_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, double l2) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd A(n, d + 1);
  A << X, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(d + 1, l2);
  reg(d) = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd z = A * theta;
    const Eigen::VectorXd p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    const Eigen::VectorXd g = A.transpose() * (p - y.cast<double>()) / static_cast<double>(n) +
                              reg.cwiseProduct(theta);
    if (g.norm() < 1e-13) break;
    const Eigen::VectorXd wts = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd H = A.transpose() * wts.asDiagonal() * A / static_cast<double>(n);
    H.diagonal() += reg;
    H.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = H.ldlt().solve(g);
    double t = 1.0;
    const double f0 = logistic_loss(X, y, theta, l2);
    while (t > 1e-10 && logistic_loss(X, y, theta - t * step, l2) > f0 - 1e-4 * t * g.dot(step)) t /= 2;
    theta -= t * step;
  }
  return {theta.head(d), theta(d), logistic_loss(X, y, theta, l2)};
}

/// Exhaustive root split over "x[f] <= v" for every observed value v that
/// leaves both sides non-empty. Scores are compared exactly in integers:
/// maximizing sum over children of (a^2 + b^2) / n_child is the same as
/// maximizing the Gini reduction. Ties go to the lowest feature, then the
/// lowest threshold.
struct ExactSplit {
  Eigen::Index feature = -1;
  double threshold = 0.0;
  // score = num / den
  std::int64_t num = 0;
  std::int64_t den = 1;
};

inline std::optional<ExactSplit> exhaustive_split(const Eigen::MatrixXd& X, const Eigen::VectorXi& y) {
  const Eigen::Index n = X.rows();
  std::int64_t total[2] = {0, 0};
  for (Eigen::Index i = 0; i < n; ++i) total[y(i)] += 1;
  // Parent score: (a^2 + b^2) / n.
  const ExactSplit parent{-1, 0.0, total[0] * total[0] + total[1] * total[1], n};
  auto greater = [](const ExactSplit& s, const ExactSplit& t) { return s.num * t.den > t.num * s.den; };
  std::optional<ExactSplit> best;
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    std::vector<double> values(X.col(f).data(), X.col(f).data() + n);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (double v : values) {
      std::int64_t left[2] = {0, 0};
      std::int64_t right[2] = {0, 0};
      for (Eigen::Index i = 0; i < n; ++i) (X(i, f) <= v ? left : right)[y(i)] += 1;
      const std::int64_t nl = left[0] + left[1];
      const std::int64_t nr = right[0] + right[1];
      if (nl == 0 || nr == 0) continue;
      const std::int64_t sl = left[0] * left[0] + left[1] * left[1];
      const std::int64_t sr = right[0] * right[0] + right[1] * right[1];
      const ExactSplit s{f, v, sl * nr + sr * nl, nl * nr};
      if (!greater(s, parent)) continue;
      if (!best || greater(s, *best)) best = s;
    }
  }
  return best;
}

/// Bayes accuracy by enumerating every ordered word of each length.
inline double brute_force_bayes(const std::vector<double>& ps, const std::vector<double>& pl, int min_length,
                                int max_length, double prior_small = 0.5) {
  const std::size_t k = ps.size();
  double total = 0.0;
  for (int len = min_length; len <= max_length; ++len) {
    std::vector<std::size_t> word(static_cast<std::size_t>(len), 0);
    double acc = 0.0;
    while (true) {
      double a = prior_small;
      double b = 1.0 - prior_small;
      for (auto s : word) {
        a *= ps[s];
        b *= pl[s];
      }
      acc += std::max(a, b);
      std::size_t pos = 0;
      while (pos < word.size() && ++word[pos] == k) word[pos++] = 0;
      if (pos == word.size()) break;
    }
    total += acc;
  }
  return total / (max_length - min_length + 1);
}

}  // namespace sizesym::oracle
