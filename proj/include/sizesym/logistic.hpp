#pragma once

#include <Eigen/Core>

namespace sizesym {

struct LogisticConfig {
  double l2 = 1.0;          ///< penalty on (l2 / 2) * ||w||^2; the bias is unpenalized
  double step_size = 0.0;   ///< 0 selects 1 / L from the data's Lipschitz bound
  int max_iterations = 200000;
  double tolerance = 1e-9;  ///< stop when ||grad|| < tolerance
};

/// Binary logistic regression over count features. Objective:
///   mean_i CE(sigmoid(w.x_i + b), y_i) + (l2 / 2) ||w||^2
struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  LogisticConfig config;
  int iterations = 0;
  bool converged = false;

  template <typename Derived>
  Eigen::VectorXd predict_proba(const Eigen::MatrixBase<Derived>& X) const {
    const Eigen::VectorXd z = (X * weights).array() + bias;
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }

  /// 1 (large) when the probability is at least 0.5.
  template <typename Derived>
  Eigen::VectorXi predict(const Eigen::MatrixBase<Derived>& X) const {
    return (predict_proba(X).array() >= 0.5).template cast<int>().matrix();
  }
};

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& weights, double bias, double l2);

/// Full-batch gradient descent with a fixed step. Throws DataError on
/// single-class labels, size mismatch or non-finite features.
LogisticModel train_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                             const LogisticConfig& config = {});

}  // namespace sizesym
