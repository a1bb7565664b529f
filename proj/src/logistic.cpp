#include "sizesym/logistic.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "sizesym/error.hpp"

namespace sizesym {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_inputs(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y) {
  if (X.rows() != y.size()) throw DataError("logistic regression: feature rows and labels differ in length");
  if (X.rows() < 2) throw DataError("logistic regression needs at least 2 samples");
  if (!X.allFinite()) throw DataError("logistic regression: non-finite feature value");
  const auto positives = (y.array() == 1).count();
  if ((y.array() != 0 && y.array() != 1).any()) throw DataError("logistic regression: labels must be 0 or 1");
  if (positives == 0 || positives == y.size()) throw DataError("logistic regression needs both labels present");
}

}  // namespace

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& weights, double bias, double l2) {
  const Eigen::VectorXd z = (X * weights).array() + bias;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - y(i) * z(i);
  return loss / static_cast<double>(X.rows()) + 0.5 * l2 * weights.squaredNorm();
}

LogisticModel train_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                             const LogisticConfig& config) {
  check_inputs(X, y);
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd target = y.cast<double>();

  double step = config.step_size;
  if (step <= 0.0) {
    // Lipschitz bound of the gradient: 0.25 * lambda_max([X 1]^T [X 1]) / n + l2.
    Eigen::MatrixXd gram(X.cols() + 1, X.cols() + 1);
    gram.topLeftCorner(X.cols(), X.cols()).noalias() = X.transpose() * X;
    const Eigen::VectorXd column_sums = X.colwise().sum().transpose();
    gram.topRightCorner(X.cols(), 1) = column_sums;
    gram.bottomLeftCorner(1, X.cols()) = column_sums.transpose();
    gram(X.cols(), X.cols()) = n;
    const double lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                                  .eigenvalues()
                                  .maxCoeff();
    step = 1.0 / (0.25 * lambda_max / n + config.l2);
  }

  LogisticModel model;
  model.config = config;
  model.weights = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd residual(X.rows());
  for (int it = 0; it < config.max_iterations; ++it) {
    const Eigen::VectorXd z = (X * model.weights).array() + model.bias;
    for (Eigen::Index i = 0; i < z.size(); ++i) residual(i) = sigmoid(z(i)) - target(i);
    const Eigen::VectorXd grad_w = X.transpose() * residual / n + config.l2 * model.weights;
    const double grad_b = residual.mean();
    model.iterations = it;
    if (std::sqrt(grad_w.squaredNorm() + grad_b * grad_b) < config.tolerance) {
      model.converged = true;
      break;
    }
    model.weights -= step * grad_w;
    model.bias -= step * grad_b;
  }
  if (!model.weights.allFinite() || !std::isfinite(model.bias)) {
    throw NumericalError("logistic regression diverged");
  }
  return model;
}

}  // namespace sizesym
