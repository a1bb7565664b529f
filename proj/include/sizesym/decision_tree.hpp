#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace sizesym {

struct TreeConfig {
  int max_depth = 6;
  int min_samples_split = 2;
};

/// Gini impurity of a binary label histogram.
double gini(const std::array<int, 2>& counts);

struct Split {
  Eigen::Index feature = 0;
  double threshold = 0.0;  ///< go left when x[feature] <= threshold
  double gain = 0.0;       ///< parent impurity minus weighted child impurity
};

/// Greedy CART split over the given rows. Thresholds are the lower value of
/// each pair of adjacent observed values (equivalent to the half-point for
/// count data). Ties go to the lowest feature, then the lowest threshold.
/// Returns nothing unless some split strictly reduces impurity.
std::optional<Split> best_split(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                                const std::vector<Eigen::Index>& rows);

class DecisionTree {
 public:
  struct Node {
    Eigen::Index feature = -1;  ///< -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
    std::array<int, 2> counts{};
    int depth = 0;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  template <typename Derived>
  int predict_one(const Eigen::MatrixBase<Derived>& x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].label;
  }

  Eigen::VectorXi predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;
  std::optional<Eigen::Index> root_feature() const;

 private:
  std::vector<Node> nodes_;
};

/// CART with the Gini criterion. Pure or unsplittable data yields a single leaf.
DecisionTree train_tree(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                        const TreeConfig& config = {});

}  // namespace sizesym
