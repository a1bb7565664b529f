#include "sizesym/decision_tree.hpp"

#include <algorithm>
#include <numeric>

#include "sizesym/error.hpp"

namespace sizesym {

namespace {

constexpr double kMinGain = 1e-12;

std::array<int, 2> histogram(const Eigen::Ref<const Eigen::VectorXi>& y, const std::vector<Eigen::Index>& rows) {
  std::array<int, 2> counts{};
  for (auto r : rows) counts[static_cast<std::size_t>(y(r))] += 1;
  return counts;
}

struct Builder {
  const Eigen::Ref<const Eigen::MatrixXd>& X;
  const Eigen::Ref<const Eigen::VectorXi>& y;
  const TreeConfig& config;
  std::vector<DecisionTree::Node> nodes;

  int build(const std::vector<Eigen::Index>& rows, int depth) {
    const int id = static_cast<int>(nodes.size());
    DecisionTree::Node node;
    node.counts = histogram(y, rows);
    node.label = node.counts[1] > node.counts[0] ? 1 : 0;
    node.depth = depth;
    nodes.push_back(node);

    const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
    if (pure || depth >= config.max_depth || static_cast<int>(rows.size()) < config.min_samples_split) return id;
    const auto split = best_split(X, y, rows);
    if (!split) return id;

    std::vector<Eigen::Index> left_rows;
    std::vector<Eigen::Index> right_rows;
    for (auto r : rows) (X(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    auto& n = nodes[static_cast<std::size_t>(id)];
    n.feature = split->feature;
    n.threshold = split->threshold;
    n.left = left;
    n.right = right;
    return id;
  }
};

}  // namespace

double gini(const std::array<int, 2>& counts) {
  const double n = counts[0] + counts[1];
  if (n == 0) return 0.0;
  const double p0 = counts[0] / n;
  const double p1 = counts[1] / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

std::optional<Split> best_split(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                                const std::vector<Eigen::Index>& rows) {
  const auto total = histogram(y, rows);
  const double n = static_cast<double>(rows.size());
  const double parent = gini(total);
  std::optional<Split> best;
  std::vector<std::pair<double, int>> column(rows.size());
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    for (std::size_t k = 0; k < rows.size(); ++k) column[k] = {X(rows[k], f), y(rows[k])};
    std::sort(column.begin(), column.end());
    std::array<int, 2> left{};
    for (std::size_t k = 0; k + 1 < column.size(); ++k) {
      left[static_cast<std::size_t>(column[k].second)] += 1;
      if (column[k].first == column[k + 1].first) continue;
      const std::array<int, 2> right{total[0] - left[0], total[1] - left[1]};
      const double nl = static_cast<double>(k + 1);
      const double gain = parent - (nl / n) * gini(left) - ((n - nl) / n) * gini(right);
      if (gain > kMinGain && (!best || gain > best->gain + kMinGain)) best = Split{f, column[k].first, gain};
    }
  }
  return best;
}

Eigen::VectorXi DecisionTree::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  Eigen::VectorXi out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_one(X.row(i).transpose());
  return out;
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::optional<Eigen::Index> DecisionTree::root_feature() const {
  if (nodes_.empty() || nodes_.front().feature < 0) return std::nullopt;
  return nodes_.front().feature;
}

DecisionTree train_tree(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXi>& y,
                        const TreeConfig& config) {
  if (X.rows() != y.size()) throw DataError("decision tree: feature rows and labels differ in length");
  if (X.rows() == 0) throw DataError("decision tree needs at least one sample");
  if ((y.array() != 0 && y.array() != 1).any()) throw DataError("decision tree: labels must be 0 or 1");
  if (config.max_depth < 0 || config.min_samples_split < 2) throw ConfigError("decision tree: invalid config");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Builder builder{X, y, config, {}};
  builder.build(rows, 0);
  return DecisionTree(std::move(builder.nodes));
}

}  // namespace sizesym
