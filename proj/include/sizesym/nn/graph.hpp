#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sizesym::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool frozen = false;  ///< frozen parameters enter graphs as constants

  Parameter() = default;
  Parameter(std::string name, Matrix value);

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// N(0, std) via Box-Muller on uniform01, so initialisation is portable.
double normal(std::mt19937_64& rng, double stddev);

class Graph;

/// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Tape for reverse-mode differentiation. Nodes are appended in forward
/// order, so a reverse sweep visits every node after all its consumers.
class Graph {
 public:
  using Backward = std::function<void(Graph&, const Matrix&)>;

  Var parameter(Parameter& p);
  Var constant(Matrix value);

  /// Accumulates d(loss)/d(param) into every reachable, unfrozen parameter.
  /// The loss must be a 1x1 node of this graph.
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(int id) const;
  /// Gradient buffer of a node after backward (empty if unreachable).
  const Matrix& grad(int id) const;

  // Building blocks for operations.
  Var push(Matrix value, std::vector<int> inputs, Backward backward);
  Matrix& grad_buffer(int id);
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// Adds a 1xC row to every row of x.
Var add_bias(Var x, Var bias);
Var relu(Var x);
Var gelu(Var x);
/// Row-wise normalisation followed by a 1xC gain and shift.
Var layer_norm(Var x, Var gain, Var shift, double eps = 1e-12);
/// Inverted dropout; the identity when !train or p == 0.
Var dropout(Var x, double p, bool train, std::mt19937_64& rng);
/// Rows of the table selected by ids.
Var embedding(Var table, const std::vector<int>& ids);
Var select_rows(Var x, const std::vector<int>& rows);
/// Identity forward; backward multiplies the gradient by -lambda.
Var grl(Var x, double lambda);
/// Identity forward; no gradient flows back.
Var stop_gradient(Var x);

/// Multi-head scaled dot-product self-attention over `batch` sequences of
/// `length` positions stored as (batch*length) x hidden rows. Keys whose
/// mask entry is 0 receive zero weight. If `probs` is given it receives the
/// batch*heads attention matrices (length x length).
Var attention(Var q, Var k, Var v, int batch, int length, int heads, const std::vector<std::uint8_t>& key_mask,
              std::vector<Matrix>* probs = nullptr);

/// Mean of rows with mask 1 within each of `batch` consecutive groups.
Var mean_pool(Var x, int batch, int length, const std::vector<std::uint8_t>& mask);

/// Mean softmax cross-entropy over rows whose target is >= 0.
Var cross_entropy(Var logits, const std::vector<int>& targets);

Matrix softmax_rows(const Matrix& logits);

}  // namespace sizesym::nn
