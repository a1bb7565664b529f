#include "sizesym/nn/graph.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "sizesym/error.hpp"

namespace sizesym::nn {

Parameter::Parameter(std::string name_, Matrix value_) : name(std::move(name_)), value(std::move(value_)) { zero_grad(); }

double normal(std::mt19937_64& rng, double stddev) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

const Matrix& Var::value() const {
  if (!valid()) throw Error("use of an unbound graph variable");
  return graph->value(id);
}

Var Graph::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, p.frozen ? nullptr : &p, !p.frozen});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::push(Matrix value, std::vector<int> inputs, Backward backward) {
  bool needs = false;
  for (int i : inputs) needs = needs || requires_grad(i);
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Graph::value(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw Error("graph variable out of range");
  return nodes_[static_cast<std::size_t>(id)].value;
}

const Matrix& Graph::grad(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw Error("graph variable out of range");
  return nodes_[static_cast<std::size_t>(id)].grad;
}

Matrix& Graph::grad_buffer(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var loss) {
  if (nodes_.empty()) throw Error("backward called before any forward computation");
  if (loss.graph != this || loss.id < 0 || static_cast<std::size_t>(loss.id) >= nodes_.size()) {
    throw Error("backward: loss does not belong to this graph");
  }
  const auto& out = nodes_[static_cast<std::size_t>(loss.id)].value;
  if (out.rows() != 1 || out.cols() != 1) throw Error("backward: loss must be a scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_buffer(loss.id).setOnes();
  for (int id = loss.id; id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0 || !n.requires_grad) continue;
    if (n.param != nullptr) {
      if (n.param->grad.rows() != n.value.rows() || n.param->grad.cols() != n.value.cols()) n.param->zero_grad();
      n.param->grad += n.grad;
    } else if (n.backward) {
      const Matrix g = n.grad;
      n.backward(*this, g);
    }
  }
}

void Graph::clear() { nodes_.clear(); }

namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw Error("use of an unbound graph variable");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.graph != b.graph) throw Error("operands belong to different graphs");
  return *a.graph;
}

void accumulate(Graph& g, int id, const Matrix& delta) {
  if (g.requires_grad(id)) g.grad_buffer(id) += delta;
}

void require_shape(bool ok, const char* op) {
  if (!ok) throw Error(std::string(op) + ": shape mismatch");
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_shape(a.cols() == b.rows(), "matmul");
  const int ia = a.id;
  const int ib = b.id;
  Matrix out = a.value() * b.value();
  return g.push(std::move(out), {ia, ib}, [ia, ib](Graph& gr, const Matrix& d) {
    if (gr.requires_grad(ia)) gr.grad_buffer(ia).noalias() += d * gr.value(ib).transpose();
    if (gr.requires_grad(ib)) gr.grad_buffer(ib).noalias() += gr.value(ia).transpose() * d;
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  const int ia = a.id;
  const int ib = b.id;
  return g.push(a.value() + b.value(), {ia, ib}, [ia, ib](Graph& gr, const Matrix& d) {
    accumulate(gr, ia, d);
    accumulate(gr, ib, d);
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  const int ia = a.id;
  const int ib = b.id;
  return g.push(a.value() - b.value(), {ia, ib}, [ia, ib](Graph& gr, const Matrix& d) {
    accumulate(gr, ia, d);
    accumulate(gr, ib, -d);
  });
}

Var scale(Var a, double s) {
  Graph& g = graph_of(a);
  const int ia = a.id;
  return g.push(a.value() * s, {ia}, [ia, s](Graph& gr, const Matrix& d) { accumulate(gr, ia, d * s); });
}

Var add_bias(Var x, Var bias) {
  Graph& g = graph_of(x, bias);
  require_shape(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias");
  const int ix = x.id;
  const int ib = bias.id;
  Matrix out = x.value().rowwise() + bias.value().row(0);
  return g.push(std::move(out), {ix, ib}, [ix, ib](Graph& gr, const Matrix& d) {
    accumulate(gr, ix, d);
    if (gr.requires_grad(ib)) gr.grad_buffer(ib) += d.colwise().sum();
  });
}

Var relu(Var x) {
  Graph& g = graph_of(x);
  const int ix = x.id;
  Matrix out = x.value().cwiseMax(0.0);
  return g.push(std::move(out), {ix}, [ix](Graph& gr, const Matrix& d) {
    if (!gr.requires_grad(ix)) return;
    gr.grad_buffer(ix) += (gr.value(ix).array() > 0.0).select(d, 0.0);
  });
}

Var gelu(Var x) {
  Graph& g = graph_of(x);
  const int ix = x.id;
  const double r2 = 1.0 / std::numbers::sqrt2;
  Matrix out = x.value().unaryExpr([r2](double v) { return 0.5 * v * (1.0 + std::erf(v * r2)); });
  return g.push(std::move(out), {ix}, [ix, r2](Graph& gr, const Matrix& d) {
    if (!gr.requires_grad(ix)) return;
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Matrix slope = gr.value(ix).unaryExpr(
        [r2, c](double v) { return 0.5 * (1.0 + std::erf(v * r2)) + v * c * std::exp(-0.5 * v * v); });
    gr.grad_buffer(ix) += d.cwiseProduct(slope);
  });
}

Var layer_norm(Var x, Var gain, Var shift, double eps) {
  Graph& g = graph_of(x, gain);
  graph_of(x, shift);
  const Eigen::Index n = x.rows();
  const Eigen::Index c = x.cols();
  require_shape(gain.rows() == 1 && gain.cols() == c && shift.rows() == 1 && shift.cols() == c, "layer_norm");
  auto xhat = std::make_shared<Matrix>(n, c);
  auto inv_std = std::make_shared<Eigen::VectorXd>(n);
  const Matrix& xv = x.value();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = xv.row(i).mean();
    const double var = (xv.row(i).array() - mu).square().mean();
    (*inv_std)(i) = 1.0 / std::sqrt(var + eps);
    xhat->row(i) = (xv.row(i).array() - mu) * (*inv_std)(i);
  }
  Matrix out = (xhat->array().rowwise() * gain.value().row(0).array()).rowwise() + shift.value().row(0).array();
  const int ix = x.id;
  const int ig = gain.id;
  const int is = shift.id;
  return g.push(std::move(out), {ix, ig, is}, [ix, ig, is, xhat, inv_std](Graph& gr, const Matrix& d) {
    if (gr.requires_grad(ig)) gr.grad_buffer(ig) += d.cwiseProduct(*xhat).colwise().sum();
    if (gr.requires_grad(is)) gr.grad_buffer(is) += d.colwise().sum();
    if (!gr.requires_grad(ix)) return;
    const Matrix dxhat = d.array().rowwise() * gr.value(ig).row(0).array();
    Matrix& gx = gr.grad_buffer(ix);
    for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
      const double m1 = dxhat.row(i).mean();
      const double m2 = dxhat.row(i).cwiseProduct(xhat->row(i)).mean();
      gx.row(i).array() += (*inv_std)(i) * (dxhat.row(i).array() - m1 - xhat->row(i).array() * m2);
    }
  });
}

Var dropout(Var x, double p, bool train, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must lie in [0, 1)");
  if (!train || p == 0.0) return x;
  Graph& g = graph_of(x);
  auto keep = std::make_shared<Matrix>(x.rows(), x.cols());
  const double s = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < keep->size(); ++i) keep->data()[i] = uniform01(rng) < p ? 0.0 : s;
  const int ix = x.id;
  return g.push(x.value().cwiseProduct(*keep), {ix},
                [ix, keep](Graph& gr, const Matrix& d) { accumulate(gr, ix, d.cwiseProduct(*keep)); });
}

Var embedding(Var table, const std::vector<int>& ids) {
  Graph& g = graph_of(table);
  const Matrix& t = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) throw DataError("embedding id " + std::to_string(ids[i]) + " out of range");
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  const int it = table.id;
  return g.push(std::move(out), {it}, [it, ids](Graph& gr, const Matrix& d) {
    if (!gr.requires_grad(it)) return;
    Matrix& gt = gr.grad_buffer(it);
    for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += d.row(static_cast<Eigen::Index>(i));
  });
}

Var select_rows(Var x, const std::vector<int>& rows) {
  Graph& g = graph_of(x);
  const Matrix& xv = x.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= xv.rows()) throw Error("select_rows: row out of range");
    out.row(static_cast<Eigen::Index>(i)) = xv.row(rows[i]);
  }
  const int ix = x.id;
  return g.push(std::move(out), {ix}, [ix, rows](Graph& gr, const Matrix& d) {
    if (!gr.requires_grad(ix)) return;
    Matrix& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < rows.size(); ++i) gx.row(rows[i]) += d.row(static_cast<Eigen::Index>(i));
  });
}

Var grl(Var x, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("gradient reversal needs lambda >= 0");
  Graph& g = graph_of(x);
  const int ix = x.id;
  return g.push(x.value(), {ix}, [ix, lambda](Graph& gr, const Matrix& d) {
    if (lambda == 0.0) return;
    accumulate(gr, ix, -lambda * d);
  });
}

Var stop_gradient(Var x) { return graph_of(x).constant(x.value()); }

Var attention(Var q, Var k, Var v, int batch, int length, int heads, const std::vector<std::uint8_t>& key_mask,
              std::vector<Matrix>* probs) {
  Graph& g = graph_of(q, k);
  graph_of(q, v);
  const Eigen::Index hidden = q.cols();
  require_shape(q.rows() == static_cast<Eigen::Index>(batch) * length && k.rows() == q.rows() &&
                    v.rows() == q.rows() && k.cols() == hidden && v.cols() == hidden &&
                    key_mask.size() == static_cast<std::size_t>(q.rows()),
                "attention");
  if (heads <= 0 || hidden % heads != 0) throw ConfigError("attention: hidden size not divisible by heads");
  const Eigen::Index dh = hidden / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  auto p_all = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(batch) * heads);
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  Matrix out(q.rows(), hidden);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(b) * length;
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * dh;
      Matrix s = qv.block(r0, c0, length, dh) * kv.block(r0, c0, length, dh).transpose() * inv;
      for (int j = 0; j < length; ++j) {
        if (!key_mask[static_cast<std::size_t>(r0 + j)]) s.col(j).setConstant(neg_inf);
      }
      Matrix& p = (*p_all)[static_cast<std::size_t>(b) * heads + h];
      p = softmax_rows(s);
      out.block(r0, c0, length, dh).noalias() = p * vv.block(r0, c0, length, dh);
    }
  }
  if (probs != nullptr) *probs = *p_all;
  const int iq = q.id;
  const int ik = k.id;
  const int iv = v.id;
  return g.push(std::move(out), {iq, ik, iv},
                [iq, ik, iv, batch, length, heads, dh, inv, p_all](Graph& gr, const Matrix& d) {
                  const Matrix& qv2 = gr.value(iq);
                  const Matrix& kv2 = gr.value(ik);
                  const Matrix& vv2 = gr.value(iv);
                  const bool gq = gr.requires_grad(iq);
                  const bool gk = gr.requires_grad(ik);
                  const bool gv = gr.requires_grad(iv);
                  for (int b = 0; b < batch; ++b) {
                    const Eigen::Index r0 = static_cast<Eigen::Index>(b) * length;
                    for (int h = 0; h < heads; ++h) {
                      const Eigen::Index c0 = h * dh;
                      const Matrix& p = (*p_all)[static_cast<std::size_t>(b) * heads + h];
                      const Matrix dout = d.block(r0, c0, length, dh);
                      if (gv) gr.grad_buffer(iv).block(r0, c0, length, dh).noalias() += p.transpose() * dout;
                      if (!gq && !gk) continue;
                      const Matrix dp = dout * vv2.block(r0, c0, length, dh).transpose();
                      const Eigen::VectorXd row_dot = dp.cwiseProduct(p).rowwise().sum();
                      const Matrix ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * inv;
                      if (gq) gr.grad_buffer(iq).block(r0, c0, length, dh).noalias() += ds * kv2.block(r0, c0, length, dh);
                      if (gk) {
                        gr.grad_buffer(ik).block(r0, c0, length, dh).noalias() +=
                            ds.transpose() * qv2.block(r0, c0, length, dh);
                      }
                    }
                  }
                });
}

Var mean_pool(Var x, int batch, int length, const std::vector<std::uint8_t>& mask) {
  Graph& g = graph_of(x);
  require_shape(x.rows() == static_cast<Eigen::Index>(batch) * length && mask.size() == static_cast<std::size_t>(x.rows()),
                "mean_pool");
  auto weight = std::make_shared<Eigen::VectorXd>(x.rows());
  Matrix out = Matrix::Zero(batch, x.cols());
  const Matrix& xv = x.value();
  for (int b = 0; b < batch; ++b) {
    int count = 0;
    for (int j = 0; j < length; ++j) count += mask[static_cast<std::size_t>(b * length + j)] ? 1 : 0;
    if (count == 0) throw DataError("mean_pool: sequence without real positions");
    for (int j = 0; j < length; ++j) {
      const int r = b * length + j;
      (*weight)(r) = mask[static_cast<std::size_t>(r)] ? 1.0 / count : 0.0;
      if (mask[static_cast<std::size_t>(r)]) out.row(b) += xv.row(r);
    }
    out.row(b) /= count;
  }
  const int ix = x.id;
  return g.push(std::move(out), {ix}, [ix, batch, length, weight](Graph& gr, const Matrix& d) {
    if (!gr.requires_grad(ix)) return;
    Matrix& gx = gr.grad_buffer(ix);
    for (int b = 0; b < batch; ++b) {
      for (int j = 0; j < length; ++j) {
        const int r = b * length + j;
        if ((*weight)(r) != 0.0) gx.row(r) += (*weight)(r) * d.row(b);
      }
    }
  });
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Var cross_entropy(Var logits, const std::vector<int>& targets) {
  Graph& g = graph_of(logits);
  require_shape(targets.size() == static_cast<std::size_t>(logits.rows()), "cross_entropy");
  const Matrix& z = logits.value();
  int count = 0;
  for (int t : targets) {
    if (t >= z.cols()) throw DataError("cross_entropy: target class out of range");
    count += t >= 0 ? 1 : 0;
  }
  if (count == 0) throw DataError("cross_entropy: no supervised positions");
  auto p = std::make_shared<Matrix>(softmax_rows(z));
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0) continue;
    const auto r = static_cast<Eigen::Index>(i);
    const double m = z.row(r).maxCoeff();
    loss += m + std::log((z.row(r).array() - m).exp().sum()) - z(r, targets[i]);
  }
  Matrix out(1, 1);
  out(0, 0) = loss / count;
  const int iz = logits.id;
  return g.push(std::move(out), {iz}, [iz, targets, p, count](Graph& gr, const Matrix& d) {
    if (!gr.requires_grad(iz)) return;
    Matrix& gz = gr.grad_buffer(iz);
    const double s = d(0, 0) / count;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i] < 0) continue;
      const auto r = static_cast<Eigen::Index>(i);
      gz.row(r) += s * p->row(r);
      gz(r, targets[i]) -= s;
    }
  });
}

}  // namespace sizesym::nn
