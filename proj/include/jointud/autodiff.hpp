#pragma once

// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// A Graph owns every intermediate value created while evaluating one
// expression. Nodes are appended in evaluation order, so walking the tape
// backwards visits them in reverse topological order, each exactly once.
// Parameters live outside the graph; their gradients accumulate in place.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointud/rng.hpp"

namespace jointud {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct Parameter {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  explicit Parameter(Matrix<Scalar> v) : value(std::move(v)), grad(Matrix<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename Scalar>
class Graph;

template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Matrix<Scalar>& value() const { return graph->value(id); }
  const Matrix<Scalar>& grad() const { return graph->grad(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename Scalar>
class Graph {
 public:
  using Mat = Matrix<Scalar>;

  // An untracked graph records no backward rules (inference).
  explicit Graph(bool track_gradients = true) : tracking_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<Scalar> constant(Mat value) {
    Node node;
    node.value = std::move(value);
    return push(std::move(node));
  }

  Var<Scalar> parameter(Parameter<Scalar>& p) {
    Node node;
    node.param = &p;
    node.requires_grad = tracking_;
    return push(std::move(node));
  }

  const Mat& value(int id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }

  const Mat& grad(int id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->grad : n.grad;
  }

  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Records a derived node. `backward` receives the node's output gradient.
  Var<Scalar> record(Mat value, std::initializer_list<Var<Scalar>> parents,
                     std::function<void(const Mat&)> backward) {
    Node node;
    node.value = std::move(value);
    for (const auto& p : parents) node.requires_grad = node.requires_grad || nodes_[p.id].requires_grad;
    if (node.requires_grad) node.backward = std::move(backward);
    return push(std::move(node));
  }

  Var<Scalar> record(Mat value, std::span<const Var<Scalar>> parents, std::function<void(const Mat&)> backward) {
    Node node;
    node.value = std::move(value);
    for (const auto& p : parents) node.requires_grad = node.requires_grad || nodes_[p.id].requires_grad;
    if (node.requires_grad) node.backward = std::move(backward);
    return push(std::move(node));
  }

  template <typename Derived>
  void accumulate(Var<Scalar> v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.param) {
      n.param->grad += g;
    } else if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Populates gradients of `loss` (must be 1x1). Intermediate gradients are
  // reset first; parameter gradients accumulate across calls.
  void backward(Var<Scalar> loss) {
    if (value(loss.id).rows() != 1 || value(loss.id).cols() != 1)
      throw ShapeError("backward: loss must be scalar, got " + shape_string(value(loss.id)));
    for (auto& n : nodes_)
      if (!n.param) n.grad.resize(0, 0);
    if (!nodes_[loss.id].requires_grad) return;
    accumulate(loss, Mat::Ones(1, 1));
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.param || !n.backward || n.grad.size() == 0) continue;
      n.backward(n.grad);
    }
  }

  size_t size() const { return nodes_.size(); }

  static std::string shape_string(const Mat& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Parameter<Scalar>* param = nullptr;
    bool requires_grad = false;
    std::function<void(const Mat&)> backward;
  };

  Var<Scalar> push(Node node) {
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  bool tracking_ = true;
};

namespace detail {

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + Graph<Scalar>::shape_string(a.value()) + " vs " +
                     Graph<Scalar>::shape_string(b.value()));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("add", a, b);
  Graph<Scalar>& g = *a.graph;
  return g.record(a.value() + b.value(), {a, b}, [a, b, &g](const Matrix<Scalar>& d) {
    g.accumulate(a, d);
    g.accumulate(b, d);
  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("sub", a, b);
  Graph<Scalar>& g = *a.graph;
  return g.record(a.value() - b.value(), {a, b}, [a, b, &g](const Matrix<Scalar>& d) {
    g.accumulate(a, d);
    g.accumulate(b, -d);
  });
}

// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("mul", a, b);
  Graph<Scalar>& g = *a.graph;
  return g.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b, &g](const Matrix<Scalar>& d) {
    g.accumulate(a, d.cwiseProduct(b.value()));
    g.accumulate(b, d.cwiseProduct(a.value()));
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar factor) {
  Graph<Scalar>& g = *a.graph;
  return g.record(a.value() * factor, {a}, [a, factor, &g](const Matrix<Scalar>& d) { g.accumulate(a, d * factor); });
}

template <typename Scalar>
Var<Scalar> add_scalar(Var<Scalar> a, Scalar offset) {
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = a.value().array() + offset;
  return g.record(std::move(out), {a}, [a, &g](const Matrix<Scalar>& d) { g.accumulate(a, d); });
}

// x (n x c) plus the row vector b (1 x c) on every row.
template <typename Scalar>
Var<Scalar> add_bias_row(Var<Scalar> x, Var<Scalar> b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    throw ShapeError("add_bias_row: shape mismatch " + Graph<Scalar>::shape_string(x.value()) + " vs " +
                     Graph<Scalar>::shape_string(b.value()));
  Graph<Scalar>& g = *x.graph;
  Matrix<Scalar> out = x.value().rowwise() + b.value().row(0);
  return g.record(std::move(out), {x, b}, [x, b, &g](const Matrix<Scalar>& d) {
    g.accumulate(x, d);
    g.accumulate(b, d.colwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: shape mismatch " + Graph<Scalar>::shape_string(a.value()) + " vs " +
                     Graph<Scalar>::shape_string(b.value()));
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = a.value() * b.value();
  return g.record(std::move(out), {a, b}, [a, b, &g](const Matrix<Scalar>& d) {
    if (g.requires_grad(a.id)) g.accumulate(a, d * b.value().transpose());
    if (g.requires_grad(b.id)) g.accumulate(b, a.value().transpose() * d);
  });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = a.value().transpose();
  return g.record(std::move(out), {a}, [a, &g](const Matrix<Scalar>& d) { g.accumulate(a, d.transpose()); });
}

// axis 0 stacks rows, axis 1 stacks columns.
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Graph<Scalar>& g = *parts.front().graph;
  Eigen::Index rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      if (p.cols() != parts.front().cols())
        throw ShapeError("concat: shape mismatch " + Graph<Scalar>::shape_string(parts.front().value()) + " vs " +
                         Graph<Scalar>::shape_string(p.value()));
      rows += p.rows();
    } else {
      if (p.rows() != parts.front().rows())
        throw ShapeError("concat: shape mismatch " + Graph<Scalar>::shape_string(parts.front().value()) + " vs " +
                         Graph<Scalar>::shape_string(p.value()));
      cols += p.cols();
    }
  }
  if (axis == 0) cols = parts.front().cols();
  else rows = parts.front().rows();
  Matrix<Scalar> out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      out.middleRows(offset, p.rows()) = p.value();
      offset += p.rows();
    } else {
      out.middleCols(offset, p.cols()) = p.value();
      offset += p.cols();
    }
  }
  return g.record(std::move(out), std::span<const Var<Scalar>>(parts), [parts, axis, &g](const Matrix<Scalar>& d) {
    Eigen::Index off = 0;
    for (const auto& p : parts) {
      if (axis == 0) {
        g.accumulate(p, d.middleRows(off, p.rows()));
        off += p.rows();
      } else {
        g.accumulate(p, d.middleCols(off, p.cols()));
        off += p.cols();
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ShapeError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") outside " + Graph<Scalar>::shape_string(a.value()));
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = a.value().middleRows(start, count);
  return g.record(std::move(out), {a}, [a, start, count, &g](const Matrix<Scalar>& d) {
    Matrix<Scalar> full = Matrix<Scalar>::Zero(a.rows(), a.cols());
    full.middleRows(start, count) = d;
    g.accumulate(a, full);
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ShapeError("slice_cols: cols [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") outside " + Graph<Scalar>::shape_string(a.value()));
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = a.value().middleCols(start, count);
  return g.record(std::move(out), {a}, [a, start, count, &g](const Matrix<Scalar>& d) {
    Matrix<Scalar> full = Matrix<Scalar>::Zero(a.rows(), a.cols());
    full.middleCols(start, count) = d;
    g.accumulate(a, full);
  });
}

// Rows `ids` of `table`, in order; repeated ids accumulate gradient.
template <typename Scalar>
Var<Scalar> embedding_lookup(Var<Scalar> table, std::vector<int> ids) {
  Graph<Scalar>& g = *table.graph;
  Matrix<Scalar> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows())
      throw ShapeError("embedding_lookup: id " + std::to_string(ids[i]) + " outside table " +
                       Graph<Scalar>::shape_string(table.value()));
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  return g.record(std::move(out), {table}, [table, ids = std::move(ids), &g](const Matrix<Scalar>& d) {
    Matrix<Scalar> full = Matrix<Scalar>::Zero(table.rows(), table.cols());
    for (size_t i = 0; i < ids.size(); ++i) full.row(ids[i]) += d.row(static_cast<Eigen::Index>(i));
    g.accumulate(table, full);
  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = a.value().array().tanh();
  int self = static_cast<int>(g.size());
  return g.record(std::move(out), {a}, [a, self, &g](const Matrix<Scalar>& d) {
    const Matrix<Scalar>& y = g.value(self);
    g.accumulate(a, (d.array() * (Scalar(1) - y.array().square())).matrix());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = (Scalar(1) + (-a.value().array()).exp()).inverse();
  int self = static_cast<int>(g.size());
  return g.record(std::move(out), {a}, [a, self, &g](const Matrix<Scalar>& d) {
    const Matrix<Scalar>& y = g.value(self);
    g.accumulate(a, (d.array() * y.array() * (Scalar(1) - y.array())).matrix());
  });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return g.record(std::move(out), {a}, [a, &g](const Matrix<Scalar>& d) {
    g.accumulate(a, (a.value().array() > Scalar(0)).select(d.array(), Scalar(0)).matrix());
  });
}

// Inverted dropout: kept entries are scaled by 1/(1-p).
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> a, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (p == 0.0) return a;
  Graph<Scalar>& g = *a.graph;
  const Scalar keep_scale = Scalar(1.0 / (1.0 - p));
  Matrix<Scalar> mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < p ? Scalar(0) : keep_scale;
  Matrix<Scalar> out = a.value().cwiseProduct(mask);
  return g.record(std::move(out), {a},
                  [a, mask = std::move(mask), &g](const Matrix<Scalar>& d) { g.accumulate(a, d.cwiseProduct(mask)); });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Graph<Scalar>& g = *a.graph;
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return g.record(std::move(out), {a}, [a, &g](const Matrix<Scalar>& d) {
    g.accumulate(a, Matrix<Scalar>::Constant(a.rows(), a.cols(), d(0, 0)));
  });
}

// Numerically stable row softmax of a plain matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    Scalar top = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - top).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

// Mean over rows with gold id >= 0 of -log softmax(logits)[gold]. Rows with a
// negative id are ignored; with no scored rows the loss is 0.
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(Var<Scalar> logits, std::vector<int> gold) {
  if (static_cast<Eigen::Index>(gold.size()) != logits.rows())
    throw ShapeError("softmax_cross_entropy: " + std::to_string(gold.size()) + " gold ids for logits " +
                     Graph<Scalar>::shape_string(logits.value()));
  Graph<Scalar>& g = *logits.graph;
  Matrix<Scalar> probs = softmax_rows(logits.value());
  int scored = 0;
  Scalar total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int y = gold[r];
    if (y < 0) continue;
    if (y >= logits.cols())
      throw ShapeError("softmax_cross_entropy: gold id " + std::to_string(y) + " outside " +
                       std::to_string(logits.cols()) + " classes");
    const auto row = logits.value().row(r);
    Scalar top = row.maxCoeff();
    Scalar lse = top + std::log((row.array() - top).exp().sum());
    total += lse - row(y);
    ++scored;
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = scored ? total / scored : Scalar(0);
  return g.record(std::move(out), {logits},
                  [logits, gold = std::move(gold), probs = std::move(probs), scored, &g](const Matrix<Scalar>& d) {
                    if (!scored) return;
                    Matrix<Scalar> grad = Matrix<Scalar>::Zero(probs.rows(), probs.cols());
                    const Scalar w = d(0, 0) / scored;
                    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                      if (gold[r] < 0) continue;
                      grad.row(r) = probs.row(r) * w;
                      grad(r, gold[r]) -= w;
                    }
                    g.accumulate(logits, grad);
                  });
}

// out(i, l) = <M(i, l*d : (l+1)*d), H(i, :)> with d = H.cols(). Together with
// matmul this realises per-row bilinear forms x_i^T U_l y_i for a stack of
// matrices U = [U_0 | U_1 | ...].
template <typename Scalar>
Var<Scalar> rowwise_block_dot(Var<Scalar> m, Var<Scalar> h) {
  const Eigen::Index n = h.rows(), d = h.cols();
  if (m.rows() != n || d == 0 || m.cols() % d != 0)
    throw ShapeError("rowwise_block_dot: shape mismatch " + Graph<Scalar>::shape_string(m.value()) + " vs " +
                     Graph<Scalar>::shape_string(h.value()));
  const Eigen::Index blocks = m.cols() / d;
  Graph<Scalar>& g = *m.graph;
  Matrix<Scalar> out(n, blocks);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = 0; l < blocks; ++l) out(i, l) = m.value().row(i).segment(l * d, d).dot(h.value().row(i));
  return g.record(std::move(out), {m, h}, [m, h, n, d, blocks, &g](const Matrix<Scalar>& grad) {
    if (g.requires_grad(m.id)) {
      Matrix<Scalar> dm(n, blocks * d);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < blocks; ++l) dm.row(i).segment(l * d, d) = grad(i, l) * h.value().row(i);
      g.accumulate(m, dm);
    }
    if (g.requires_grad(h.id)) {
      Matrix<Scalar> dh = Matrix<Scalar>::Zero(n, d);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < blocks; ++l) dh.row(i) += grad(i, l) * m.value().row(i).segment(l * d, d);
      g.accumulate(h, dh);
    }
  });
}

}  // namespace jointud
