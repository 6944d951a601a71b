#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointud/autodiff.hpp"
#include "jointud/rng.hpp"

namespace jointud {

// Named trainable arrays in registration order. Addresses stay valid for the
// store's lifetime, so layers keep raw pointers.
template <typename Scalar>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Parameter<Scalar> param;
  };

  Parameter<Scalar>& add(const std::string& name, Matrix<Scalar> init) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    entries_.push_back(std::make_unique<Entry>(Entry{name, Parameter<Scalar>(std::move(init))}));
    index_[name] = entries_.size() - 1;
    return entries_.back()->param;
  }

  Parameter<Scalar>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return entries_[it->second]->param;
  }
  const Parameter<Scalar>& get(const std::string& name) const { return const_cast<ParamStore*>(this)->get(name); }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  size_t size() const { return entries_.size(); }
  Entry& entry(size_t i) { return *entries_[i]; }
  const Entry& entry(size_t i) const { return *entries_[i]; }

  void zero_grad() {
    for (auto& e : entries_) e->param.zero_grad();
  }

  size_t scalar_count() const {
    size_t total = 0;
    for (const auto& e : entries_) total += e->param.value.size();
    return total;
  }

 private:
  std::vector<std::unique_ptr<Entry>> entries_;
  std::map<std::string, size_t> index_;
};

template <typename Scalar>
Matrix<Scalar> uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  return m;
}

// Glorot/Xavier uniform.
template <typename Scalar>
Matrix<Scalar> glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  return uniform_matrix<Scalar>(rng, rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)));
}

// x W + b.
template <typename Scalar>
struct Dense {
  Parameter<Scalar>* weight = nullptr;
  Parameter<Scalar>* bias = nullptr;

  Dense() = default;
  Dense(ParamStore<Scalar>& store, const std::string& name, int in, int out, Rng& rng)
      : weight(&store.add(name + ".weight", glorot<Scalar>(rng, in, out))),
        bias(&store.add(name + ".bias", Matrix<Scalar>::Zero(1, out))) {}

  Var<Scalar> operator()(Var<Scalar> x) const {
    Graph<Scalar>& g = *x.graph;
    return add_bias_row(matmul(x, g.parameter(*weight)), g.parameter(*bias));
  }
  Matrix<Scalar> apply(const Matrix<Scalar>& x) const {
    return (x * weight->value).rowwise() + bias->value.row(0);
  }
};

// One LSTM direction; gate blocks ordered input, forget, cell, output.
template <typename Scalar>
struct LstmCell {
  Parameter<Scalar>* input = nullptr;      // in x 4h
  Parameter<Scalar>* recurrent = nullptr;  // h x 4h
  Parameter<Scalar>* bias = nullptr;       // 1 x 4h
  int hidden = 0;

  LstmCell() = default;
  LstmCell(ParamStore<Scalar>& store, const std::string& name, int in, int h, Rng& rng) : hidden(h) {
    input = &store.add(name + ".input", glorot<Scalar>(rng, in, 4 * h));
    recurrent = &store.add(name + ".recurrent", glorot<Scalar>(rng, h, 4 * h));
    Matrix<Scalar> b = Matrix<Scalar>::Zero(1, 4 * h);
    b.middleCols(h, h).setOnes();
    bias = &store.add(name + ".bias", std::move(b));
  }

  // Runs over the rows of x (one time step per row); returns n x h states in
  // row order regardless of direction.
  Var<Scalar> run(Var<Scalar> x, bool reverse) const {
    Graph<Scalar>& g = *x.graph;
    const Eigen::Index n = x.rows();
    const Eigen::Index h = hidden;
    Var<Scalar> projected = add_bias_row(matmul(x, g.parameter(*input)), g.parameter(*bias));
    Var<Scalar> u = g.parameter(*recurrent);
    Var<Scalar> state = g.constant(Matrix<Scalar>::Zero(1, h));
    Var<Scalar> cell = state;
    std::vector<Var<Scalar>> outputs(n);
    for (Eigen::Index step = 0; step < n; ++step) {
      const Eigen::Index t = reverse ? n - 1 - step : step;
      Var<Scalar> gates = add(slice_rows(projected, t, 1), matmul(state, u));
      Var<Scalar> i = sigmoid(slice_cols(gates, 0, h));
      Var<Scalar> f = sigmoid(slice_cols(gates, h, h));
      Var<Scalar> c = tanh(slice_cols(gates, 2 * h, h));
      Var<Scalar> o = sigmoid(slice_cols(gates, 3 * h, h));
      cell = add(mul(f, cell), mul(i, c));
      state = mul(o, tanh(cell));
      outputs[t] = state;
    }
    return concat(outputs, 0);
  }
};

template <typename Scalar>
struct BiLstm {
  LstmCell<Scalar> forward, backward;

  BiLstm() = default;
  BiLstm(ParamStore<Scalar>& store, const std::string& name, int in, int h, Rng& rng)
      : forward(store, name + ".fw", in, h, rng), backward(store, name + ".bw", in, h, rng) {}

  int output_dim() const { return 2 * forward.hidden; }
  Var<Scalar> operator()(Var<Scalar> x) const { return concat<Scalar>({forward.run(x, false), backward.run(x, true)}, 1); }
};

// GRU direction: z, r gates and candidate n = tanh(x Wn + (r * h) Un + bn);
// h' = (1 - z) * n + z * h.
template <typename Scalar>
struct GruCell {
  Parameter<Scalar>* input = nullptr;      // in x 3h  [z | r | n]
  Parameter<Scalar>* gates = nullptr;      // h x 2h   [z | r]
  Parameter<Scalar>* candidate = nullptr;  // h x h
  Parameter<Scalar>* bias = nullptr;       // 1 x 3h
  int hidden = 0;

  GruCell() = default;
  GruCell(ParamStore<Scalar>& store, const std::string& name, int in, int h, Rng& rng) : hidden(h) {
    input = &store.add(name + ".input", glorot<Scalar>(rng, in, 3 * h));
    gates = &store.add(name + ".gates", glorot<Scalar>(rng, h, 2 * h));
    candidate = &store.add(name + ".candidate", glorot<Scalar>(rng, h, h));
    bias = &store.add(name + ".bias", Matrix<Scalar>::Zero(1, 3 * h));
  }

  // Final states for a batch of sequences. `steps[t]` holds the input rows of
  // time step t (one per sequence, any value once a sequence has ended) and
  // `active[t]` is 1 for sequences still running at t.
  Var<Scalar> final_states(Var<Scalar> inputs, Eigen::Index batch, const std::vector<Matrix<Scalar>>& active) const {
    Graph<Scalar>& g = *inputs.graph;
    const Eigen::Index h = hidden;
    Var<Scalar> projected = add_bias_row(matmul(inputs, g.parameter(*input)), g.parameter(*bias));
    Var<Scalar> uzr = g.parameter(*gates), un = g.parameter(*candidate);
    Var<Scalar> state = g.constant(Matrix<Scalar>::Zero(batch, h));
    for (size_t t = 0; t < active.size(); ++t) {
      Var<Scalar> x = slice_rows(projected, static_cast<Eigen::Index>(t) * batch, batch);
      Var<Scalar> zr = sigmoid(add(slice_cols(x, 0, 2 * h), matmul(state, uzr)));
      Var<Scalar> z = slice_cols(zr, 0, h), r = slice_cols(zr, h, h);
      Var<Scalar> n = tanh(add(slice_cols(x, 2 * h, h), matmul(mul(r, state), un)));
      Var<Scalar> next = add(n, mul(z, sub(state, n)));
      state = add(state, mul(g.constant(active[t]), sub(next, state)));
    }
    return state;
  }
};

}  // namespace jointud
