#pragma once

// Finite-difference checks for every autodiff op, shared by the unit tests
// and the acceptance run.

#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace jointud::testing {

template <typename Scalar>
struct OpTolerance;
template <>
struct OpTolerance<double> {
  static constexpr double step = 1e-5, floor = 1e-3, max_error = 1e-6;
};
template <>
struct OpTolerance<float> {
  static constexpr double step = 1e-2, floor = 1e-2, max_error = 1e-2;
};

// Reduces a matrix-valued op to a scalar with fixed random weights so every
// output entry gets a distinct upstream gradient.
template <typename Scalar>
Var<Scalar> weighted_sum(Var<Scalar> x, uint64_t seed) {
  Rng rng(seed);
  return sum(mul(x, x.graph->constant(random_matrix<Scalar>(rng, x.rows(), x.cols()))));
}

struct OpCheck {
  std::string op;
  GradCheckResult result;
};

template <typename Scalar>
std::vector<OpCheck> check_all_ops() {
  using T = OpTolerance<Scalar>;
  Rng rng(1234);
  Parameter<Scalar> a(random_matrix<Scalar>(rng, 3, 4));
  Parameter<Scalar> b(random_matrix<Scalar>(rng, 3, 4));
  Parameter<Scalar> w(random_matrix<Scalar>(rng, 4, 5));
  Parameter<Scalar> row(random_matrix<Scalar>(rng, 1, 4));
  Parameter<Scalar> table(random_matrix<Scalar>(rng, 6, 4));
  Parameter<Scalar> stack(random_matrix<Scalar>(rng, 4, 3 * 4));
  Parameter<Scalar> kinked(random_matrix<Scalar>(rng, 3, 4));
  // Keep relu inputs away from the kink.
  for (Eigen::Index i = 0; i < kinked.value.size(); ++i)
    if (std::abs(kinked.value.data()[i]) < Scalar(0.1)) kinked.value.data()[i] = Scalar(0.3);
  Parameter<Scalar> x(random_matrix<Scalar>(rng, 5, 4));
  Parameter<Scalar> w2(random_matrix<Scalar>(rng, 4, 4));
  Parameter<Scalar> bias(random_matrix<Scalar>(rng, 1, 4));

  std::vector<OpCheck> out;
  auto check = [&](const std::string& op, const std::vector<Parameter<Scalar>*>& params,
                   const std::function<Var<Scalar>(Graph<Scalar>&)>& fn) {
    out.push_back({op, gradient_check<Scalar>(params, fn, T::step, T::floor)});
  };
  check("add", {&a, &b}, [&](Graph<Scalar>& g) { return weighted_sum(add(g.parameter(a), g.parameter(b)), 1); });
  check("sub", {&a, &b}, [&](Graph<Scalar>& g) { return weighted_sum(sub(g.parameter(a), g.parameter(b)), 2); });
  check("mul", {&a, &b}, [&](Graph<Scalar>& g) { return weighted_sum(mul(g.parameter(a), g.parameter(b)), 3); });
  check("scale, add_scalar", {&a},
        [&](Graph<Scalar>& g) { return weighted_sum(add_scalar(scale(g.parameter(a), Scalar(-2.5)), Scalar(1)), 4); });
  check("matmul", {&a, &w}, [&](Graph<Scalar>& g) { return weighted_sum(matmul(g.parameter(a), g.parameter(w)), 5); });
  check("transpose", {&a}, [&](Graph<Scalar>& g) { return weighted_sum(transpose(g.parameter(a)), 6); });
  check("add_bias_row", {&a, &row},
        [&](Graph<Scalar>& g) { return weighted_sum(add_bias_row(g.parameter(a), g.parameter(row)), 7); });
  check("concat", {&a, &b}, [&](Graph<Scalar>& g) {
    auto pa = g.parameter(a), pb = g.parameter(b);
    return add(weighted_sum(concat<Scalar>({pa, pb}, 0), 8), weighted_sum(concat<Scalar>({pb, pa, pb}, 1), 9));
  });
  check("slice_rows, slice_cols", {&a}, [&](Graph<Scalar>& g) {
    auto pa = g.parameter(a);
    return add(weighted_sum(slice_rows(pa, 1, 2), 10), weighted_sum(slice_cols(pa, 1, 3), 11));
  });
  check("embedding_lookup", {&table},
        [&](Graph<Scalar>& g) { return weighted_sum(embedding_lookup(g.parameter(table), {2, 0, 2, 5}), 12); });
  check("tanh", {&a}, [&](Graph<Scalar>& g) { return weighted_sum(tanh(g.parameter(a)), 13); });
  check("sigmoid", {&a}, [&](Graph<Scalar>& g) { return weighted_sum(sigmoid(g.parameter(a)), 14); });
  check("relu", {&kinked}, [&](Graph<Scalar>& g) { return weighted_sum(relu(g.parameter(kinked)), 15); });
  check("dropout", {&a}, [&](Graph<Scalar>& g) {
    Rng mask_rng(99);
    return weighted_sum(dropout(g.parameter(a), 0.4, mask_rng), 16);
  });
  check("softmax_cross_entropy", {&a},
        [&](Graph<Scalar>& g) { return softmax_cross_entropy(g.parameter(a), {1, -1, 3}); });
  check("rowwise_block_dot", {&a, &stack}, [&](Graph<Scalar>& g) {
    auto pa = g.parameter(a);
    return weighted_sum(rowwise_block_dot(matmul(pa, g.parameter(stack)), tanh(pa)), 17);
  });
  check("affine + tanh chain", {&x, &w2, &bias}, [&](Graph<Scalar>& g) {
    return sum(tanh(add_bias_row(matmul(g.parameter(x), g.parameter(w2)), g.parameter(bias))));
  });
  return out;
}

}  // namespace jointud::testing
