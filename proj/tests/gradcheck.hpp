#pragma once

// Central finite-difference oracle for the autodiff engine. Test code only.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "jointud/autodiff.hpp"

namespace jointud::testing {

struct GradCheckResult {
  double max_relative_error = 0;
  double max_abs_analytic = 0;
  size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries whose
// true derivative is ~0 from dominating through rounding noise.
template <typename Scalar>
GradCheckResult gradient_check(const std::vector<Parameter<Scalar>*>& params,
                               const std::function<Var<Scalar>(Graph<Scalar>&)>& loss_fn, double step,
                               double floor, size_t max_entries_per_param = 0) {
  for (auto* p : params) p->zero_grad();
  {
    Graph<Scalar> g;
    Var<Scalar> loss = loss_fn(g);
    g.backward(loss);
  }
  GradCheckResult result;
  for (auto* p : params) {
    const Eigen::Index total = p->value.size();
    const Eigen::Index stride =
        max_entries_per_param && static_cast<size_t>(total) > max_entries_per_param
            ? (total + static_cast<Eigen::Index>(max_entries_per_param) - 1) / static_cast<Eigen::Index>(max_entries_per_param)
            : 1;
    for (Eigen::Index k = 0; k < total; k += stride) {
      Scalar& x = p->value.data()[k];
      const Scalar saved = x;
      x = saved + Scalar(step);
      double up;
      {
        Graph<Scalar> g;
        up = static_cast<double>(loss_fn(g).value()(0, 0));
      }
      x = saved - Scalar(step);
      double down;
      {
        Graph<Scalar> g;
        down = static_cast<double>(loss_fn(g).value()(0, 0));
      }
      x = saved;
      const double numeric = (up - down) / (2 * step);
      const double analytic = static_cast<double>(p->grad.data()[k]);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
      result.max_abs_analytic = std::max(result.max_abs_analytic, std::abs(analytic));
      ++result.checked;
    }
  }
  return result;
}

template <typename Scalar>
Matrix<Scalar> random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-scale, scale));
  return m;
}

}  // namespace jointud::testing
