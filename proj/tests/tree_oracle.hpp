#pragma once

// Exhaustive enumeration over head assignments; test-only oracle for small n.

#include <limits>
#include <vector>

#include "jointud/tree_decode.hpp"

namespace jointud::testing {

inline double best_tree_score(const ArcScores& scores, bool single_root) {
  const int n = static_cast<int>(scores.cols());
  std::vector<int> heads(n, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    bool ok = true;
    int roots = 0;
    for (int d = 0; d < n && ok; ++d) {
      if (heads[d] == d + 1) ok = false;
      roots += heads[d] == 0;
    }
    if (ok && (!single_root || roots == 1)) {
      // Acyclic: every word reaches the root within n steps.
      for (int d = 1; d <= n && ok; ++d) {
        int v = d, steps = 0;
        while (v != 0 && steps <= n) v = heads[v - 1], ++steps;
        ok = v == 0;
      }
      if (ok) {
        double total = 0;
        for (int d = 0; d < n; ++d) total += scores(heads[d], d);
        if (total > best) best = total;
      }
    }
    int k = 0;
    while (k < n && ++heads[k] > n) heads[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace jointud::testing
