#include "jointud/tree_decode.hpp"

#include <limits>
#include <stdexcept>

namespace jointud {

namespace {

constexpr double kForbidden = -std::numeric_limits<double>::infinity();

// Square score matrix over nodes 0..N-1 (node 0 the root), s(h, d).
// Returns heads for every node; heads[0] = -1.
std::vector<int> chu_liu_edmonds(const Eigen::MatrixXd& s) {
  const int n = static_cast<int>(s.rows());
  std::vector<int> heads(n, -1);
  for (int d = 1; d < n; ++d) {
    int best = -1;
    for (int h = 0; h < n; ++h) {
      if (h == d || s(h, d) == kForbidden) continue;
      if (best < 0 || s(h, d) > s(best, d)) best = h;
    }
    if (best < 0) throw std::logic_error("mst_decode: node without admissible head");
    heads[d] = best;
  }

  // Find a cycle, if any.
  std::vector<int> color(n, 0);  // 0 unvisited, 1 on current walk, 2 done
  std::vector<int> cycle;
  color[0] = 2;
  for (int start = 1; start < n && cycle.empty(); ++start) {
    int v = start;
    std::vector<int> walk;
    while (color[v] == 0) {
      color[v] = 1;
      walk.push_back(v);
      v = heads[v];
    }
    if (color[v] == 1) {
      for (int u = v;;) {
        cycle.push_back(u);
        u = heads[u];
        if (u == v) break;
      }
    }
    for (int u : walk) color[u] = 2;
  }
  if (cycle.empty()) return heads;

  std::vector<bool> in_cycle(n, false);
  for (int v : cycle) in_cycle[v] = true;

  // Contract: non-cycle nodes keep their relative order, the cycle becomes the
  // last node.
  std::vector<int> to_new(n, -1), to_old;
  for (int v = 0; v < n; ++v)
    if (!in_cycle[v]) {
      to_new[v] = static_cast<int>(to_old.size());
      to_old.push_back(v);
    }
  const int c = static_cast<int>(to_old.size());
  const int m = c + 1;
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(m, m, kForbidden);
  std::vector<int> enter(n, -1), leave(n, -1);
  for (int u = 0; u < n; ++u) {
    if (in_cycle[u]) continue;
    for (int v = 0; v < n; ++v) {
      if (in_cycle[v]) continue;
      if (u != v) t(to_new[u], to_new[v]) = s(u, v);
    }
    // Best arc from u into the cycle, relative to the arc it replaces.
    double best = kForbidden;
    for (int v : cycle) {
      if (s(u, v) == kForbidden) continue;
      double gain = s(u, v) - s(heads[v], v);
      if (enter[u] < 0 || gain > best || (gain == best && v < enter[u])) {
        best = gain;
        enter[u] = v;
      }
    }
    t(to_new[u], c) = best;
  }
  for (int v = 1; v < n; ++v) {
    if (in_cycle[v]) continue;
    double best = kForbidden;
    for (int u : cycle) {
      if (s(u, v) == kForbidden) continue;
      if (leave[v] < 0 || s(u, v) > best || (s(u, v) == best && u < leave[v])) {
        best = s(u, v);
        leave[v] = u;
      }
    }
    t(c, to_new[v]) = best;
  }

  std::vector<int> sub = chu_liu_edmonds(t);
  std::vector<int> out = heads;  // cycle arcs kept except the broken one
  for (int v = 1; v < n; ++v) {
    if (in_cycle[v]) continue;
    int h = sub[to_new[v]];
    out[v] = h == c ? leave[v] : to_old[h];
  }
  int entering_head = to_old[sub[c]];
  out[enter[entering_head]] = entering_head;
  return out;
}

Eigen::MatrixXd square_scores(const ArcScores& scores) {
  const int n = static_cast<int>(scores.cols());
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(n + 1, n + 1, kForbidden);
  for (int h = 0; h <= n; ++h)
    for (int d = 1; d <= n; ++d)
      if (h != d) s(h, d) = scores(h, d - 1);
  return s;
}

std::vector<int> strip_root(const std::vector<int>& heads) { return {heads.begin() + 1, heads.end()}; }

}  // namespace

double tree_score(const ArcScores& scores, const std::vector<int>& heads) {
  double total = 0;
  for (size_t d = 0; d < heads.size(); ++d) total += scores(heads[d], static_cast<Eigen::Index>(d));
  return total;
}

std::vector<int> mst_decode(const ArcScores& scores, bool single_root) {
  const int n = static_cast<int>(scores.cols());
  if (n < 1 || scores.rows() != n + 1)
    throw std::invalid_argument("mst_decode: arc scores must be (n+1) x n with n >= 1");
  if (!scores.allFinite()) throw std::invalid_argument("mst_decode: arc scores must be finite");
  Eigen::MatrixXd s = square_scores(scores);
  std::vector<int> heads = strip_root(chu_liu_edmonds(s));
  int root_children = 0;
  for (int h : heads) root_children += h == 0;
  if (!single_root || root_children == 1) return heads;

  // The unconstrained optimum has several root children: try every word as
  // the only one and keep the best tree.
  std::vector<int> best;
  double best_score = kForbidden;
  for (int r = 1; r <= n; ++r) {
    Eigen::MatrixXd forced = s;
    for (int d = 1; d <= n; ++d)
      if (d != r) forced(0, d) = kForbidden;
    std::vector<int> candidate = strip_root(chu_liu_edmonds(forced));
    double score = tree_score(scores, candidate);
    if (best.empty() || score > best_score) {
      best = std::move(candidate);
      best_score = score;
    }
  }
  return best;
}

bool is_valid_tree(const std::vector<int>& heads, bool single_root) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return false;
  int roots = 0;
  for (int d = 0; d < n; ++d) {
    if (heads[d] < 0 || heads[d] > n || heads[d] == d + 1) return false;
    roots += heads[d] == 0;
  }
  if (roots == 0 || (single_root && roots != 1)) return false;
  for (int d = 1; d <= n; ++d) {
    int steps = 0;
    for (int v = d; v != 0; v = heads[v - 1])
      if (++steps > n) return false;
  }
  return true;
}

std::vector<std::string> assign_labels(const std::vector<int>& heads, const LabelLogits& logits,
                                       const std::vector<std::string>& names) {
  auto ids = assign_label_ids(heads, logits, names, [](int, bool) { return true; });
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(names.at(id));
  return out;
}

}  // namespace jointud
