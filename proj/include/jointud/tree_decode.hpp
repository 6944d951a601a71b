#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace jointud {

// Arc scores are (n+1) x n: entry (h, d-1) scores head h -> dependent d, with
// row 0 the artificial root. Heads use the same convention (0 = root).
using ArcScores = Eigen::MatrixXd;

// Maximum spanning arborescence (Chu-Liu-Edmonds). With `single_root` the
// root has exactly one child; the result is optimal among such trees. Ties
// resolve towards the lowest head index.
std::vector<int> mst_decode(const ArcScores& scores, bool single_root);

double tree_score(const ArcScores& scores, const std::vector<int>& heads);

// Exactly one root child (when `single_root`), every word reaches the root,
// heads within range.
bool is_valid_tree(const std::vector<int>& heads, bool single_root = true);

// Dense (head, dependent, label) logits for one sentence.
class LabelLogits {
 public:
  LabelLogits() = default;
  LabelLogits(int words, int labels) : words_(words), labels_(labels), data_((words + 1) * words * labels, 0.0) {}

  int words() const { return words_; }
  int labels() const { return labels_; }
  double& operator()(int head, int dep, int label) { return data_[(head * words_ + dep) * labels_ + label]; }
  double operator()(int head, int dep, int label) const { return data_[(head * words_ + dep) * labels_ + label]; }

 private:
  int words_ = 0, labels_ = 0;
  std::vector<double> data_;
};

// deprels[d] = argmax_l logits(heads[d], d, l); ties go to the lexicographically
// smallest label. `allowed(label_index, is_root_attachment)` may veto classes.
template <typename Allowed>
std::vector<int> assign_label_ids(const std::vector<int>& heads, const LabelLogits& logits,
                                  const std::vector<std::string>& names, Allowed allowed) {
  std::vector<int> out(heads.size(), -1);
  for (size_t d = 0; d < heads.size(); ++d) {
    int best = -1;
    for (int l = 0; l < logits.labels(); ++l) {
      if (!allowed(l, heads[d] == 0)) continue;
      double s = logits(heads[d], static_cast<int>(d), l);
      if (best < 0) {
        best = l;
        continue;
      }
      double b = logits(heads[d], static_cast<int>(d), best);
      if (s > b || (s == b && names[l] < names[best])) best = l;
    }
    out[d] = best;
  }
  return out;
}

std::vector<std::string> assign_labels(const std::vector<int>& heads, const LabelLogits& logits,
                                       const std::vector<std::string>& names);

}  // namespace jointud
