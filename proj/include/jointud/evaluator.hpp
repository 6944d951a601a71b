#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jointud/conllu.hpp"

namespace jointud {

enum class Metric { kTokens, kWords, kUpos, kXpos, kUfeats, kAllTags, kLemmas, kUas, kLas, kClas, kMlas, kBlex };

inline constexpr int kMetricCount = 12;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "Tokens", "Words", "UPOS", "XPOS", "UFeats", "AllTags", "Lemmas", "UAS", "LAS", "CLAS", "MLAS", "BLEX"};

// Percentages in [0, 100]. `applicable` is false when the gold column the
// metric depends on is entirely "_".
struct MetricScore {
  double precision = 0, recall = 0, f1 = 0;
  long correct = 0, gold_total = 0, system_total = 0, aligned_total = 0;
  bool applicable = true;
};

struct EvalReport {
  std::array<MetricScore, kMetricCount> scores{};
  long aligned_words = 0;

  MetricScore& operator[](Metric m) { return scores[static_cast<int>(m)]; }
  const MetricScore& operator[](Metric m) const { return scores[static_cast<int>(m)]; }
};

// Word indices are positions in the file-wide word sequence (empty nodes
// excluded); spans are code point offsets into the whitespace-free text.
struct AlignedWordPair {
  int gold = 0;
  int system = 0;
  int span_start = 0;
  int span_end = 0;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<AlignedWordPair> align(const Treebank& gold, const Treebank& system);
EvalReport evaluate(const Treebank& gold, const Treebank& system);

// Unweighted mean of per-treebank scores; inapplicable entries are skipped.
EvalReport macro_average(std::span<const EvalReport> reports);

// 100 * (improved - baseline) / (100 - baseline).
double relative_error_reduction(double baseline_f1, double improved_f1);

double round_half_up(double value, int decimals = 2);
std::string format_score(double value);  // two decimals, round half up

// Aligned table followed by a key=value block.
std::string format_report(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

}  // namespace jointud
