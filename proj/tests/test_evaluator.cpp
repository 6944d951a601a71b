#include <doctest.h>

#include <algorithm>

#include "jointud/evaluator.hpp"

using namespace jointud;

namespace {

std::string row(int id, const std::string& form, const std::string& upos, int head, const std::string& rel,
                const std::string& lemma = "_", const std::string& feats = "_") {
  return std::to_string(id) + "\t" + form + "\t" + (lemma == "_" ? form : lemma) + "\t" + upos + "\t_\t" + feats +
         "\t" + std::to_string(head) + "\t" + rel + "\t_\t_\n";
}

const std::string kGold = row(1, "The", "DET", 2, "det") + row(2, "dog", "NOUN", 3, "nsubj") +
                          row(3, "barked", "VERB", 0, "root", "bark") + "\n";

}  // namespace

TEST_CASE("self evaluation is perfect") {
  Treebank g = parse_conllu(kGold);
  EvalReport r = evaluate(g, g);
  for (int m = 0; m < kMetricCount; ++m) {
    CHECK(r.scores[m].f1 == doctest::Approx(100.0));
    CHECK(r.scores[m].precision == r.scores[m].recall);
  }
  CHECK(r.aligned_words == 3);
}

TEST_CASE("one wrong UPOS out of ten words") {
  std::string gold, system;
  for (int i = 1; i <= 10; ++i) {
    gold += row(i, "w" + std::to_string(i), "NOUN", i == 1 ? 0 : 1, i == 1 ? "root" : "dep");
    system += row(i, "w" + std::to_string(i), i == 4 ? "VERB" : "NOUN", i == 1 ? 0 : 1, i == 1 ? "root" : "dep");
  }
  EvalReport r = evaluate(parse_conllu(gold + "\n"), parse_conllu(system + "\n"));
  CHECK(format_score(r[Metric::kUpos].f1) == "90.00");
  CHECK(r[Metric::kUpos].precision == r[Metric::kUpos].recall);
  CHECK(r[Metric::kLas].f1 == doctest::Approx(100.0));
}

TEST_CASE("wrong head on a content word") {
  const std::string gold = kGold.substr(0, kGold.size() - 1) + row(4, "loudly", "ADV", 3, "advmod") + "\n";
  const std::string system = kGold.substr(0, kGold.size() - 1) + row(4, "loudly", "ADV", 2, "advmod") + "\n";
  EvalReport r = evaluate(parse_conllu(gold), parse_conllu(system));
  // Frozen from the reference evaluation script on this pair.
  CHECK(format_score(r[Metric::kUas].f1) == "75.00");
  CHECK(format_score(r[Metric::kLas].f1) == "75.00");
  CHECK(format_score(r[Metric::kClas].f1) == "66.67");
  CHECK(format_score(r[Metric::kMlas].f1) == "66.67");
  CHECK(format_score(r[Metric::kBlex].f1) == "66.67");
  CHECK(r[Metric::kUpos].f1 == doctest::Approx(100.0));
}

TEST_CASE("deprel subtypes are ignored") {
  std::string system = row(1, "The", "DET", 2, "det:def") + row(2, "dog", "NOUN", 3, "nsubj:pass") +
                       row(3, "barked", "VERB", 0, "root", "bark") + "\n";
  CHECK(evaluate(parse_conllu(kGold), parse_conllu(system))[Metric::kLas].f1 == doctest::Approx(100.0));
}

TEST_CASE("alignment") {
  const std::string one = row(1, "cannot", "AUX", 0, "root") + "\n";
  const std::string two = row(1, "can", "AUX", 0, "root") + row(2, "not", "PART", 1, "advmod") + "\n";
  const std::string mwt = "1-2\tcannot\t_\t_\t_\t_\t_\t_\t_\t_\n" + two;

  SUBCASE("identity alignment") {
    auto pairs = align(parse_conllu(kGold), parse_conllu(kGold));
    REQUIRE(pairs.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK((pairs[i].gold == i && pairs[i].system == i));
  }
  SUBCASE("different tokenization aligns nothing inside the span") {
    CHECK(align(parse_conllu(one), parse_conllu(two)).empty());
    EvalReport r = evaluate(parse_conllu(one), parse_conllu(two));
    CHECK(r[Metric::kWords].f1 == doctest::Approx(0.0));
    CHECK(r[Metric::kTokens].f1 == doctest::Approx(0.0));
  }
  SUBCASE("multiword tokens align their words") {
    auto pairs = align(parse_conllu(mwt), parse_conllu(mwt));
    CHECK(pairs.size() == 2);
    EvalReport r = evaluate(parse_conllu(mwt), parse_conllu(mwt));
    CHECK(r[Metric::kTokens].gold_total == 1);
    CHECK(r[Metric::kWords].gold_total == 2);
  }
  SUBCASE("different underlying text is an error") {
    CHECK_THROWS_AS(align(parse_conllu(one), parse_conllu(kGold)), AlignmentError);
  }
}

TEST_CASE("inapplicable columns") {
  std::string gold = "1\ta\t_\tX\t_\t_\t0\troot\t_\t_\n\n";
  EvalReport r = evaluate(parse_conllu(gold), parse_conllu(gold));
  CHECK_FALSE(r[Metric::kXpos].applicable);
  CHECK_FALSE(r[Metric::kLemmas].applicable);
  CHECK(r[Metric::kUpos].applicable);
  CHECK(format_report(r).find("XPOS.f1=NA") != std::string::npos);
}

TEST_CASE("macro average") {
  EvalReport a, b;
  a[Metric::kUpos].f1 = 90;
  b[Metric::kUpos].f1 = 100;
  std::vector<EvalReport> one{a};
  CHECK(macro_average(one)[Metric::kUpos].f1 == 90);
  std::vector<EvalReport> ab{a, b}, ba{b, a};
  CHECK(format_score(macro_average(ab)[Metric::kUpos].f1) == "95.00");
  CHECK(macro_average(ab)[Metric::kUpos].f1 == macro_average(ba)[Metric::kUpos].f1);
  b[Metric::kXpos].applicable = false;
  a[Metric::kXpos].f1 = 80;
  std::vector<EvalReport> skip{a, b};
  CHECK(macro_average(skip)[Metric::kXpos].f1 == 80);
  CHECK_THROWS(macro_average(std::span<const EvalReport>{}));
}

TEST_CASE("relative error reduction") {
  CHECK(format_score(relative_error_reduction(96.39, 97.00)) == "16.90");
  CHECK(relative_error_reduction(96.51, 96.66) == doctest::Approx(4.30).epsilon(0.01));
  CHECK(relative_error_reduction(90, 90) == 0.0);
  CHECK(relative_error_reduction(73.2, 100) == doctest::Approx(100.0));
  CHECK_THROWS(relative_error_reduction(100, 100));
}

TEST_CASE("round half up") {
  CHECK(format_score(12.345) == "12.35");
  CHECK(format_score(0.125) == "0.13");
  CHECK(format_score(99.994) == "99.99");
}
