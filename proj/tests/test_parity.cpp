#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "jointud/evaluator.hpp"

using namespace jointud;

namespace {

struct Expected {
  double precision, recall, f1;
};

// case -> metric -> official scores
std::map<std::string, std::map<std::string, Expected>> load_expected(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::map<std::string, std::map<std::string, Expected>> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string name, metric;
    Expected e{};
    row >> name >> metric >> e.precision >> e.recall >> e.f1;
    out[name][metric] = e;
  }
  return out;
}

}  // namespace

TEST_CASE("all metrics match the official script on every fixture pair") {
  const std::string dir = std::string(JOINTUD_TEST_DATA) + "/parity/";
  const auto expected = load_expected(dir + "expected.tsv");
  CHECK(expected.size() >= 10);
  for (const auto& [name, metrics] : expected) {
    CAPTURE(name);
    EvalReport report = evaluate(read_conllu_file(dir + name + ".gold.conllu"),
                                 read_conllu_file(dir + name + ".system.conllu"));
    REQUIRE(metrics.size() == kMetricCount);
    for (int m = 0; m < kMetricCount; ++m) {
      const std::string metric(kMetricNames[m]);
      CAPTURE(metric);
      const Expected& e = metrics.at(metric);
      CHECK(std::abs(report.scores[m].precision - e.precision) <= 0.01);
      CHECK(std::abs(report.scores[m].recall - e.recall) <= 0.01);
      CHECK(std::abs(report.scores[m].f1 - e.f1) <= 0.01);
    }
  }
}
