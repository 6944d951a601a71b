#include <doctest.h>

#include "jointud/conllu.hpp"
#include "jointud/rng.hpp"

using namespace jointud;

namespace {

const char* kMinimal = "1\tdogs\tdog\tNOUN\tNNS\tNumber=Plur\t0\troot\t_\t_\n\n";

const char* kMultiword =
    "# sent_id = mwt-1\n"
    "# text = I cannot go\n"
    "1\tI\tI\tPRON\tPRP\tCase=Nom|Number=Sing|Person=1|PronType=Prs\t3\tnsubj\t_\t_\n"
    "2-3\tcannot\t_\t_\t_\t_\t_\t_\t_\t_\n"
    "2\tcan\tcan\tAUX\tMD\tVerbForm=Fin\t4\taux\t_\t_\n"
    "3\tnot\tnot\tPART\tRB\t_\t4\tadvmod\t_\t_\n"
    "4\tgo\tgo\tVERB\tVB\tVerbForm=Inf\t0\troot\t_\tSpaceAfter=No\n"
    "\n";

// Random well-formed sentence: a random tree, optional multiword token,
// optional empty node, comments.
std::string random_sentence(Rng& rng, int index) {
  const int n = 1 + static_cast<int>(rng.below(8));
  std::vector<int> heads(n + 1, 0);
  std::vector<int> order;
  for (int i = 1; i <= n; ++i) order.push_back(i);
  rng.shuffle(order);
  int root = order[0];
  for (size_t k = 1; k < order.size(); ++k) heads[order[k]] = order[rng.below(k)];
  std::string out = "# sent_id = " + std::to_string(index) + "\n";
  if (rng.below(2)) out += "# text = random\n";
  int mwt_start = n >= 2 && rng.below(3) == 0 ? 1 + static_cast<int>(rng.below(n - 1)) : -1;
  const char* upos[] = {"NOUN", "VERB", "ADP", "DET", "PRON"};
  const char* rels[] = {"nsubj", "obj", "case", "det", "obl:tmod", "nmod:poss"};
  for (int i = 1; i <= n; ++i) {
    if (i == mwt_start) out += std::to_string(i) + "-" + std::to_string(i + 1) + "\tmw" + std::to_string(i) + "\t_\t_\t_\t_\t_\t_\t_\t_\n";
    std::string feats = rng.below(2) ? "Case=Nom|Number=Sing" : "_";
    std::string rel = i == root ? "root" : rels[rng.below(6)];
    out += std::to_string(i) + "\tw" + std::to_string(rng.below(100)) + "\tl\t" + upos[rng.below(5)] + "\t_\t" + feats +
           "\t" + std::to_string(heads[i]) + "\t" + rel + "\t_\t" + (rng.below(4) ? "_" : "SpaceAfter=No") + "\n";
    if (i == n && rng.below(4) == 0) out += std::to_string(i) + ".1\tempty\tempty\tVERB\t_\t_\t_\t_\t1:orphan\t_\n";
  }
  return out + "\n";
}

}  // namespace

TEST_CASE("minimal record parses") {
  Treebank tb = parse_conllu(kMinimal, Validation::kStrict);
  REQUIRE(tb.sentences.size() == 1);
  REQUIRE(tb.sentences[0].words.size() == 1);
  const Word& w = tb.sentences[0].words[0];
  CHECK(w.form == "dogs");
  CHECK(w.lemma == "dog");
  CHECK(w.head == 0);
  CHECK(w.feats == Feats{{"Number", "Plur"}});
  CHECK(serialize_conllu(tb) == kMinimal);
}

TEST_CASE("wrong column count names the line") {
  std::string text = "# c\n1\tdogs\tdog\tNOUN\tNNS\tNumber=Plur\t0\troot\t_\n\n";
  try {
    parse_conllu(text);
    FAIL("expected ConlluError");
  } catch (const ConlluError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("non-integer id and head are rejected") {
  CHECK_THROWS_AS(parse_conllu("x\tdogs\tdog\tNOUN\t_\t_\t0\troot\t_\t_\n\n"), ConlluError);
  CHECK_THROWS_AS(parse_conllu("1\tdogs\tdog\tNOUN\t_\t_\ttwo\troot\t_\t_\n\n"), ConlluError);
  CHECK_THROWS_AS(parse_conllu("1\tdogs\tdog\tNOUN\t_\t_\t_\troot\t_\t_\n\n", Validation::kStrict), ConlluError);
  // Lenient mode accepts an unannotated head.
  Treebank tb = parse_conllu("1\tdogs\tdog\tNOUN\t_\t_\t_\t_\t_\t_\n\n");
  CHECK(tb.sentences[0].words[0].head == kNoHead);
}

TEST_CASE("head range is enforced in strict mode only") {
  const char* text = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t7\tdep\t_\t_\n\n";
  CHECK_THROWS_AS(parse_conllu(text, Validation::kStrict), ConlluError);
  CHECK_NOTHROW(parse_conllu(text, Validation::kLenient));
}

TEST_CASE("strict mode rejects cycles, multiple roots and unsorted features") {
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n\n", Validation::kStrict),
                  ConlluError);
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n\n", Validation::kStrict),
                  ConlluError);
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tX\t_\tNumber=Sing|Case=Nom\t0\troot\t_\t_\n\n", Validation::kStrict), ConlluError);
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tX\t_\t_\t0\tnsubj\t_\t_\n\n", Validation::kStrict), ConlluError);
  // Lenient tolerates all of them.
  CHECK_NOTHROW(parse_conllu("1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n\n"));
}

TEST_CASE("multiword tokens") {
  Treebank tb = parse_conllu(kMultiword, Validation::kStrict);
  const Sentence& s = tb.sentences.at(0);
  REQUIRE(s.multiword_tokens.size() == 1);
  CHECK(s.multiword_tokens[0].start == 2);
  CHECK(s.multiword_tokens[0].end == 3);
  CHECK(s.multiword_tokens[0].form == "cannot");
  CHECK(s.words.size() == 4);
  CHECK(serialize_conllu(tb) == kMultiword);
}

TEST_CASE("minimal multiword fixture has two words") {
  const char* text =
      "1-2\tcannot\t_\t_\t_\t_\t_\t_\t_\t_\n1\tcan\tcan\tAUX\t_\t_\t0\troot\t_\t_\n2\tnot\tnot\tPART\t_\t_\t1\tadvmod\t_\t_\n\n";
  Treebank tb = parse_conllu(text, Validation::kStrict);
  const Sentence& s = tb.sentences.at(0);
  REQUIRE(s.multiword_tokens.size() == 1);
  CHECK(s.multiword_tokens[0] .start == 1);
  CHECK(s.multiword_tokens[0].end == 2);
  CHECK(s.multiword_tokens[0].form == "cannot");
  CHECK(s.words.size() == 2);
}

TEST_CASE("empty nodes are preserved and excluded from words") {
  const char* text =
      "1\tSue\tSue\tPROPN\t_\t_\t2\tnsubj\t_\t_\n2\tlikes\tlike\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2.1\tlikes\tlike\tVERB\t_\t_\t_\t_\t0:root\t_\n3\ttea\ttea\tNOUN\t_\t_\t2\tobj\t_\t_\n\n";
  Treebank tb = parse_conllu(text, Validation::kStrict);
  CHECK(tb.sentences[0].words.size() == 3);
  CHECK(tb.sentences[0].empty_nodes.size() == 1);
  CHECK(serialize_conllu(tb) == text);
}

TEST_CASE("serialization basics") {
  CHECK(serialize_conllu(Treebank{}).empty());
  Treebank tb;
  Sentence s;
  s.comments.push_back(" sent_id = 1");
  Word w;
  w.id = 1;
  w.form = "Hi";
  w.head = 0;
  w.deprel = "root";
  s.words.push_back(w);
  tb.sentences.push_back(s);
  CHECK(serialize_conllu(tb) == "# sent_id = 1\n1\tHi\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
}

TEST_CASE("unterminated final sentence is accepted with a warning") {
  std::vector<std::string> warnings;
  Treebank tb = parse_conllu("1\tdogs\tdog\tNOUN\tNNS\tNumber=Plur\t0\troot\t_\t_\n", Validation::kStrict, &warnings);
  CHECK(tb.sentences.size() == 1);
  CHECK(warnings.size() == 1);
}

TEST_CASE("CRLF input is accepted, output uses LF") {
  Treebank tb = parse_conllu("1\tdogs\tdog\tNOUN\tNNS\tNumber=Plur\t0\troot\t_\t_\r\n\r\n");
  CHECK(serialize_conllu(tb) == kMinimal);
}

TEST_CASE("property: round trip and idempotence on random files") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int sentences = static_cast<int>(rng.below(4));
    for (int k = 0; k < sentences; ++k) text += random_sentence(rng, k);
    Treebank tb = parse_conllu(text, Validation::kStrict);
    std::string again = serialize_conllu(tb);
    REQUIRE(again == text);
    REQUIRE(parse_conllu(again, Validation::kStrict) == tb);
    for (const auto& s : tb.sentences)
      for (const auto& w : s.words) REQUIRE((w.head >= 0 && w.head <= static_cast<int>(s.size())));
  }
}
