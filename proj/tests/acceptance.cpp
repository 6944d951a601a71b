// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "op_suite.hpp"
#include "tree_oracle.hpp"
#include "jointud/checkpoint.hpp"
#include "jointud/evaluator.hpp"
#include "jointud/lemma_rules.hpp"
#include "jointud/trainer.hpp"
#include "jointud/tree_decode.hpp"

using namespace jointud;
using namespace jointud::testing;

namespace {

constexpr double kGradTolDouble = 1e-6;
constexpr double kGradTolFloat = 1e-2;
constexpr double kGradBudgetSeconds = 60;
constexpr int kMstInstances = 1000;
constexpr int kMstMaxWords = 5;
constexpr double kParityTol = 0.01;
constexpr double kArithmeticTol = 0.2;
constexpr double kLossRatio = 0.5;
constexpr double kUposOverMajority = 20;
constexpr double kDeskBudgetSeconds = 15 * 60;
constexpr double kAblationSlack = 0.5;

const std::string kData = JOINTUD_TEST_DATA;
const std::string kConfigs = JOINTUD_CONFIG_DIR;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// Gradient suite ------------------------------------------------------------

// Random 3-word sentences with a random single-root tree.
Treebank random_sentences(Rng& rng, int count) {
  static const char* upos[] = {"NOUN", "VERB", "ADJ", "DET"};
  static const char* rels[] = {"nsubj", "obj", "amod", "det", "nmod:poss"};
  static const char* feats[] = {"_", "Number=Sing", "Number=Plur", "Tense=Past|VerbForm=Fin"};
  std::string text;
  for (int s = 0; s < count; ++s) {
    // Word k (1-based) attaches to a random earlier word or to a random word
    // after the root, keeping the tree acyclic.
    const int root = 1 + static_cast<int>(rng.uniform() * 3);
    std::vector<int> order{root};
    for (int k = 1; k <= 3; ++k)
      if (k != root) order.push_back(k);
    std::vector<int> heads(4, 0);
    for (size_t i = 1; i < order.size(); ++i) heads[order[i]] = order[static_cast<size_t>(rng.uniform() * i)];
    for (int k = 1; k <= 3; ++k) {
      std::string form;
      const int len = 2 + static_cast<int>(rng.uniform() * 4);
      for (int c = 0; c < len; ++c) form += static_cast<char>('a' + static_cast<int>(rng.uniform() * 6));
      if (rng.uniform() < 0.3) form[0] = static_cast<char>(form[0] - 'a' + 'A');
      const std::string lemma = rng.uniform() < 0.5 ? form.substr(0, form.size() - 1) : form;
      text += std::to_string(k) + "\t" + form + "\t" + lemma + "\t" + upos[static_cast<int>(rng.uniform() * 4)] +
              "\tX" + std::to_string(static_cast<int>(rng.uniform() * 3)) + "\t" +
              feats[static_cast<int>(rng.uniform() * 4)] + "\t" + std::to_string(heads[k]) + "\t" +
              (heads[k] == 0 ? std::string("root") : rels[static_cast<int>(rng.uniform() * 5)]) + "\t_\t_\n";
    }
    text += "\n";
  }
  return parse_conllu(text, Validation::kStrict);
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.embed.word_dim = 3;
  c.embed.min_count = 1;
  c.embed.char_dim = 3;
  c.embed.char_gru_dim = 2;
  c.shared_layers = 1;
  c.shared_dim = 3;
  c.tagger_dim = 2;
  c.parser_dim = 3;
  c.arc_dim = 2;
  c.label_dim = 2;
  c.dropout = 0;
  c.seed = 5;
  return c;
}

template <typename Scalar>
GradCheckResult joint_loss_check(const Treebank& tb, double step, double floor) {
  const ModelConfig c = tiny_model();
  JointModel<Scalar> model(c, collect_labels(tb), build_word_vocab(tb, 1), build_char_vocab(tb));
  std::vector<Parameter<Scalar>*> params;
  for (size_t i = 0; i < model.params().size(); ++i) params.push_back(&model.params().entry(i).param);
  GradCheckResult worst;
  for (size_t s = 0; s < tb.sentences.size(); ++s) {
    const SentenceFeatures f = featurize(tb.sentences[s], c.embed, model.words(), model.chars(), nullptr, {}, s);
    const GoldTargets t = gold_targets(tb.sentences[s], model.labels());
    auto r = gradient_check<Scalar>(params, [&](Graph<Scalar>& g) { return model.loss(g, f, t, nullptr).total; }, step,
                                    floor);
    worst.max_relative_error = std::max(worst.max_relative_error, r.max_relative_error);
    worst.checked += r.checked;
  }
  return worst;
}

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  double worst_double = 0, worst_float = 0;
  std::string worst_op;
  for (const auto& [op, r] : check_all_ops<double>()) {
    if (r.max_relative_error > worst_double) worst_double = r.max_relative_error, worst_op = op;
    if (r.checked == 0) return {false, op + ": nothing checked"};
  }
  for (const auto& [op, r] : check_all_ops<float>()) worst_float = std::max(worst_float, r.max_relative_error);
  Rng rng(21);
  const Treebank tb = random_sentences(rng, 4);
  const GradCheckResult full_double = joint_loss_check<double>(tb, 1e-5, 1e-3);
  const GradCheckResult full_float = joint_loss_check<float>(tb, 1e-2, 1e-2);
  const double elapsed = seconds_since(start);
  const bool pass = worst_double < kGradTolDouble && full_double.max_relative_error < kGradTolDouble &&
                    worst_float < kGradTolFloat && full_float.max_relative_error < kGradTolFloat &&
                    elapsed < kGradBudgetSeconds;
  return {pass, fmt("ops max rel err %.2e (float64, worst ", worst_double) + worst_op +
                    fmt(") %.2e (float32); joint loss %.2e (float64) %.2e (float32); ", worst_float,
                        full_double.max_relative_error, full_float.max_relative_error) +
                    fmt("%.0f entries, %.1f s", static_cast<double>(full_double.checked), elapsed)};
}

// Lemma round trip ----------------------------------------------------------

Outcome lemma_round_trip() {
  long pairs = 0, failures = 0;
  std::string first_failure;
  auto check = [&](const std::string& form, const std::string& lemma) {
    ++pairs;
    if (apply_script(induce_script(form, lemma), form) != lemma) {
      if (!failures++) first_failure = form + " -> " + lemma;
    }
  };
  std::vector<std::string> files{kData + "/synthetic/train.conllu", kData + "/synthetic/dev.conllu"};
  for (const auto& entry : std::filesystem::directory_iterator(kData + "/parity"))
    if (entry.path().string().ends_with(".gold.conllu")) files.push_back(entry.path().string());
  for (const auto& path : files)
    for (const auto& s : read_conllu_file(path).sentences)
      for (const auto& w : s.words)
        if (w.lemma != "_") check(w.form, w.lemma);
  // identity, suppletive, casing, non-ASCII
  const std::pair<const char*, const char*> fixtures[] = {
      {"dogs", "dogs"}, {"went", "go"},       {"better", "good"}, {"Paris", "Paris"}, {"The", "the"},
      {"USA", "usa"},   {"iPhone", "iphone"}, {"Häuser", "Haus"}, {"ĳsselmeer", "IJsselmeer"}};
  for (const auto& [form, lemma] : fixtures) check(form, lemma);
  // Regular inflections share one script.
  const bool shared = encode_script(induce_script("walked", "walk")) == encode_script(induce_script("jumped", "jump"));
  return {failures == 0 && shared, fmt("%.0f pairs, %.0f failures", static_cast<double>(pairs),
                                       static_cast<double>(failures)) +
                                       (failures ? ", first: " + first_failure : "") +
                                       (shared ? "" : ", walked/jumped scripts differ")};
}

// MST oracle ----------------------------------------------------------------

Outcome mst_oracle() {
  Rng rng(2024);
  int mismatches = 0, invalid = 0;
  for (int i = 0; i < kMstInstances; ++i) {
    const int n = 1 + static_cast<int>(rng.uniform() * kMstMaxWords);
    ArcScores scores(n + 1, n);
    for (Eigen::Index k = 0; k < scores.size(); ++k) scores.data()[k] = rng.uniform(-5, 5);
    const std::vector<int> heads = mst_decode(scores, true);
    if (!is_valid_tree(heads, true)) ++invalid;
    if (std::abs(tree_score(scores, heads) - best_tree_score(scores, true)) > 1e-9) ++mismatches;
  }
  return {mismatches == 0 && invalid == 0,
          fmt("%.0f instances (n <= %.0f), %.0f score mismatches, %.0f invalid trees", kMstInstances, kMstMaxWords,
              mismatches, invalid)};
}

// Evaluator parity ----------------------------------------------------------

Outcome evaluator_parity() {
  std::ifstream in(kData + "/parity/expected.tsv");
  if (!in) return {false, "expected.tsv missing"};
  std::map<std::string, std::map<std::string, std::array<double, 3>>> expected;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string name, metric;
    std::array<double, 3> v{};
    row >> name >> metric >> v[0] >> v[1] >> v[2];
    expected[name][metric] = v;
  }
  double worst = 0;
  std::string where;
  size_t compared = 0;
  for (const auto& [name, metrics] : expected) {
    const EvalReport r = evaluate(read_conllu_file(kData + "/parity/" + name + ".gold.conllu"),
                                  read_conllu_file(kData + "/parity/" + name + ".system.conllu"));
    for (int m = 0; m < kMetricCount; ++m) {
      const auto& v = metrics.at(std::string(kMetricNames[m]));
      const MetricScore& s = r.scores[m];
      for (double diff : {s.precision - v[0], s.recall - v[1], s.f1 - v[2]}) {
        ++compared;
        if (std::abs(diff) > worst) worst = std::abs(diff), where = name + " " + std::string(kMetricNames[m]);
      }
    }
  }
  return {expected.size() >= 10 && worst <= kParityTol,
          fmt("%.0f pairs, %.0f values, max |diff| %.4f", static_cast<double>(expected.size()),
              static_cast<double>(compared), worst) +
              (where.empty() ? "" : " at " + where)};
}

// Paper arithmetic ----------------------------------------------------------

Outcome paper_arithmetic() {
  struct Row {
    const char* metric;
    double baseline, improved, stated;
  };
  const Row rows[] = {{"UPOS", 96.39, 97.00, 16.9}, {"UFeats", 94.28, 94.97, 12.0},
                      {"Lemmas", 96.51, 96.66, 4.3}, {"LAS", 84.09, 86.42, 14.5}};
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    const double got = relative_error_reduction(r.baseline, r.improved);
    pass = pass && std::abs(got - r.stated) <= kArithmeticTol;
    detail += std::string(detail.empty() ? "" : ", ") + r.metric + fmt(" %.2f (stated %.1f)", got, r.stated);
  }
  return {pass, detail};
}

// Desk-scale runs -----------------------------------------------------------

struct DeskRun {
  TrainResult result;
  double seconds = 0;
  Treebank dev_prediction;
  EvalReport dev_report;
};

void load_desk_config(ModelConfig& model, TrainConfig& train) {
  std::ifstream in(kConfigs + "/desk.conf");
  if (!in) throw std::runtime_error("configs/desk.conf missing");
  std::stringstream text;
  text << in.rdbuf();
  KeyValueSchema ms = model.schema(), ts = train.schema();
  for (const auto& [k, v] : parse_key_values(text.str(), "desk.conf")) (ms.has(k) ? ms : ts).set(k, v);
  train.threads = 1;
}

const Treebank& desk_train() {
  static const Treebank tb = read_conllu_file(kData + "/synthetic/train.conllu", Validation::kStrict);
  return tb;
}
const Treebank& desk_dev() {
  static const Treebank tb = read_conllu_file(kData + "/synthetic/dev.conllu", Validation::kStrict);
  return tb;
}

Treebank stripped(const Treebank& tb) {
  Treebank out = tb;
  for (auto& s : out.sentences)
    for (auto& w : s.words) {
      w.upos = w.xpos = w.lemma = w.deprel = "_";
      w.feats.clear();
      w.head = kNoHead;
    }
  return out;
}

DeskRun desk_run(const std::function<void(ModelConfig&)>& adjust) {
  ModelConfig model;
  TrainConfig train;
  load_desk_config(model, train);
  adjust(model);
  const auto start = std::chrono::steady_clock::now();
  Corpus dev{&desk_dev(), {}};
  DeskRun run;
  run.result = jointud::train(model, train, Corpus{&desk_train(), {}}, &dev, nullptr);
  run.seconds = seconds_since(start);
  const Treebank input = stripped(desk_dev());
  run.dev_prediction = predict(*run.result.model, Corpus{&input, {}}, nullptr, 1);
  run.dev_report = evaluate(desk_dev(), run.dev_prediction);
  return run;
}

std::string checkpoint_bytes(const JointModel<float>& m) {
  std::ostringstream out;
  save_checkpoint(out, m);
  return out.str();
}

// Returns the first problem, or "".
std::string strict_problem(const Treebank& tb) {
  try {
    const Treebank back = parse_conllu(serialize_conllu(tb), Validation::kStrict);
    for (const auto& s : back.sentences) {
      const std::string problem = validate_sentence(s);
      if (!problem.empty()) return problem;
    }
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

Outcome desk_learning(const DeskRun& run) {
  const auto& epochs = run.result.epochs;
  const double first = epochs.front().train_loss, last = epochs.back().train_loss;
  std::map<std::string, long> counts;
  long words = 0;
  for (const auto& s : desk_train().sentences)
    for (const auto& w : s.words) ++counts[w.upos], ++words;
  long majority = 0;
  for (const auto& [tag, n] : counts) majority = std::max(majority, n);
  const double baseline = 100.0 * static_cast<double>(majority) / static_cast<double>(words);
  const Treebank input = stripped(desk_train());
  const Treebank train_prediction = predict(*run.result.model, Corpus{&input, {}}, nullptr, 1);
  const double train_upos = evaluate(desk_train(), train_prediction)[Metric::kUpos].f1;
  std::string problem = strict_problem(train_prediction);
  if (problem.empty()) problem = strict_problem(run.dev_prediction);
  const bool pass = epochs.size() == 10 && last < kLossRatio * first && train_upos >= baseline + kUposOverMajority &&
                    problem.empty() && run.seconds < kDeskBudgetSeconds;
  return {pass, fmt("loss %.3f -> %.3f (ratio %.3f); ", first, last, last / first) +
                    fmt("train UPOS %.2f vs majority %.2f; dev UPOS %.2f LAS %.2f; ", train_upos, baseline,
                        run.dev_report[Metric::kUpos].f1, run.dev_report[Metric::kLas].f1) +
                    (problem.empty() ? "strict validation clean" : "invalid output: " + problem) +
                    fmt("; %.0f s", run.seconds)};
}

Outcome ablation(const DeskRun& both) {
  const DeskRun words_only = desk_run([](ModelConfig& m) { m.embed.char_gru_dim = 0; });
  const DeskRun chars_only = desk_run([](ModelConfig& m) { m.embed.word_dim = 0; });
  const double full = both.dev_report[Metric::kUpos].f1;
  const double we = words_only.dev_report[Metric::kUpos].f1, cle = chars_only.dev_report[Metric::kUpos].f1;
  return {full >= we - kAblationSlack && full >= cle - kAblationSlack,
          fmt("dev UPOS WE+CLE %.2f, WE %.2f, CLE %.2f (slack %.1f)", full, we, cle, kAblationSlack)};
}

Outcome determinism(const DeskRun& first) {
  const DeskRun second = desk_run([](ModelConfig&) {});
  const bool same_checkpoint = checkpoint_bytes(*first.result.model) == checkpoint_bytes(*second.result.model);
  const bool same_prediction = serialize_conllu(first.dev_prediction) == serialize_conllu(second.dev_prediction);
  const Treebank input = stripped(desk_dev());
  const bool threads_agree =
      serialize_conllu(predict(*second.result.model, Corpus{&input, {}}, nullptr, 4)) ==
      serialize_conllu(second.dev_prediction);
  return {same_checkpoint && same_prediction && threads_agree,
          std::string("checkpoints ") + (same_checkpoint ? "identical" : "differ") + ", predictions " +
              (same_prediction ? "identical" : "differ") + ", 1 vs 4 threads " + (threads_agree ? "identical" : "differ")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };
  report("gradient suite", gradient_suite);
  report("lemma round trip", lemma_round_trip);
  report("MST oracle", mst_oracle);
  report("evaluator parity", evaluator_parity);
  report("paper arithmetic", paper_arithmetic);

  std::optional<DeskRun> desk;
  try {
    desk = desk_run([](ModelConfig&) {});
  } catch (const std::exception& e) {
    std::fprintf(stderr, "desk-scale training failed: %s\n", e.what());
  }
  auto needs_desk = [&](const std::function<Outcome(const DeskRun&)>& fn) {
    return [&, fn]() -> Outcome { return desk ? fn(*desk) : Outcome{false, "desk-scale training failed"}; };
  };
  report("desk-scale learning", needs_desk(desk_learning));
  report("ablation direction", needs_desk(ablation));
  report("determinism", needs_desk(determinism));
  return failures;
}
