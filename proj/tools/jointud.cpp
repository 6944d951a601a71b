// jointud: train / predict / evaluate / analyze.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "jointud/checkpoint.hpp"
#include "jointud/evaluator.hpp"
#include "jointud/trainer.hpp"

using namespace jointud;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const std::string& role) {
  if (!std::filesystem::is_regular_file(path)) throw std::runtime_error(role + " not found: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// name=path pairs, in canonical source order.
std::vector<std::pair<std::string, std::string>> parse_sources(const std::vector<std::string>& specs, const char* flag) {
  std::map<std::string, std::string> by_name;
  for (const auto& spec : specs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
      throw UsageError(std::string(flag) + " expects name=path, got '" + spec + "'");
    if (!by_name.emplace(spec.substr(0, eq), spec.substr(eq + 1)).second)
      throw UsageError(std::string(flag) + " given twice for source '" + spec.substr(0, eq) + "'");
  }
  std::vector<std::string> names;
  for (const auto& [name, path] : by_name) names.push_back(name);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& name : canonical_context_order(names)) out.emplace_back(name, by_name[name]);
  return out;
}

// Loads context files and checks them against the model's sources.
struct LoadedContexts {
  std::vector<ContextVectors> owned;
  std::vector<const ContextVectors*> pointers;
};

LoadedContexts load_contexts(const std::vector<std::pair<std::string, std::string>>& sources,
                             const std::vector<std::pair<std::string, int>>& expected, const Treebank& tb) {
  if (sources.size() != expected.size())
    throw std::runtime_error("model uses " + std::to_string(expected.size()) + " context sources, " +
                             std::to_string(sources.size()) + " given");
  LoadedContexts out;
  out.owned.reserve(sources.size());
  for (size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].first != expected[i].first)
      throw std::runtime_error("context source '" + sources[i].first + "' does not match model source '" +
                               expected[i].first + "'");
    out.owned.push_back(read_ctxe_file(sources[i].second, sources[i].first));
    if (out.owned.back().dim != expected[i].second)
      throw std::runtime_error(sources[i].second + ": dimension " + std::to_string(out.owned.back().dim) +
                               ", model expects " + std::to_string(expected[i].second));
    check_context_alignment(out.owned.back(), tb);
  }
  for (const auto& c : out.owned) out.pointers.push_back(&c);
  return out;
}

struct TrainArgs {
  std::string train, dev, model, pretrained, config, log;
  std::vector<std::string> ctx, dev_ctx, set;
  std::optional<int> seed;
};

int run_train(const TrainArgs& a) {
  require_file(a.train, "training file");
  if (!a.dev.empty()) require_file(a.dev, "dev file");
  if (!a.pretrained.empty()) require_file(a.pretrained, "pretrained embeddings");
  if (!a.config.empty()) require_file(a.config, "config file");
  auto ctx = parse_sources(a.ctx, "--ctx");
  auto dev_ctx = parse_sources(a.dev_ctx, "--dev-ctx");
  for (const auto& [name, path] : ctx) require_file(path, "context file");
  for (const auto& [name, path] : dev_ctx) require_file(path, "context file");
  if (!a.dev.empty() && dev_ctx.size() != ctx.size())
    throw UsageError("--dev-ctx must name the same sources as --ctx");

  ModelConfig model_config;
  TrainConfig train_config;
  KeyValueSchema model_schema = model_config.schema();
  KeyValueSchema train_schema = train_config.schema();
  auto apply = [&](const std::string& key, const std::string& value) {
    if (model_schema.has(key)) model_schema.set(key, value);
    else if (train_schema.has(key)) train_schema.set(key, value);
    else throw ConfigError("unknown configuration key: " + key);
  };
  if (!a.config.empty())
    for (const auto& [k, v] : parse_key_values(read_text(a.config), a.config)) apply(k, v);
  for (const auto& kv : a.set) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.seed) model_config.seed = *a.seed;

  Treebank train_tb = read_conllu_file(a.train, Validation::kStrict);
  std::optional<Treebank> dev_tb;
  if (!a.dev.empty()) dev_tb = read_conllu_file(a.dev, Validation::kStrict);
  std::optional<PretrainedTable> pretrained;
  if (!a.pretrained.empty()) pretrained = load_pretrained(a.pretrained);

  model_config.embed.contexts.clear();
  LoadedContexts train_ctx_files;
  for (const auto& [name, path] : ctx) {
    train_ctx_files.owned.push_back(read_ctxe_file(path, name));
    model_config.embed.contexts.emplace_back(name, train_ctx_files.owned.back().dim);
  }
  for (const auto& c : train_ctx_files.owned) {
    check_context_alignment(c, train_tb);
    train_ctx_files.pointers.push_back(&c);
  }
  LoadedContexts dev_ctx_files;
  if (dev_tb) dev_ctx_files = load_contexts(dev_ctx, model_config.embed.contexts, *dev_tb);

  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw std::runtime_error("cannot write " + a.log);
  }
  Corpus train_corpus{&train_tb, train_ctx_files.pointers};
  Corpus dev_corpus{dev_tb ? &*dev_tb : nullptr, dev_ctx_files.pointers};
  TrainResult result = train(model_config, train_config, train_corpus, dev_tb ? &dev_corpus : nullptr,
                             pretrained ? &*pretrained : nullptr, [&](const EpochStats& s) {
                               const std::string line = format_epoch_line(s);
                               std::cout << line << std::endl;
                               if (log_file) log_file << line << std::endl;
                             });
  save_checkpoint_file(a.model, *result.model);
  std::cerr << "best epoch " << result.best_epoch << ", model written to " << a.model << "\n";
  return 0;
}

struct PredictArgs {
  std::string model, input, output, pretrained;
  std::vector<std::string> ctx;
  int threads = 0;
};

int run_predict(const PredictArgs& a) {
  require_file(a.model, "model");
  require_file(a.input, "input file");
  if (!a.pretrained.empty()) require_file(a.pretrained, "pretrained embeddings");
  auto ctx = parse_sources(a.ctx, "--ctx");
  for (const auto& [name, path] : ctx) require_file(path, "context file");

  auto model = load_checkpoint_file(a.model);
  const EmbedderConfig& embed = model->config().embed;
  std::optional<PretrainedTable> pretrained;
  if (embed.pretrained_dim > 0) {
    if (a.pretrained.empty()) throw UsageError("model uses pretrained embeddings; pass --pretrained");
    pretrained = load_pretrained(a.pretrained);
    if (pretrained->dim() != embed.pretrained_dim)
      throw std::runtime_error(a.pretrained + ": dimension " + std::to_string(pretrained->dim()) + ", model expects " +
                               std::to_string(embed.pretrained_dim));
  } else if (!a.pretrained.empty()) {
    throw std::runtime_error("model was trained without pretrained embeddings: " + a.pretrained);
  }
  Treebank input = read_conllu_file(a.input, Validation::kLenient);
  LoadedContexts contexts = load_contexts(ctx, embed.contexts, input);
  Treebank output = predict(*model, Corpus{&input, contexts.pointers}, pretrained ? &*pretrained : nullptr, a.threads);
  if (a.output.empty() || a.output == "-") std::cout << serialize_conllu(output);
  else write_conllu_file(a.output, output);
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> gold, system;
  bool json = false;
};

int run_evaluate(const EvaluateArgs& a) {
  if (a.gold.size() != a.system.size()) throw UsageError("--gold and --system must be given the same number of times");
  for (const auto& p : a.gold) require_file(p, "gold file");
  for (const auto& p : a.system) require_file(p, "system file");
  std::vector<EvalReport> reports;
  for (size_t i = 0; i < a.gold.size(); ++i) {
    Treebank gold = read_conllu_file(a.gold[i], Validation::kLenient);
    Treebank system = read_conllu_file(a.system[i], Validation::kLenient);
    try {
      reports.push_back(evaluate(gold, system));
    } catch (const AlignmentError& e) {
      throw std::runtime_error(a.gold[i] + " vs " + a.system[i] + ": " + e.what());
    }
  }
  if (a.json) {
    if (reports.size() == 1) {
      std::cout << report_to_json(reports[0]) << "\n";
    } else {
      std::cout << "{\n";
      for (size_t i = 0; i < reports.size(); ++i)
        std::cout << "\"" << a.system[i] << "\": " << report_to_json(reports[i]) << ",\n";
      std::cout << "\"macro_average\": " << report_to_json(macro_average(reports)) << "\n}\n";
    }
    return 0;
  }
  for (size_t i = 0; i < reports.size(); ++i) {
    if (reports.size() > 1) std::cout << "# " << a.gold[i] << " vs " << a.system[i] << "\n";
    std::cout << format_report(reports[i]) << "\n";
  }
  if (reports.size() > 1) std::cout << "# macro-average over " << reports.size() << " treebanks\n"
                                    << format_report(macro_average(reports));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint UD tagger, lemmatizer and dependency parser"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--train", train_args.train, "training treebank (CoNLL-U)")->required();
  train_cmd->add_option("--dev", train_args.dev, "development treebank for model selection");
  train_cmd->add_option("--model", train_args.model, "output checkpoint")->required();
  train_cmd->add_option("--pretrained", train_args.pretrained, "pretrained word vectors (text format)");
  train_cmd->add_option("--ctx", train_args.ctx, "contextual vectors for --train as name=path (repeatable)");
  train_cmd->add_option("--dev-ctx", train_args.dev_ctx, "contextual vectors for --dev as name=path (repeatable)");
  train_cmd->add_option("--config", train_args.config, "key=value configuration file");
  train_cmd->add_option("--set", train_args.set, "override a configuration key (key=value, repeatable)");
  train_cmd->add_option("--seed", train_args.seed, "random seed (default 42)");
  train_cmd->add_option("--log", train_args.log, "also write the per-epoch log here");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "annotate a treebank");
  predict_cmd->add_option("--model", predict_args.model, "checkpoint")->required();
  predict_cmd->add_option("--input", predict_args.input, "input CoNLL-U")->required();
  predict_cmd->add_option("--output", predict_args.output, "output CoNLL-U (default stdout)");
  predict_cmd->add_option("--pretrained", predict_args.pretrained, "pretrained word vectors used in training");
  predict_cmd->add_option("--ctx", predict_args.ctx, "contextual vectors as name=path (repeatable)");
  predict_cmd->add_option("--threads", predict_args.threads, "worker threads (0 = all cores)");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "CoNLL 2018 metrics; several pairs are macro-averaged");
  eval_cmd->add_option("--gold", eval_args.gold, "gold CoNLL-U (repeatable)")->required();
  eval_cmd->add_option("--system", eval_args.system, "system CoNLL-U (repeatable)")->required();
  eval_cmd->add_flag("--json", eval_args.json, "JSON output");

  double baseline = 0, improved = 0;
  auto* analyze_cmd = app.add_subcommand("analyze", "relative error reduction between two scores");
  analyze_cmd->add_option("--baseline", baseline, "baseline score (percent)")->required();
  analyze_cmd->add_option("--improved", improved, "improved score (percent)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*predict_cmd) return run_predict(predict_args);
    if (*eval_cmd) return run_evaluate(eval_args);
    if (*analyze_cmd) {
      std::cout << format_score(relative_error_reduction(baseline, improved)) << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return analyze_cmd->parsed() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
