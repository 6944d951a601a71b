#include "jointud/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <thread>

#include "jointud/evaluator.hpp"

namespace jointud {

KeyValueSchema TrainConfig::schema() {
  KeyValueSchema s;
  s.bind("epochs", epochs);
  s.bind("batch_size", batch_size);
  s.bind("learning_rate", learning_rate);
  s.bind("lr_decay", lr_decay);
  s.bind("patience", patience);
  s.bind("beta1", beta1);
  s.bind("beta2", beta2);
  s.bind("epsilon", epsilon);
  s.bind("clip_norm", clip_norm);
  s.bind("max_length", max_length);
  s.bind("select_metric", select_metric);
  s.bind("threads", threads);
  return s;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(epochs > 0, "epochs must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(learning_rate >= 0, "learning_rate must be >= 0");
  require(lr_decay >= 0 && lr_decay <= 1, "lr_decay must be in [0, 1]");
  require(patience > 0, "patience must be positive");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "adam betas must be in [0, 1)");
  require(epsilon > 0, "epsilon must be positive");
  require(clip_norm >= 0, "clip_norm must be >= 0");
  require(max_length > 0, "max_length must be positive");
  require(select_metric == "auto" || select_metric == "LAS" || select_metric == "UPOS",
          "select_metric must be auto, LAS or UPOS");
}

std::string format_epoch_line(const EpochStats& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d\t%.4f\t%.2f\t%.2f", s.epoch, s.train_loss, s.dev_upos, s.dev_las);
  return buf;
}

namespace {

struct Example {
  SentenceFeatures features;
  GoldTargets targets;
};

SentenceFeatures features_for(const JointModel<float>& model, const Corpus& corpus, size_t index,
                              const PretrainedTable* pretrained) {
  return featurize(corpus.treebank->sentences[index], model.config().embed, model.words(), model.chars(), pretrained,
                   corpus.contexts, index);
}

bool has_heads(const Treebank& tb) {
  for (const auto& s : tb.sentences)
    for (const auto& w : s.words)
      if (w.head != kNoHead) return true;
  return false;
}

void check_corpus(const Corpus& c, const ModelConfig& config, const char* role) {
  if (!c.treebank) throw std::invalid_argument(std::string(role) + " treebank missing");
  if (c.contexts.size() != config.embed.contexts.size())
    throw std::invalid_argument(std::string(role) + ": " + std::to_string(c.contexts.size()) +
                                " context sources given, model uses " + std::to_string(config.embed.contexts.size()));
  for (const auto* cv : c.contexts) {
    if (!cv) throw std::invalid_argument(std::string(role) + ": missing context vectors");
    check_context_alignment(*cv, *c.treebank);
  }
}

int argmax_row(const Eigen::MatrixXd& m, Eigen::Index row, int first) {
  int best = first;
  for (int c = first + 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return best;
}

}  // namespace

Sentence decode_sentence(const JointModel<float>& model, const Sentence& input, const SentenceScores& scores) {
  const ModelLabels& labels = model.labels();
  Sentence out = input;
  const int n = static_cast<int>(input.words.size());
  // Index 0 is the unknown class and never predicted.
  auto pick = [](const LabelSet& set, const Eigen::MatrixXd& m, int row) -> std::string {
    return set.size() > 1 ? set.name(argmax_row(m, row, 1)) : "_";
  };
  const std::vector<int> heads = mst_decode(scores.arcs, true);

  const auto& names = labels.deprel.names();
  std::vector<bool> root_label(names.size());
  bool any_root = false, any_other = false;
  for (size_t l = 1; l < names.size(); ++l) {
    root_label[l] = universal_deprel(names[l]) == "root";
    (root_label[l] ? any_root : any_other) = true;
  }
  const std::vector<int> rels = assign_label_ids(heads, scores.labels, names, [&](int l, bool is_root) {
    if (l == 0) return false;
    if (is_root) return !any_root || root_label[l];
    return !any_other || !root_label[l];
  });

  for (int i = 0; i < n; ++i) {
    Word& w = out.words[i];
    w.upos = pick(labels.upos, scores.upos, i);
    w.xpos = model.predicts_xpos() ? pick(labels.xpos, scores.xpos, i) : (labels.xpos.size() > 1 ? labels.xpos.name(1) : "_");
    w.feats = parse_feats(pick(labels.feats, scores.feats, i));
    w.lemma = labels.lemmas_annotated ? labels.lemmas.lemmatize(argmax_row(scores.lemma, i, 0), w.form) : "_";
    w.head = heads[i];
    w.deprel = rels[i] >= 0 ? names[rels[i]] : (heads[i] == 0 ? "root" : "dep");
  }
  return out;
}

Treebank predict(const JointModel<float>& model, const Corpus& input, const PretrainedTable* pretrained, int threads) {
  check_corpus(input, model.config(), "input");
  const Treebank& tb = *input.treebank;
  Treebank out;
  out.name = tb.name;
  out.sentences.resize(tb.sentences.size());
  auto work = [&](size_t begin, size_t step) {
    for (size_t i = begin; i < tb.sentences.size(); i += step) {
      if (tb.sentences[i].words.empty()) {
        out.sentences[i] = tb.sentences[i];
        continue;
      }
      out.sentences[i] = decode_sentence(model, tb.sentences[i], model.scores(features_for(model, input, i, pretrained)));
    }
  };
  size_t workers = threads > 0 ? static_cast<size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<size_t>(1, tb.sentences.size()));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (size_t k = 0; k < workers; ++k)
      pool.emplace_back([&, k] {
        try {
          work(k, workers);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return out;
}

TrainResult train(ModelConfig model_config, const TrainConfig& config, const Corpus& train_corpus, const Corpus* dev,
                  const PretrainedTable* pretrained, const std::function<void(const EpochStats&)>& on_epoch) {
  config.validate();
  if (!train_corpus.treebank || train_corpus.treebank->word_count() == 0)
    throw TrainingError("training treebank is empty");
  if (pretrained) model_config.embed.pretrained_dim = pretrained->dim();
  else if (model_config.embed.pretrained_dim != 0)
    throw std::invalid_argument("pretrained_dim is set but no pretrained table was given");
  check_corpus(train_corpus, model_config, "train");
  if (dev) check_corpus(*dev, model_config, "dev");

  const Treebank& tb = *train_corpus.treebank;
  TrainResult result;
  result.model = std::make_unique<JointModel<float>>(model_config, collect_labels(tb),
                                                     build_word_vocab(tb, model_config.embed.min_count),
                                                     build_char_vocab(tb));
  JointModel<float>& model = *result.model;

  std::vector<Example> examples;
  for (size_t i = 0; i < tb.sentences.size(); ++i) {
    if (tb.sentences[i].words.empty()) continue;
    SentenceFeatures f = features_for(model, train_corpus, i, pretrained);
    GoldTargets t = gold_targets(tb.sentences[i], model.labels());
    for (auto [start, end] : truncation_windows(f.size(), static_cast<size_t>(config.max_length)))
      examples.push_back({slice_features(f, start, end), slice_targets(t, start, end)});
  }

  // Length-sorted buckets of batch_size examples; bucket order is reshuffled
  // every epoch.
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return examples[a].features.size() < examples[b].features.size(); });
  std::vector<std::vector<size_t>> batches;
  for (size_t i = 0; i < order.size(); i += config.batch_size)
    batches.emplace_back(order.begin() + i, order.begin() + std::min(order.size(), i + config.batch_size));

  const bool use_las = dev && (config.select_metric == "LAS" || (config.select_metric == "auto" && has_heads(*dev->treebank)));
  Rng rng(static_cast<uint64_t>(model_config.seed) + 1);
  Adam<float> adam(model.params(), config.beta1, config.beta2, config.epsilon);
  double lr = config.learning_rate, best_metric = -1;
  int stalled = 0;
  std::vector<Matrix<float>> best_values;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(batches);
    double loss_sum = 0;
    for (const auto& batch : batches) {
      model.params().zero_grad();
      for (size_t idx : batch) {
        Graph<float> g;
        auto losses = model.loss(g, examples[idx].features, examples[idx].targets, &rng);
        const double value = losses.total.value()(0, 0);
        if (!std::isfinite(value)) {
          std::string detail;
          for (const auto& [name, v] : losses.parts) detail += " " + name + "=" + std::to_string(v);
          throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ":" + detail);
        }
        loss_sum += value;
        g.backward(scale(losses.total, 1.0f / static_cast<float>(batch.size())));
      }
      clip_gradients(model.params(), config.clip_norm);
      adam.step(lr);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(examples.size());
    stats.learning_rate = lr;
    bool improved = !dev;
    if (dev) {
      EvalReport report = evaluate(*dev->treebank, predict(model, *dev, pretrained, config.threads));
      stats.dev_upos = report[Metric::kUpos].f1;
      stats.dev_las = report[Metric::kLas].f1;
      const double metric = use_las ? stats.dev_las : stats.dev_upos;
      if (metric > best_metric) {
        best_metric = metric;
        improved = true;
        stalled = 0;
      } else if (++stalled >= config.patience) {
        lr *= config.lr_decay;
        stalled = 0;
      }
    }
    if (improved) {
      result.best_epoch = epoch;
      best_values.clear();
      for (size_t i = 0; i < model.params().size(); ++i) best_values.push_back(model.params().entry(i).param.value);
    }
    result.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  for (size_t i = 0; i < model.params().size(); ++i) {
    model.params().entry(i).param.value = best_values[i];
    model.params().entry(i).param.zero_grad();
  }
  return result;
}

}  // namespace jointud
