#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jointud/autodiff.hpp"
#include "jointud/conllu.hpp"
#include "jointud/embedders.hpp"
#include "jointud/key_value.hpp"
#include "jointud/layers.hpp"
#include "jointud/lemma_rules.hpp"
#include "jointud/tree_decode.hpp"

namespace jointud {

struct ModelConfig {
  EmbedderConfig embed;
  int shared_layers = 2;
  int shared_dim = 256;  // per direction
  int tagger_dim = 256;
  int parser_dim = 256;
  int arc_dim = 128;
  int label_dim = 64;
  double dropout = 0.5;
  double weight_upos = 1, weight_xpos = 1, weight_feats = 1, weight_lemma = 1, weight_arc = 1, weight_label = 1;
  int seed = 42;

  KeyValueSchema schema();
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
  void validate() const;
};

// Class names with "<unk>" at id 0; the remaining names are sorted.
class LabelSet {
 public:
  static inline const std::string kUnkLabel = "<unk>";

  LabelSet() : names_{kUnkLabel} {}
  static LabelSet from_values(std::vector<std::string> values);
  static LabelSet from_names(std::vector<std::string> names);

  int id(std::string_view name) const;  // 0 when unseen
  const std::string& name(int id) const { return names_.at(id); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  // Nothing to learn: no values besides "_".
  bool trivial() const { return names_.size() == 1 || (names_.size() == 2 && names_[1] == "_"); }
  bool operator==(const LabelSet& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct ModelLabels {
  LabelSet upos, xpos, feats, deprel;
  ScriptInventory lemmas;
  bool lemmas_annotated = true;
};

// Features sorted case-insensitively by key, as a FEATS column string.
std::string canonical_feats(const Feats& feats);

ModelLabels collect_labels(const Treebank& train);

// Class ids per word; -1 marks a target that does not contribute to the loss.
struct GoldTargets {
  std::vector<int> upos, xpos, feats, lemma, heads, deprels;
};

GoldTargets gold_targets(const Sentence& sentence, const ModelLabels& labels);

// [start, end) windows of at most `cap` words covering a sentence.
std::vector<std::pair<size_t, size_t>> truncation_windows(size_t words, size_t cap);
// Restricts features and targets to one window; heads leaving it are ignored.
SentenceFeatures slice_features(const SentenceFeatures& f, size_t start, size_t end);
GoldTargets slice_targets(const GoldTargets& t, size_t start, size_t end);

// h_dep' U h_head + w' h_head + b.
template <typename A, typename B, typename M, typename W>
typename A::Scalar biaffine_score(const Eigen::MatrixBase<A>& h_dep, const Eigen::MatrixBase<B>& h_head,
                                  const Eigen::MatrixBase<M>& u, const Eigen::MatrixBase<W>& w,
                                  typename A::Scalar b) {
  if (h_dep.size() != u.rows() || h_head.size() != u.cols() || w.size() != h_head.size())
    throw std::invalid_argument("biaffine_score: dimension mismatch");
  auto dep = h_dep.reshaped();
  auto head = h_head.reshaped();
  return dep.dot(u * head) + w.reshaped().dot(head) + b;
}

// Inference-mode outputs. Arc scores are head x dependent with row 0 the root.
struct SentenceScores {
  Eigen::MatrixXd upos, xpos, feats, lemma;  // n x classes; xpos empty when not predicted
  ArcScores arcs;
  LabelLogits labels;
};

template <typename Scalar>
class JointModel {
 public:
  JointModel(ModelConfig config, ModelLabels labels, Vocab words, Vocab chars)
      : config_(std::move(config)), labels_(std::move(labels)), words_(std::move(words)), chars_(std::move(chars)) {
    config_.validate();
    Rng rng(static_cast<uint64_t>(config_.seed));
    embedder_ = InputEmbedder<Scalar>(config_.embed, words_.size(), chars_.size(), params_, rng);
    int in = config_.embed.output_dim();
    for (int l = 0; l < config_.shared_layers; ++l) {
      shared_.emplace_back(params_, "shared." + std::to_string(l), in, config_.shared_dim, rng);
      in = shared_.back().output_dim();
    }
    tagger_ = BiLstm<Scalar>(params_, "tagger", in, config_.tagger_dim, rng);
    const int tag_dim = tagger_.output_dim();
    upos_ = Dense<Scalar>(params_, "upos", tag_dim, labels_.upos.size(), rng);
    if (predicts_xpos()) xpos_ = Dense<Scalar>(params_, "xpos", tag_dim, labels_.xpos.size(), rng);
    feats_ = Dense<Scalar>(params_, "feats", tag_dim, labels_.feats.size(), rng);
    lemma_ = Dense<Scalar>(params_, "lemma", tag_dim + config_.embed.char_output_dim(), labels_.lemmas.size(), rng);
    parser_ = BiLstm<Scalar>(params_, "parser", in, config_.parser_dim, rng);
    const int p = parser_.output_dim();
    root_ = &params_.add("parser.root", uniform_matrix<Scalar>(rng, 1, p, std::sqrt(3.0 / p)));
    arc_dep_ = Dense<Scalar>(params_, "arc.dep", p, config_.arc_dim, rng);
    arc_head_ = Dense<Scalar>(params_, "arc.head", p, config_.arc_dim, rng);
    arc_u_ = &params_.add("arc.bilinear", glorot<Scalar>(rng, config_.arc_dim, config_.arc_dim));
    arc_wb_ = &params_.add("arc.head_bias", Matrix<Scalar>::Zero(config_.arc_dim + 1, 1));
    const int ld = config_.label_dim, nl = labels_.deprel.size();
    label_dep_ = Dense<Scalar>(params_, "label.dep", p, ld, rng);
    label_head_ = Dense<Scalar>(params_, "label.head", p, ld, rng);
    label_u_ = &params_.add("label.bilinear", glorot<Scalar>(rng, ld, nl * ld));
    label_dep_w_ = &params_.add("label.dep_linear", glorot<Scalar>(rng, ld, nl));
    label_head_w_ = &params_.add("label.head_linear", glorot<Scalar>(rng, ld, nl));
    label_bias_ = &params_.add("label.bias", Matrix<Scalar>::Zero(1, nl));
  }

  JointModel(const JointModel&) = delete;
  JointModel& operator=(const JointModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const ModelLabels& labels() const { return labels_; }
  const Vocab& words() const { return words_; }
  const Vocab& chars() const { return chars_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }
  const InputEmbedder<Scalar>& embedder() const { return embedder_; }
  bool predicts_xpos() const { return !labels_.xpos.trivial(); }

  struct Forward {
    Var<Scalar> input;
    Var<Scalar> upos, feats, lemma;
    std::optional<Var<Scalar>> xpos;
    Var<Scalar> arcs;  // n x (n+1), dependent-major
    Var<Scalar> label_dep, label_head;  // n x label_dim, (n+1) x label_dim
  };

  // Training mode when `rng` is set (dropout on), inference otherwise.
  Forward forward(Graph<Scalar>& g, const SentenceFeatures& f, Rng* rng) const {
    auto drop = [&](Var<Scalar> x) { return rng && config_.dropout > 0 ? dropout(x, config_.dropout, *rng) : x; };
    Forward out;
    auto embedded = embedder_(g, f, rng);
    out.input = embedded.input;
    Var<Scalar> h = drop(embedded.input);
    for (const auto& layer : shared_) h = drop(layer(h));
    Var<Scalar> tags = drop(tagger_(h));
    out.upos = upos_(tags);
    if (xpos_.weight) out.xpos = xpos_(tags);
    out.feats = feats_(tags);
    out.lemma = lemma_(embedded.chars ? concat<Scalar>({tags, *embedded.chars}, 1) : tags);

    Var<Scalar> states = drop(parser_(h));
    Var<Scalar> with_root = concat<Scalar>({g.parameter(*root_), states}, 0);
    Var<Scalar> dep = tanh(arc_dep_(states));
    Var<Scalar> head = tanh(arc_head_(with_root));
    Var<Scalar> bilinear = matmul(matmul(dep, g.parameter(*arc_u_)), transpose(head));
    Var<Scalar> ones = g.constant(Matrix<Scalar>::Ones(head.rows(), 1));
    Var<Scalar> head_bias = transpose(matmul(concat<Scalar>({head, ones}, 1), g.parameter(*arc_wb_)));
    out.arcs = add_bias_row(bilinear, head_bias);
    out.label_dep = tanh(label_dep_(states));
    out.label_head = tanh(label_head_(with_root));
    return out;
  }

  // n x |deprel| logits for the given head of every word (negative heads are
  // scored against the root and should be ignored by the caller).
  Var<Scalar> label_logits(const Forward& fw, const std::vector<int>& heads) const {
    Graph<Scalar>& g = *fw.label_dep.graph;
    std::vector<int> rows(heads.size());
    for (size_t i = 0; i < heads.size(); ++i) rows[i] = std::max(heads[i], 0);
    Var<Scalar> chosen = embedding_lookup(fw.label_head, std::move(rows));
    Var<Scalar> bilinear = rowwise_block_dot(matmul(fw.label_dep, g.parameter(*label_u_)), chosen);
    Var<Scalar> linear = add(matmul(fw.label_dep, g.parameter(*label_dep_w_)), matmul(chosen, g.parameter(*label_head_w_)));
    return add_bias_row(add(bilinear, linear), g.parameter(*label_bias_));
  }

  struct Losses {
    Var<Scalar> total;
    std::vector<std::pair<std::string, Scalar>> parts;
  };

  Losses loss(Graph<Scalar>& g, const SentenceFeatures& f, const GoldTargets& gold, Rng* rng) const {
    const size_t n = f.size();
    if (gold.upos.size() != n || gold.heads.size() != n)
      throw std::invalid_argument("loss: targets cover " + std::to_string(gold.upos.size()) + " words, sentence has " +
                                  std::to_string(n));
    for (int h : gold.heads)
      if (h > static_cast<int>(n)) throw std::invalid_argument("loss: gold head " + std::to_string(h) + " out of range");
    Forward fw = forward(g, f, rng);
    Matrix<Scalar> self_mask = Matrix<Scalar>::Zero(n, n + 1);
    for (size_t i = 0; i < n; ++i) self_mask(i, i + 1) = Scalar(-1e9);
    std::vector<std::pair<double, Var<Scalar>>> terms{
        {config_.weight_upos, softmax_cross_entropy(fw.upos, gold.upos)},
        {config_.weight_feats, softmax_cross_entropy(fw.feats, gold.feats)},
        {config_.weight_lemma, softmax_cross_entropy(fw.lemma, gold.lemma)},
        {config_.weight_arc, softmax_cross_entropy(add(fw.arcs, g.constant(std::move(self_mask))), gold.heads)},
        {config_.weight_label, softmax_cross_entropy(label_logits(fw, gold.heads), label_targets(gold))},
    };
    if (fw.xpos) terms.insert(terms.begin() + 1, {config_.weight_xpos, softmax_cross_entropy(*fw.xpos, gold.xpos)});
    static const char* names_with_xpos[] = {"upos", "xpos", "feats", "lemma", "arc", "label"};
    static const char* names_without[] = {"upos", "feats", "lemma", "arc", "label"};
    Losses out;
    std::vector<Var<Scalar>> weighted;
    for (size_t k = 0; k < terms.size(); ++k) {
      const auto& [w, v] = terms[k];
      out.parts.emplace_back(fw.xpos ? names_with_xpos[k] : names_without[k], v.value()(0, 0));
      weighted.push_back(w == 1.0 ? v : scale(v, static_cast<Scalar>(w)));
    }
    out.total = weighted.front();
    for (size_t k = 1; k < weighted.size(); ++k) out.total = add(out.total, weighted[k]);
    return out;
  }

  SentenceScores scores(const SentenceFeatures& f) const {
    Graph<Scalar> g(false);
    Forward fw = forward(g, f, nullptr);
    SentenceScores s;
    s.upos = fw.upos.value().template cast<double>();
    if (fw.xpos) s.xpos = fw.xpos->value().template cast<double>();
    s.feats = fw.feats.value().template cast<double>();
    s.lemma = fw.lemma.value().template cast<double>();
    s.arcs = fw.arcs.value().transpose().template cast<double>();
    const int n = static_cast<int>(f.size()), nl = labels_.deprel.size(), ld = config_.label_dim;
    const Matrix<Scalar>& dep = fw.label_dep.value();
    const Matrix<Scalar>& head = fw.label_head.value();
    const Matrix<Scalar> dep_u = dep * label_u_->value;
    const Matrix<Scalar> dep_lin = dep * label_dep_w_->value;
    const Matrix<Scalar> head_lin = (head * label_head_w_->value).rowwise() + label_bias_->value.row(0);
    s.labels = LabelLogits(n, nl);
    for (int h = 0; h <= n; ++h)
      for (int d = 0; d < n; ++d)
        for (int l = 0; l < nl; ++l)
          s.labels(h, d, l) = static_cast<double>(dep_u.row(d).segment(l * ld, ld).dot(head.row(h)) + dep_lin(d, l) +
                                                  head_lin(h, l));
    return s;
  }

 private:
  static std::vector<int> label_targets(const GoldTargets& gold) {
    std::vector<int> out = gold.deprels;
    for (size_t i = 0; i < out.size(); ++i)
      if (gold.heads[i] < 0) out[i] = -1;
    return out;
  }

  ModelConfig config_;
  ModelLabels labels_;
  Vocab words_, chars_;
  ParamStore<Scalar> params_;
  InputEmbedder<Scalar> embedder_;
  std::vector<BiLstm<Scalar>> shared_;
  BiLstm<Scalar> tagger_, parser_;
  Dense<Scalar> upos_, xpos_, feats_, lemma_;
  Parameter<Scalar>* root_ = nullptr;
  Dense<Scalar> arc_dep_, arc_head_;
  Parameter<Scalar>* arc_u_ = nullptr;
  Parameter<Scalar>* arc_wb_ = nullptr;
  Dense<Scalar> label_dep_, label_head_;
  Parameter<Scalar>* label_u_ = nullptr;
  Parameter<Scalar>* label_dep_w_ = nullptr;
  Parameter<Scalar>* label_head_w_ = nullptr;
  Parameter<Scalar>* label_bias_ = nullptr;
};

}  // namespace jointud
