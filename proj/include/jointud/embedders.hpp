#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jointud/autodiff.hpp"
#include "jointud/binary_io.hpp"
#include "jointud/conllu.hpp"
#include "jointud/layers.hpp"

namespace jointud {

// Token -> id with id 0 reserved for unknown tokens.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static inline const std::string kUnkToken = "<unk>";

  Vocab() : tokens_{kUnkToken} {}

  // Tokens with count >= min_count, most frequent first, ties by byte order.
  static Vocab from_counts(const std::unordered_map<std::string, int>& counts, int min_count);
  // Inverse of tokens(); the first entry must be the unknown token.
  static Vocab from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

Vocab build_word_vocab(const Treebank& tb, int min_count);
// One entry per Unicode scalar seen in any form.
Vocab build_char_vocab(const Treebank& tb);
std::vector<int> char_ids(const Vocab& chars, std::string_view word);

// Frozen pretrained vectors, text format: optional "<count> <dim>" header,
// then "<token> <f1> ... <fdim>" per line.
class PretrainedTable {
 public:
  PretrainedTable() = default;

  static PretrainedTable parse(std::istream& in, const std::string& origin, size_t max_rows = 1'000'000);

  int dim() const { return static_cast<int>(vectors_.cols()); }
  int size() const { return static_cast<int>(vectors_.rows()); }
  // Exact form, then lowercased form.
  std::optional<int> find(std::string_view form) const;
  // One row per form; zeros where lookup fails.
  Matrix<float> lookup(const std::vector<std::string>& forms) const;
  const Matrix<float>& vectors() const { return vectors_; }

 private:
  Matrix<float> vectors_;
  std::unordered_map<std::string, int> index_;
};

PretrainedTable load_pretrained(const std::string& path, size_t max_rows = 1'000'000);

// Per-word vectors for a treebank, one n x dim matrix per sentence.
struct ContextVectors {
  std::string source;
  int dim = 0;
  std::vector<Matrix<float>> sentences;

  bool operator==(const ContextVectors&) const = default;
};

// "CTXE", u32 version, u32 dim, u64 sentences; per sentence u32 words then
// words*dim float32, little-endian throughout.
inline constexpr uint32_t kCtxeVersion = 1;
ContextVectors read_ctxe(std::istream& in, const std::string& source);
void write_ctxe(std::ostream& out, const ContextVectors& vectors);
ContextVectors read_ctxe_file(const std::string& path, const std::string& source);
void write_ctxe_file(const std::string& path, const ContextVectors& vectors);

class ContextAlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ContextAlignmentError unless sentence and word counts match the treebank.
void check_context_alignment(const ContextVectors& vectors, const Treebank& tb);

// Known contextual sources first (bert, flair, elmo), then the rest by name.
std::vector<std::string> canonical_context_order(std::vector<std::string> names);

// Word vectors from subword vectors: every layer matrix is (subwords x dim);
// a word gets the mean over its subwords of the mean over layers.
template <typename Scalar>
Matrix<Scalar> pool_subwords(std::span<const Matrix<Scalar>> layers, std::span<const int> word_of_subword,
                             int num_words) {
  if (layers.empty()) throw std::invalid_argument("pool_subwords: no layers");
  const Eigen::Index subwords = layers.front().rows(), dim = layers.front().cols();
  for (const auto& l : layers)
    if (l.rows() != subwords || l.cols() != dim) throw std::invalid_argument("pool_subwords: layer shapes differ");
  if (static_cast<Eigen::Index>(word_of_subword.size()) != subwords)
    throw ContextAlignmentError("pool_subwords: alignment covers " + std::to_string(word_of_subword.size()) +
                         " subwords, layers have " + std::to_string(subwords));
  Matrix<Scalar> layer_mean = Matrix<Scalar>::Zero(subwords, dim);
  for (const auto& l : layers) layer_mean += l;
  layer_mean /= static_cast<Scalar>(layers.size());
  Matrix<Scalar> out = Matrix<Scalar>::Zero(num_words, dim);
  std::vector<int> counts(num_words, 0);
  for (Eigen::Index s = 0; s < subwords; ++s) {
    const int w = word_of_subword[s];
    if (w < 0 || w >= num_words)
      throw ContextAlignmentError("pool_subwords: subword " + std::to_string(s) + " maps to word " + std::to_string(w));
    out.row(w) += layer_mean.row(s);
    ++counts[w];
  }
  for (int w = 0; w < num_words; ++w) {
    if (!counts[w]) throw ContextAlignmentError("pool_subwords: word " + std::to_string(w) + " has no subwords");
    out.row(w) /= static_cast<Scalar>(counts[w]);
  }
  return out;
}

struct EmbedderConfig {
  int word_dim = 64;  // 0 disables the trainable word embeddings
  int min_count = 2;
  double word_dropout = 0.2;
  int pretrained_dim = 0;  // 0 when no pretrained table is attached
  int char_dim = 256;
  int char_gru_dim = 256;  // 0 disables character-level embeddings
  std::vector<std::pair<std::string, int>> contexts;

  int char_output_dim() const { return char_gru_dim > 0 ? 2 * char_gru_dim : 0; }
  int output_dim() const;
};

// Everything the network needs about one sentence, computed outside the graph.
struct SentenceFeatures {
  std::vector<int> word_ids;
  std::vector<std::vector<int>> char_ids;
  Matrix<float> pretrained;
  std::vector<Matrix<float>> contexts;  // in EmbedderConfig::contexts order

  size_t size() const { return word_ids.size(); }
};

// `contexts` are in config order and may be null only when the config lists
// no sources; `sentence_index` selects the row block of each source.
SentenceFeatures featurize(const Sentence& sentence, const EmbedderConfig& config, const Vocab& words,
                           const Vocab& chars, const PretrainedTable* pretrained,
                           std::span<const ContextVectors* const> contexts, size_t sentence_index);

template <typename Scalar>
class InputEmbedder {
 public:
  InputEmbedder() = default;
  InputEmbedder(const EmbedderConfig& config, int vocab_size, int char_vocab_size, ParamStore<Scalar>& store, Rng& rng)
      : config_(config) {
    if (config.output_dim() <= 0) throw std::invalid_argument("input embedder: every input source is disabled");
    if (config.word_dim > 0)
      words_ = &store.add("embed.words", uniform_matrix<Scalar>(rng, vocab_size, config.word_dim,
                                                                std::sqrt(3.0 / config.word_dim)));
    if (config.char_gru_dim > 0) {
      chars_ = &store.add("embed.chars", uniform_matrix<Scalar>(rng, char_vocab_size, config.char_dim,
                                                                std::sqrt(3.0 / config.char_dim)));
      char_fw_ = GruCell<Scalar>(store, "embed.char_gru.fw", config.char_dim, config.char_gru_dim, rng);
      char_bw_ = GruCell<Scalar>(store, "embed.char_gru.bw", config.char_dim, config.char_gru_dim, rng);
    }
  }

  const EmbedderConfig& config() const { return config_; }

  struct Output {
    Var<Scalar> input;                // n x output_dim
    std::optional<Var<Scalar>> chars;  // n x char_output_dim, when enabled
  };

  // With `dropout_rng` set, word ids are replaced by the unknown id with the
  // configured probability.
  Output operator()(Graph<Scalar>& g, const SentenceFeatures& f, Rng* dropout_rng) const {
    const Eigen::Index n = static_cast<Eigen::Index>(f.size());
    if (n == 0) throw std::invalid_argument("input embedder: empty sentence");
    std::vector<Var<Scalar>> parts;
    Output out;
    if (words_) {
      std::vector<int> ids = f.word_ids;
      if (dropout_rng && config_.word_dropout > 0)
        for (int& id : ids)
          if (dropout_rng->uniform() < config_.word_dropout) id = Vocab::kUnk;
      parts.push_back(embedding_lookup(g.parameter(*words_), std::move(ids)));
    }
    if (config_.pretrained_dim > 0) {
      if (f.pretrained.rows() != n || f.pretrained.cols() != config_.pretrained_dim)
        throw ShapeError("input embedder: pretrained block " + Graph<float>::shape_string(f.pretrained) +
                         ", expected " + std::to_string(n) + "x" + std::to_string(config_.pretrained_dim));
      parts.push_back(g.constant(f.pretrained.template cast<Scalar>()));
    }
    if (chars_) {
      out.chars = embed_chars(g, f.char_ids);
      parts.push_back(*out.chars);
    }
    if (f.contexts.size() != config_.contexts.size())
      throw std::invalid_argument("input embedder: " + std::to_string(config_.contexts.size()) +
                                  " context sources configured, " + std::to_string(f.contexts.size()) + " supplied");
    for (size_t c = 0; c < f.contexts.size(); ++c) {
      const auto& [name, dim] = config_.contexts[c];
      if (f.contexts[c].rows() != n || f.contexts[c].cols() != dim)
        throw ShapeError("input embedder: context '" + name + "' block " + Graph<float>::shape_string(f.contexts[c]) +
                         ", expected " + std::to_string(n) + "x" + std::to_string(dim));
      parts.push_back(g.constant(f.contexts[c].template cast<Scalar>()));
    }
    out.input = parts.size() == 1 ? parts.front() : concat(parts, 1);
    return out;
  }

  // Concatenated final forward and backward GRU states per word.
  Var<Scalar> embed_chars(Graph<Scalar>& g, const std::vector<std::vector<int>>& words) const {
    if (!chars_) throw std::logic_error("character embeddings are disabled");
    const Eigen::Index batch = static_cast<Eigen::Index>(words.size());
    size_t longest = 0;
    for (const auto& w : words) {
      if (w.empty()) throw std::invalid_argument("embed_chars: empty word");
      longest = std::max(longest, w.size());
    }
    Var<Scalar> table = g.parameter(*chars_);
    auto direction = [&](const GruCell<Scalar>& cell, bool reverse) {
      std::vector<int> ids;
      ids.reserve(longest * words.size());
      std::vector<Matrix<Scalar>> active(longest, Matrix<Scalar>::Zero(batch, cell.hidden));
      for (size_t t = 0; t < longest; ++t)
        for (Eigen::Index b = 0; b < batch; ++b) {
          const auto& w = words[b];
          if (t < w.size()) {
            ids.push_back(reverse ? w[w.size() - 1 - t] : w[t]);
            active[t].row(b).setOnes();
          } else {
            ids.push_back(Vocab::kUnk);
          }
        }
      return cell.final_states(embedding_lookup(table, std::move(ids)), batch, active);
    };
    return concat<Scalar>({direction(char_fw_, false), direction(char_bw_, true)}, 1);
  }

 private:
  EmbedderConfig config_;
  Parameter<Scalar>* words_ = nullptr;
  Parameter<Scalar>* chars_ = nullptr;
  GruCell<Scalar> char_fw_, char_bw_;
};

}  // namespace jointud
