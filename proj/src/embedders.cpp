#include "jointud/embedders.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "jointud/unicode.hpp"

namespace jointud {

Vocab Vocab::from_counts(const std::unordered_map<std::string, int>& counts, int min_count) {
  if (min_count < 1) throw std::invalid_argument("vocabulary min_count must be >= 1");
  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [token, count] : counts)
    if (count >= min_count && token != kUnkToken) kept.emplace_back(token, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens{kUnkToken};
  for (auto& [token, count] : kept) tokens.push_back(std::move(token));
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.empty() || tokens.front() != kUnkToken)
    throw std::invalid_argument("vocabulary must start with " + kUnkToken);
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (size_t i = 1; i < v.tokens_.size(); ++i)
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate vocabulary entry: " + v.tokens_[i]);
  return v;
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

Vocab build_word_vocab(const Treebank& tb, int min_count) {
  std::unordered_map<std::string, int> counts;
  for (const auto& s : tb.sentences)
    for (const auto& w : s.words) ++counts[w.form];
  return Vocab::from_counts(counts, min_count);
}

Vocab build_char_vocab(const Treebank& tb) {
  std::unordered_map<std::string, int> counts;
  for (const auto& s : tb.sentences)
    for (const auto& w : s.words)
      for (char32_t c : utf8::decode(w.form)) ++counts[utf8::encode(c)];
  return Vocab::from_counts(counts, 1);
}

std::vector<int> char_ids(const Vocab& chars, std::string_view word) {
  std::vector<int> ids;
  for (char32_t c : utf8::decode(word)) ids.push_back(chars.id(utf8::encode(c)));
  return ids;
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool parse_float(std::string_view s, float& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_size(std::string_view s, long long& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

PretrainedTable PretrainedTable::parse(std::istream& in, const std::string& origin, size_t max_rows) {
  PretrainedTable table;
  std::vector<float> values;
  std::string line;
  long long dim = -1;
  size_t rows = 0, line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (rows < max_rows && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      long long count = 0, header_dim = 0;
      if (parse_size(fields[0], count) && parse_size(fields[1], header_dim)) {
        if (header_dim <= 0) fail("header dimension must be positive");
        dim = header_dim;
        continue;
      }
    }
    if (dim < 0) dim = static_cast<long long>(fields.size()) - 1;
    if (dim <= 0) fail("row has no vector values");
    if (static_cast<long long>(fields.size()) - 1 != dim)
      fail("row '" + std::string(fields[0]) + "' has " + std::to_string(fields.size() - 1) + " values, expected " +
           std::to_string(dim));
    for (size_t k = 1; k < fields.size(); ++k) {
      float v;
      if (!parse_float(fields[k], v)) fail("row '" + std::string(fields[0]) + "' has non-numeric value '" + std::string(fields[k]) + "'");
      values.push_back(v);
    }
    if (table.index_.emplace(std::string(fields[0]), static_cast<int>(rows)).second) {
      ++rows;
    } else {
      values.resize(values.size() - dim);  // first occurrence wins
    }
  }
  if (dim <= 0) throw std::runtime_error(origin + ": no vectors found");
  table.vectors_ = Eigen::Map<Matrix<float>>(values.data(), static_cast<Eigen::Index>(rows), dim);
  return table;
}

PretrainedTable load_pretrained(const std::string& path, size_t max_rows) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pretrained embeddings " + path);
  return PretrainedTable::parse(in, path, max_rows);
}

std::optional<int> PretrainedTable::find(std::string_view form) const {
  if (auto it = index_.find(std::string(form)); it != index_.end()) return it->second;
  if (auto it = index_.find(utf8::to_lower(form)); it != index_.end()) return it->second;
  return std::nullopt;
}

Matrix<float> PretrainedTable::lookup(const std::vector<std::string>& forms) const {
  Matrix<float> out = Matrix<float>::Zero(static_cast<Eigen::Index>(forms.size()), dim());
  for (size_t i = 0; i < forms.size(); ++i)
    if (auto row = find(forms[i])) out.row(static_cast<Eigen::Index>(i)) = vectors_.row(*row);
  return out;
}

ContextVectors read_ctxe(std::istream& in, const std::string& source) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "CTXE")
    throw binary::FormatError("not a CTXE file (bad magic)");
  const auto version = binary::read<uint32_t>(in, "version");
  if (version != kCtxeVersion) throw binary::FormatError("unsupported CTXE version " + std::to_string(version));
  ContextVectors cv;
  cv.source = source;
  cv.dim = static_cast<int>(binary::read<uint32_t>(in, "dim"));
  if (cv.dim <= 0) throw binary::FormatError("CTXE dimension must be positive");
  const auto sentences = binary::read<uint64_t>(in, "sentence count");
  for (uint64_t s = 0; s < sentences; ++s) {
    const auto words = binary::read<uint32_t>(in, "word count");
    Matrix<float> m(words, cv.dim);
    binary::read_floats(in, m.data(), static_cast<size_t>(m.size()), "vectors");
    cv.sentences.push_back(std::move(m));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw binary::FormatError("trailing bytes after CTXE payload");
  return cv;
}

void write_ctxe(std::ostream& out, const ContextVectors& vectors) {
  out.write("CTXE", 4);
  binary::write<uint32_t>(out, kCtxeVersion);
  binary::write<uint32_t>(out, static_cast<uint32_t>(vectors.dim));
  binary::write<uint64_t>(out, vectors.sentences.size());
  for (const auto& m : vectors.sentences) {
    if (m.cols() != vectors.dim) throw std::invalid_argument("CTXE sentence block has wrong dimension");
    binary::write<uint32_t>(out, static_cast<uint32_t>(m.rows()));
    binary::write_floats(out, m.data(), static_cast<size_t>(m.size()));
  }
}

ContextVectors read_ctxe_file(const std::string& path, const std::string& source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open context vectors " + path);
  try {
    return read_ctxe(in, source);
  } catch (const binary::FormatError& e) {
    throw binary::FormatError(path + ": " + e.what());
  }
}

void write_ctxe_file(const std::string& path, const ContextVectors& vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_ctxe(out, vectors);
  if (!out) throw std::runtime_error("error writing " + path);
}

void check_context_alignment(const ContextVectors& vectors, const Treebank& tb) {
  if (vectors.sentences.size() != tb.sentences.size())
    throw ContextAlignmentError("context '" + vectors.source + "' has " + std::to_string(vectors.sentences.size()) +
                         " sentences, treebank has " + std::to_string(tb.sentences.size()));
  for (size_t s = 0; s < tb.sentences.size(); ++s)
    if (static_cast<size_t>(vectors.sentences[s].rows()) != tb.sentences[s].words.size())
      throw ContextAlignmentError("context '" + vectors.source + "' sentence " + std::to_string(s + 1) + " has " +
                           std::to_string(vectors.sentences[s].rows()) + " words, treebank has " +
                           std::to_string(tb.sentences[s].words.size()));
}

std::vector<std::string> canonical_context_order(std::vector<std::string> names) {
  auto rank = [](const std::string& n) {
    if (n == "bert") return 0;
    if (n == "flair") return 1;
    if (n == "elmo") return 2;
    return 3;
  };
  std::sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    return rank(a) != rank(b) ? rank(a) < rank(b) : a < b;
  });
  return names;
}

int EmbedderConfig::output_dim() const {
  int total = word_dim + pretrained_dim + char_output_dim();
  for (const auto& c : contexts) total += c.second;
  return total;
}

SentenceFeatures featurize(const Sentence& sentence, const EmbedderConfig& config, const Vocab& words,
                           const Vocab& chars, const PretrainedTable* pretrained,
                           std::span<const ContextVectors* const> contexts, size_t sentence_index) {
  SentenceFeatures f;
  std::vector<std::string> forms;
  for (const auto& w : sentence.words) {
    forms.push_back(w.form);
    f.word_ids.push_back(words.id(w.form));
    if (config.char_gru_dim > 0) f.char_ids.push_back(char_ids(chars, w.form));
  }
  if (config.pretrained_dim > 0) {
    if (!pretrained) throw std::invalid_argument("pretrained embeddings enabled but no table attached");
    if (pretrained->dim() != config.pretrained_dim)
      throw std::invalid_argument("pretrained table has dimension " + std::to_string(pretrained->dim()) +
                                  ", model expects " + std::to_string(config.pretrained_dim));
    f.pretrained = pretrained->lookup(forms);
  }
  if (contexts.size() != config.contexts.size())
    throw std::invalid_argument("model expects " + std::to_string(config.contexts.size()) + " context sources, got " +
                                std::to_string(contexts.size()));
  for (size_t c = 0; c < contexts.size(); ++c) {
    const auto& [name, dim] = config.contexts[c];
    if (!contexts[c]) throw std::invalid_argument("missing context vectors for source '" + name + "'");
    if (contexts[c]->dim != dim)
      throw std::invalid_argument("context '" + name + "' has dimension " + std::to_string(contexts[c]->dim) +
                                  ", model expects " + std::to_string(dim));
    if (sentence_index >= contexts[c]->sentences.size())
      throw ContextAlignmentError("context '" + name + "' has no vectors for sentence " + std::to_string(sentence_index + 1));
    const Matrix<float>& block = contexts[c]->sentences[sentence_index];
    if (static_cast<size_t>(block.rows()) != sentence.words.size())
      throw ContextAlignmentError("context '" + name + "' sentence " + std::to_string(sentence_index + 1) + " has " +
                           std::to_string(block.rows()) + " words, expected " + std::to_string(sentence.words.size()));
    f.contexts.push_back(block);
  }
  return f;
}

}  // namespace jointud
