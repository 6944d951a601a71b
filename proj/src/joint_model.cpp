#include "jointud/joint_model.hpp"

#include <algorithm>
#include <set>

#include "jointud/unicode.hpp"

namespace jointud {

KeyValueSchema ModelConfig::schema() {
  KeyValueSchema s;
  s.bind("word_dim", embed.word_dim);
  s.bind("min_count", embed.min_count);
  s.bind("word_dropout", embed.word_dropout);
  s.bind("pretrained_dim", embed.pretrained_dim);
  s.bind("char_dim", embed.char_dim);
  s.bind("char_gru_dim", embed.char_gru_dim);
  s.bind(
      "contexts",
      [this](const std::string& v) {
        embed.contexts.clear();
        size_t pos = 0;
        while (pos < v.size()) {
          size_t comma = v.find(',', pos);
          std::string item = v.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
          pos = comma == std::string::npos ? v.size() : comma + 1;
          size_t colon = item.find(':');
          if (colon == std::string::npos || colon == 0)
            throw ConfigError("contexts: expected name:dim, got '" + item + "'");
          int dim = 0;
          try {
            dim = std::stoi(item.substr(colon + 1));
          } catch (const std::exception&) {
            throw ConfigError("contexts: bad dimension in '" + item + "'");
          }
          embed.contexts.emplace_back(item.substr(0, colon), dim);
        }
      },
      [this] {
        std::string out;
        for (const auto& [name, dim] : embed.contexts) out += (out.empty() ? "" : ",") + name + ":" + std::to_string(dim);
        return out;
      });
  s.bind("shared_layers", shared_layers);
  s.bind("shared_dim", shared_dim);
  s.bind("tagger_dim", tagger_dim);
  s.bind("parser_dim", parser_dim);
  s.bind("arc_dim", arc_dim);
  s.bind("label_dim", label_dim);
  s.bind("dropout", dropout);
  s.bind("weight_upos", weight_upos);
  s.bind("weight_xpos", weight_xpos);
  s.bind("weight_feats", weight_feats);
  s.bind("weight_lemma", weight_lemma);
  s.bind("weight_arc", weight_arc);
  s.bind("weight_label", weight_label);
  s.bind("seed", seed);
  return s;
}

std::string ModelConfig::to_text() const {
  ModelConfig copy = *this;
  return copy.schema().to_text();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig c;
  KeyValueSchema s = c.schema();
  for (const auto& [k, v] : parse_key_values(text, "model config")) s.set(k, v);
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(embed.word_dim >= 0 && embed.pretrained_dim >= 0 && embed.char_gru_dim >= 0, "dimensions must be >= 0");
  require(embed.min_count >= 1, "min_count must be >= 1");
  require(embed.char_gru_dim == 0 || embed.char_dim > 0, "char_dim must be positive when char_gru_dim is");
  require(embed.word_dropout >= 0 && embed.word_dropout < 1, "word_dropout must be in [0, 1)");
  for (const auto& [name, dim] : embed.contexts) require(dim > 0, "context '" + name + "' needs a positive dimension");
  require(embed.output_dim() > 0, "no input source enabled");
  require(shared_layers >= 0, "shared_layers must be >= 0");
  require(shared_dim > 0 && tagger_dim > 0 && parser_dim > 0 && arc_dim > 0 && label_dim > 0,
          "layer dimensions must be positive");
  require(dropout >= 0 && dropout < 1, "dropout must be in [0, 1)");
  for (double w : {weight_upos, weight_xpos, weight_feats, weight_lemma, weight_arc, weight_label})
    require(w >= 0, "task weights must be >= 0");
}

LabelSet LabelSet::from_values(std::vector<std::string> values) {
  std::set<std::string> unique(values.begin(), values.end());
  unique.erase(kUnkLabel);
  std::vector<std::string> names{kUnkLabel};
  names.insert(names.end(), unique.begin(), unique.end());
  return from_names(std::move(names));
}

LabelSet LabelSet::from_names(std::vector<std::string> names) {
  if (names.empty() || names.front() != kUnkLabel) throw std::invalid_argument("label set must start with " + kUnkLabel);
  LabelSet s;
  s.names_ = std::move(names);
  for (size_t i = 1; i < s.names_.size(); ++i)
    if (!s.index_.emplace(s.names_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate label: " + s.names_[i]);
  return s;
}

int LabelSet::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? 0 : it->second;
}

std::string canonical_feats(const Feats& feats) {
  Feats sorted = feats;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return utf8::to_lower(a.first) < utf8::to_lower(b.first); });
  return format_feats(sorted);
}

ModelLabels collect_labels(const Treebank& train) {
  std::vector<std::string> upos, xpos, feats, deprel;
  bool any_lemma = false;
  for (const auto& s : train.sentences)
    for (const auto& w : s.words) {
      upos.push_back(w.upos);
      xpos.push_back(w.xpos);
      feats.push_back(canonical_feats(w.feats));
      if (w.head != kNoHead && w.deprel != "_") deprel.push_back(w.deprel);
      any_lemma = any_lemma || w.lemma != "_" || w.form == "_";
    }
  ModelLabels labels;
  labels.upos = LabelSet::from_values(std::move(upos));
  labels.xpos = LabelSet::from_values(std::move(xpos));
  labels.feats = LabelSet::from_values(std::move(feats));
  labels.deprel = LabelSet::from_values(std::move(deprel));
  labels.lemmas = build_inventory(train);
  labels.lemmas_annotated = any_lemma;
  return labels;
}

GoldTargets gold_targets(const Sentence& sentence, const ModelLabels& labels) {
  GoldTargets t;
  const int n = static_cast<int>(sentence.words.size());
  for (const auto& w : sentence.words) {
    t.upos.push_back(labels.upos.id(w.upos));
    t.xpos.push_back(labels.xpos.id(w.xpos));
    t.feats.push_back(labels.feats.id(canonical_feats(w.feats)));
    int lemma = -1;
    if (w.lemma != "_" || w.form == "_")
      if (auto id = labels.lemmas.find(induce_script(w.form, w.lemma))) lemma = *id;
    t.lemma.push_back(lemma);
    if (w.head > n) throw std::invalid_argument("gold head " + std::to_string(w.head) + " out of range");
    t.heads.push_back(w.head == kNoHead ? -1 : w.head);
    t.deprels.push_back(w.deprel == "_" ? -1 : labels.deprel.id(w.deprel));
  }
  return t;
}

std::vector<std::pair<size_t, size_t>> truncation_windows(size_t words, size_t cap) {
  if (cap == 0) throw std::invalid_argument("truncation cap must be positive");
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t start = 0; start < words; start += cap) out.emplace_back(start, std::min(words, start + cap));
  return out;
}

SentenceFeatures slice_features(const SentenceFeatures& f, size_t start, size_t end) {
  SentenceFeatures out;
  out.word_ids.assign(f.word_ids.begin() + start, f.word_ids.begin() + end);
  if (!f.char_ids.empty()) out.char_ids.assign(f.char_ids.begin() + start, f.char_ids.begin() + end);
  const auto rows = static_cast<Eigen::Index>(end - start);
  if (f.pretrained.size()) out.pretrained = f.pretrained.middleRows(start, rows);
  for (const auto& c : f.contexts) out.contexts.push_back(c.middleRows(start, rows));
  return out;
}

GoldTargets slice_targets(const GoldTargets& t, size_t start, size_t end) {
  auto cut = [&](const std::vector<int>& v) { return std::vector<int>(v.begin() + start, v.begin() + end); };
  GoldTargets out{cut(t.upos), cut(t.xpos), cut(t.feats), cut(t.lemma), cut(t.heads), cut(t.deprels)};
  for (int& h : out.heads) {
    if (h <= 0) continue;
    const size_t word = static_cast<size_t>(h) - 1;
    h = word >= start && word < end ? static_cast<int>(word - start) + 1 : -1;
  }
  return out;
}

}  // namespace jointud
