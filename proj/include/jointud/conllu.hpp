#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jointud {

using Feats = std::vector<std::pair<std::string, std::string>>;

// HEAD column value when the column holds "_" (unannotated input).
inline constexpr int kNoHead = -1;

struct Word {
  int id = 0;
  std::string form;
  std::string lemma = "_";
  std::string upos = "_";
  std::string xpos = "_";
  Feats feats;
  int head = kNoHead;
  std::string deprel = "_";
  std::string deps = "_";
  std::string misc = "_";

  bool operator==(const Word&) const = default;
};

struct MultiwordToken {
  int start = 0;
  int end = 0;
  std::string form;
  // Columns 3..10 kept verbatim.
  std::array<std::string, 8> rest{"_", "_", "_", "_", "_", "_", "_", "_"};

  const std::string& misc() const { return rest[7]; }
  bool operator==(const MultiwordToken&) const = default;
};

// Empty node line ("n.m"), preserved verbatim and attached after word `after`.
struct EmptyNode {
  int after = 0;
  std::string line;

  bool operator==(const EmptyNode&) const = default;
};

struct Sentence {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<Word> words;
  std::vector<MultiwordToken> multiword_tokens;
  std::vector<EmptyNode> empty_nodes;

  size_t size() const { return words.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Treebank {
  std::string name;
  std::vector<Sentence> sentences;

  size_t word_count() const;
  bool operator==(const Treebank&) const = default;
};

class ConlluError : public std::runtime_error {
 public:
  ConlluError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class Validation { kLenient, kStrict };

// Parses CoNLL-U text. Throws ConlluError on malformed input. A final sentence
// missing its terminating blank line is accepted and reported via `warnings`.
Treebank parse_conllu(std::string_view text, Validation mode = Validation::kLenient,
                      std::vector<std::string>* warnings = nullptr);
std::string serialize_conllu(const Treebank& tb);

Treebank read_conllu_file(const std::string& path, Validation mode = Validation::kLenient,
                          std::vector<std::string>* warnings = nullptr);
void write_conllu_file(const std::string& path, const Treebank& tb);

// Strict checks on an already parsed sentence: ids, head range, root/deprel
// agreement, single root, acyclicity, feature ordering, multiword ranges.
// Returns an empty string when valid, else a description of the first problem.
std::string validate_sentence(const Sentence& sentence);

Feats parse_feats(std::string_view column);
std::string format_feats(const Feats& feats);

// Text before the first ':' of a dependency relation.
std::string_view universal_deprel(std::string_view deprel);

}  // namespace jointud
