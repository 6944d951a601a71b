#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jointud/conllu.hpp"

namespace jointud {

// One character edit. Keep/delete consume a source character, substitute
// consumes one and emits `ch`, insert only emits `ch`. The enumerator order is
// the tie-break order used when several programs have equal cost.
struct EditOp {
  enum class Kind { kKeep, kDelete, kInsert, kSubstitute };
  Kind kind = Kind::kKeep;
  char32_t ch = 0;

  static EditOp keep() { return {Kind::kKeep, 0}; }
  static EditOp erase() { return {Kind::kDelete, 0}; }
  static EditOp insert(char32_t c) { return {Kind::kInsert, c}; }
  static EditOp substitute(char32_t c) { return {Kind::kSubstitute, c}; }

  bool consumes() const { return kind != Kind::kInsert; }
  bool operator==(const EditOp&) const = default;
  auto operator<=>(const EditOp&) const = default;
};

using EditProgram = std::vector<EditOp>;

enum class Casing { kAllLower, kFirstUpper, kAllUpper, kExplicit };

// Maps a word form to its lemma: the lowercased form is edited by
// `prefix_ops` from the left and `suffix_ops` from the right (listed
// outermost-first), then `casing` is applied. An absolute script ignores the
// form and yields its stored lemma.
struct EditScript {
  Casing casing = Casing::kAllLower;
  std::vector<int> upper_positions;  // kExplicit only
  EditProgram prefix_ops;
  EditProgram suffix_ops;
  std::optional<std::string> absolute;

  bool is_identity() const;
  bool operator==(const EditScript&) const = default;
};

// Raised when a script's programs need more characters than the form has.
class ScriptOverrun : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EditScript induce_script(std::string_view form, std::string_view lemma);
std::string apply_script(const EditScript& script, std::string_view form);

// "A:<lemma>" or "C:<casing>|P:<ops>|S:<ops>", ops as k, d, i<c>, s<c>.
std::string encode_script(const EditScript& script);
EditScript decode_script(std::string_view encoded);

// Minimal-cost program rewriting `source` into `target`, cost ordered by
// (non-keep ops, total ops) then lexicographically by op.
EditProgram minimal_program(std::u32string_view source, std::u32string_view target);

class ScriptInventory {
 public:
  ScriptInventory();  // holds only the identity script

  // Returns the class id, registering the script if unseen.
  int add(const EditScript& script);
  std::optional<int> find(const EditScript& script) const;
  std::optional<int> find(std::string_view encoded) const;

  const EditScript& script(int id) const { return scripts_.at(id); }
  const std::string& encoded(int id) const { return encodings_.at(id); }
  int size() const { return static_cast<int>(scripts_.size()); }

  // Lemma for `form` under class `id`; the form itself if the script overruns
  // or yields an empty string.
  std::string lemmatize(int id, std::string_view form) const;

  static ScriptInventory from_encodings(const std::vector<std::string>& encodings);

 private:
  std::vector<EditScript> scripts_;
  std::vector<std::string> encodings_;
  std::unordered_map<std::string, int> index_;
};

ScriptInventory build_inventory(const Treebank& tb);

}  // namespace jointud
