#include "jointud/lemma_rules.hpp"

#include <algorithm>
#include <utility>

#include "jointud/unicode.hpp"

namespace jointud {

namespace {

using Cost = std::pair<int, int>;  // (non-keep ops, total ops)

Cost plus(Cost c, bool keep) { return {c.first + (keep ? 0 : 1), c.second + 1}; }

void append_ops(std::string& out, const EditProgram& ops) {
  for (const auto& op : ops) {
    switch (op.kind) {
      case EditOp::Kind::kKeep: out += 'k'; break;
      case EditOp::Kind::kDelete: out += 'd'; break;
      case EditOp::Kind::kInsert: out += 'i' + utf8::encode(op.ch); break;
      case EditOp::Kind::kSubstitute: out += 's' + utf8::encode(op.ch); break;
    }
  }
}

EditProgram parse_ops(const std::u32string& text, size_t& pos) {
  EditProgram ops;
  while (pos < text.size() && text[pos] != U'|') {
    char32_t tag = text[pos++];
    switch (tag) {
      case U'k': ops.push_back(EditOp::keep()); break;
      case U'd': ops.push_back(EditOp::erase()); break;
      case U'i':
      case U's':
        if (pos >= text.size()) throw std::invalid_argument("truncated edit op");
        ops.push_back(tag == U'i' ? EditOp::insert(text[pos]) : EditOp::substitute(text[pos]));
        ++pos;
        break;
      default: throw std::invalid_argument("unknown edit op");
    }
  }
  return ops;
}

void expect(const std::u32string& text, size_t& pos, std::u32string_view token) {
  if (text.compare(pos, token.size(), token) != 0) throw std::invalid_argument("malformed edit script encoding");
  pos += token.size();
}

// Runs `ops` over `source` (already oriented); returns emitted characters and
// sets `consumed`.
std::u32string run_program(const EditProgram& ops, std::u32string_view source, size_t& consumed) {
  std::u32string out;
  size_t p = 0;
  for (const auto& op : ops) {
    if (op.consumes() && p >= source.size()) throw ScriptOverrun("edit program overruns the word form");
    switch (op.kind) {
      case EditOp::Kind::kKeep: out += source[p++]; break;
      case EditOp::Kind::kDelete: ++p; break;
      case EditOp::Kind::kInsert: out += op.ch; break;
      case EditOp::Kind::kSubstitute:
        out += op.ch;
        ++p;
        break;
    }
  }
  consumed = p;
  return out;
}

}  // namespace

bool EditScript::is_identity() const {
  return !absolute && casing == Casing::kAllLower && prefix_ops.empty() && suffix_ops.empty();
}

EditProgram minimal_program(std::u32string_view source, std::u32string_view target) {
  const size_t ns = source.size(), nt = target.size();
  // cost[i][j]: cheapest rewrite of source[i:] into target[j:].
  std::vector<Cost> cost((ns + 1) * (nt + 1));
  auto at = [&](size_t i, size_t j) -> Cost& { return cost[i * (nt + 1) + j]; };
  for (size_t i = ns + 1; i-- > 0;) {
    for (size_t j = nt + 1; j-- > 0;) {
      if (i == ns && j == nt) {
        at(i, j) = {0, 0};
        continue;
      }
      Cost best{1 << 29, 1 << 29};
      if (i < ns && j < nt) best = std::min(best, plus(at(i + 1, j + 1), source[i] == target[j]));
      if (i < ns) best = std::min(best, plus(at(i + 1, j), false));
      if (j < nt) best = std::min(best, plus(at(i, j + 1), false));
      at(i, j) = best;
    }
  }
  EditProgram ops;
  size_t i = 0, j = 0;
  while (i < ns || j < nt) {
    const Cost here = at(i, j);
    if (i < ns && j < nt && source[i] == target[j] && plus(at(i + 1, j + 1), true) == here) {
      ops.push_back(EditOp::keep());
      ++i, ++j;
    } else if (i < ns && plus(at(i + 1, j), false) == here) {
      ops.push_back(EditOp::erase());
      ++i;
    } else if (j < nt && plus(at(i, j + 1), false) == here) {
      ops.push_back(EditOp::insert(target[j]));
      ++j;
    } else {
      ops.push_back(EditOp::substitute(target[j]));
      ++i, ++j;
    }
  }
  return ops;
}

EditScript induce_script(std::string_view form, std::string_view lemma) {
  const std::u32string lemma_cp = utf8::decode(lemma);
  const std::u32string lf = utf8::to_lower(utf8::decode(form));
  const std::u32string ll = utf8::to_lower(lemma_cp);

  EditScript absolute;
  absolute.absolute = std::string(lemma);

  // Longest common substring; leftmost in form, then leftmost in lemma.
  const size_t nf = lf.size(), nl = ll.size();
  std::vector<int> run((nf + 1) * (nl + 1), 0);
  auto at = [&](size_t a, size_t b) -> int& { return run[a * (nl + 1) + b]; };
  for (size_t a = nf; a-- > 0;)
    for (size_t b = nl; b-- > 0;)
      if (lf[a] == ll[b]) at(a, b) = 1 + at(a + 1, b + 1);
  size_t root_form = 0, root_lemma = 0;
  int root_len = 0;
  for (size_t a = 0; a < nf; ++a)
    for (size_t b = 0; b < nl; ++b)
      if (at(a, b) > root_len) root_len = at(a, b), root_form = a, root_lemma = b;
  if (root_len == 0) return absolute;

  EditScript script;
  std::u32string_view lfv(lf), llv(ll);
  script.prefix_ops = minimal_program(lfv.substr(0, root_form), llv.substr(0, root_lemma));
  std::u32string form_tail(lfv.substr(root_form + root_len));
  std::u32string lemma_tail(llv.substr(root_lemma + root_len));
  std::reverse(form_tail.begin(), form_tail.end());
  std::reverse(lemma_tail.begin(), lemma_tail.end());
  script.suffix_ops = minimal_program(form_tail, lemma_tail);

  if (lemma_cp == ll) {
    script.casing = Casing::kAllLower;
  } else if (std::u32string first = ll; (first[0] = utf8::to_upper(first[0]), first == lemma_cp)) {
    script.casing = Casing::kFirstUpper;
  } else if (utf8::to_upper(ll) == lemma_cp) {
    script.casing = Casing::kAllUpper;
  } else {
    script.casing = Casing::kExplicit;
    for (size_t k = 0; k < ll.size(); ++k)
      if (ll[k] != lemma_cp[k]) script.upper_positions.push_back(static_cast<int>(k));
  }

  try {
    if (apply_script(script, form) == lemma) return script;
  } catch (const ScriptOverrun&) {
  }
  return absolute;
}

std::string apply_script(const EditScript& script, std::string_view form) {
  if (script.absolute) return *script.absolute;
  const std::u32string lf = utf8::to_lower(utf8::decode(form));
  size_t front = 0, back = 0;
  std::u32string head = run_program(script.prefix_ops, lf, front);
  std::u32string reversed(lf.rbegin(), lf.rend());
  std::u32string tail = run_program(script.suffix_ops, reversed, back);
  if (front + back > lf.size()) throw ScriptOverrun("prefix and suffix programs overlap");
  std::reverse(tail.begin(), tail.end());
  std::u32string out = head + lf.substr(front, lf.size() - front - back) + tail;
  switch (script.casing) {
    case Casing::kAllLower: break;
    case Casing::kFirstUpper:
      if (!out.empty()) out[0] = utf8::to_upper(out[0]);
      break;
    case Casing::kAllUpper: out = utf8::to_upper(out); break;
    case Casing::kExplicit:
      for (int pos : script.upper_positions) {
        if (pos < 0 || static_cast<size_t>(pos) >= out.size()) throw ScriptOverrun("casing position past lemma end");
        out[pos] = utf8::to_upper(out[pos]);
      }
      break;
  }
  return utf8::encode(out);
}

std::string encode_script(const EditScript& script) {
  if (script.absolute) return "A:" + *script.absolute;
  std::string out = "C:";
  switch (script.casing) {
    case Casing::kAllLower: out += "lower"; break;
    case Casing::kFirstUpper: out += "first"; break;
    case Casing::kAllUpper: out += "upper"; break;
    case Casing::kExplicit:
      out += 'x';
      for (size_t k = 0; k < script.upper_positions.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(script.upper_positions[k]);
      }
      break;
  }
  out += "|P:";
  append_ops(out, script.prefix_ops);
  out += "|S:";
  append_ops(out, script.suffix_ops);
  return out;
}

EditScript decode_script(std::string_view encoded) {
  EditScript script;
  if (encoded.starts_with("A:")) {
    script.absolute = std::string(encoded.substr(2));
    return script;
  }
  const std::u32string text = utf8::decode(encoded);
  size_t pos = 0;
  expect(text, pos, U"C:");
  size_t bar = text.find(U'|', pos);
  if (bar == std::u32string::npos) throw std::invalid_argument("malformed edit script encoding");
  std::string casing = utf8::encode(std::u32string_view(text).substr(pos, bar - pos));
  if (casing == "lower") {
    script.casing = Casing::kAllLower;
  } else if (casing == "first") {
    script.casing = Casing::kFirstUpper;
  } else if (casing == "upper") {
    script.casing = Casing::kAllUpper;
  } else if (casing.starts_with("x")) {
    script.casing = Casing::kExplicit;
    size_t start = 1;
    while (start < casing.size()) {
      size_t comma = casing.find(',', start);
      if (comma == std::string::npos) comma = casing.size();
      script.upper_positions.push_back(std::stoi(casing.substr(start, comma - start)));
      start = comma + 1;
    }
  } else {
    throw std::invalid_argument("unknown casing '" + casing + "'");
  }
  pos = bar;
  expect(text, pos, U"|P:");
  script.prefix_ops = parse_ops(text, pos);
  expect(text, pos, U"|S:");
  script.suffix_ops = parse_ops(text, pos);
  if (pos != text.size()) throw std::invalid_argument("trailing characters in edit script encoding");
  return script;
}

ScriptInventory::ScriptInventory() { add(EditScript{}); }

int ScriptInventory::add(const EditScript& script) {
  std::string key = encode_script(script);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  int id = size();
  index_.emplace(key, id);
  scripts_.push_back(script);
  encodings_.push_back(std::move(key));
  return id;
}

std::optional<int> ScriptInventory::find(const EditScript& script) const { return find(encode_script(script)); }

std::optional<int> ScriptInventory::find(std::string_view encoded) const {
  if (auto it = index_.find(std::string(encoded)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::string ScriptInventory::lemmatize(int id, std::string_view form) const {
  try {
    std::string lemma = apply_script(script(id), form);
    if (!lemma.empty()) return lemma;
  } catch (const ScriptOverrun&) {
  }
  return std::string(form);
}

ScriptInventory ScriptInventory::from_encodings(const std::vector<std::string>& encodings) {
  ScriptInventory inv;
  if (encodings.empty() || encodings.front() != inv.encoded(0))
    throw std::invalid_argument("script inventory must start with the identity script");
  for (size_t k = 1; k < encodings.size(); ++k) {
    int id = inv.add(decode_script(encodings[k]));
    if (id != static_cast<int>(k) || inv.encoded(id) != encodings[k])
      throw std::invalid_argument("non-canonical or duplicate script in inventory: " + encodings[k]);
  }
  return inv;
}

ScriptInventory build_inventory(const Treebank& tb) {
  ScriptInventory inv;
  for (const auto& s : tb.sentences)
    for (const auto& w : s.words)
      if (w.lemma != "_" || w.form == "_") inv.add(induce_script(w.form, w.lemma));
  return inv;
}

}  // namespace jointud
