#include "jointud/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "jointud/unicode.hpp"

namespace jointud {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool parse_int(std::string_view text, int& value) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class Parser {
 public:
  Parser(Validation mode, std::vector<std::string>* warnings) : mode_(mode), warnings_(warnings) {}

  Treebank run(std::string_view text) {
    int line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
      size_t eol = text.find('\n', pos);
      std::string_view line =
          eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
      pos = eol == std::string_view::npos ? text.size() : eol + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      handle_line(line, line_no);
    }
    if (open_) {
      if (warnings_)
        warnings_->push_back("line " + std::to_string(line_no) +
                             ": final sentence not terminated by a blank line");
      finish_sentence(line_no);
    }
    return std::move(tb_);
  }

 private:
  void handle_line(std::string_view line, int line_no) {
    if (line.empty()) {
      if (open_) {
        finish_sentence(line_no);
      } else if (warnings_) {
        warnings_->push_back("line " + std::to_string(line_no) + ": extra blank line");
      }
      return;
    }
    open_ = true;
    if (line.front() == '#') {
      current_.comments.emplace_back(line.substr(1));
      return;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 10)
      throw ConlluError(line_no, "expected 10 tab-separated fields, found " + std::to_string(cols.size()));
    std::string_view id = cols[0];
    if (auto dash = id.find('-'); dash != std::string_view::npos) {
      MultiwordToken mwt;
      if (!parse_int(id.substr(0, dash), mwt.start) || !parse_int(id.substr(dash + 1), mwt.end))
        throw ConlluError(line_no, "cannot parse multiword token range '" + std::string(id) + "'");
      if (mwt.start >= mwt.end)
        throw ConlluError(line_no, "empty multiword token range '" + std::string(id) + "'");
      if (mwt.start != static_cast<int>(current_.words.size()) + 1)
        throw ConlluError(line_no, "multiword token range '" + std::string(id) + "' does not start at the next word");
      if (!current_.multiword_tokens.empty() && current_.multiword_tokens.back().end >= mwt.start)
        throw ConlluError(line_no, "overlapping multiword token ranges");
      mwt.form = std::string(cols[1]);
      for (size_t k = 0; k < 8; ++k) mwt.rest[k] = std::string(cols[k + 2]);
      current_.multiword_tokens.push_back(std::move(mwt));
      return;
    }
    if (auto dot = id.find('.'); dot != std::string_view::npos) {
      int major = 0, minor = 0;
      if (!parse_int(id.substr(0, dot), major) || !parse_int(id.substr(dot + 1), minor))
        throw ConlluError(line_no, "cannot parse empty node id '" + std::string(id) + "'");
      current_.empty_nodes.push_back({major, std::string(line)});
      return;
    }
    Word w;
    if (!parse_int(id, w.id)) throw ConlluError(line_no, "cannot parse word id '" + std::string(id) + "'");
    if (w.id != static_cast<int>(current_.words.size()) + 1)
      throw ConlluError(line_no, "word id " + std::string(id) + " is not consecutive, expected " +
                                     std::to_string(current_.words.size() + 1));
    if (cols[1].empty()) throw ConlluError(line_no, "empty FORM");
    w.form = std::string(cols[1]);
    w.lemma = std::string(cols[2]);
    w.upos = std::string(cols[3]);
    w.xpos = std::string(cols[4]);
    w.feats = parse_feats(cols[5]);
    if (cols[6] == "_" && mode_ == Validation::kLenient) {
      w.head = kNoHead;
    } else if (!parse_int(cols[6], w.head) || w.head < 0) {
      throw ConlluError(line_no, "cannot parse HEAD '" + std::string(cols[6]) + "'");
    }
    w.deprel = std::string(cols[7]);
    w.deps = std::string(cols[8]);
    w.misc = std::string(cols[9]);
    current_.words.push_back(std::move(w));
  }

  void finish_sentence(int line_no) {
    if (current_.words.empty()) throw ConlluError(line_no, "sentence without words");
    for (const auto& mwt : current_.multiword_tokens)
      if (mwt.end > static_cast<int>(current_.words.size()))
        throw ConlluError(line_no, "multiword token range extends past the sentence end");
    if (mode_ == Validation::kStrict) {
      if (auto problem = validate_sentence(current_); !problem.empty()) throw ConlluError(line_no, problem);
    }
    tb_.sentences.push_back(std::move(current_));
    current_ = Sentence{};
    open_ = false;
  }

  Validation mode_;
  std::vector<std::string>* warnings_;
  Treebank tb_;
  Sentence current_;
  bool open_ = false;
};

}  // namespace

ConlluError::ConlluError(int line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

size_t Treebank::word_count() const {
  size_t n = 0;
  for (const auto& s : sentences) n += s.words.size();
  return n;
}

Feats parse_feats(std::string_view column) {
  Feats feats;
  if (column == "_" || column.empty()) return feats;
  for (auto item : split(column, '|')) {
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      feats.emplace_back(std::string(item), std::string());
    else
      feats.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
  }
  return feats;
}

std::string format_feats(const Feats& feats) {
  if (feats.empty()) return "_";
  std::string out;
  for (size_t i = 0; i < feats.size(); ++i) {
    if (i) out += '|';
    out += feats[i].first;
    out += '=';
    out += feats[i].second;
  }
  return out;
}

std::string_view universal_deprel(std::string_view deprel) { return deprel.substr(0, deprel.find(':')); }

std::string validate_sentence(const Sentence& s) {
  const int n = static_cast<int>(s.words.size());
  if (n == 0) return "sentence without words";
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Word& w = s.words[i];
    std::string where = "word " + std::to_string(w.id) + ": ";
    if (w.id != i + 1) return where + "id not consecutive";
    if (w.head < 0 || w.head > n) return where + "HEAD " + std::to_string(w.head) + " out of range";
    if (w.head == w.id) return where + "word is its own head";
    bool is_root_rel = universal_deprel(w.deprel) == "root";
    if ((w.head == 0) != is_root_rel) return where + "HEAD 0 must coincide with deprel root";
    if (w.head == 0) ++roots;
    for (size_t k = 0; k < w.feats.size(); ++k) {
      if (w.feats[k].first.empty() || w.feats[k].second.empty()) return where + "malformed feature";
      if (k > 0 && !(lower_ascii(w.feats[k - 1].first) < lower_ascii(w.feats[k].first)))
        return where + "features not sorted";
    }
  }
  if (roots != 1) return "sentence has " + std::to_string(roots) + " roots";
  for (int i = 0; i < n; ++i) {
    int steps = 0;
    for (int h = s.words[i].head; h != 0; h = s.words[h - 1].head)
      if (++steps > n) return "cycle through word " + std::to_string(i + 1);
  }
  int last_end = 0;
  for (const auto& mwt : s.multiword_tokens) {
    if (mwt.start <= last_end || mwt.start >= mwt.end || mwt.end > n) return "invalid multiword token range";
    last_end = mwt.end;
  }
  return {};
}

Treebank parse_conllu(std::string_view text, Validation mode, std::vector<std::string>* warnings) {
  return Parser(mode, warnings).run(text);
}

std::string serialize_conllu(const Treebank& tb) {
  std::string out;
  for (const auto& s : tb.sentences) {
    for (const auto& c : s.comments) {
      out += '#';
      out += c;
      out += '\n';
    }
    size_t mwt = 0, empty = 0;
    auto flush_empty = [&](int after) {
      while (empty < s.empty_nodes.size() && s.empty_nodes[empty].after == after) {
        out += s.empty_nodes[empty++].line;
        out += '\n';
      }
    };
    flush_empty(0);
    for (const auto& w : s.words) {
      while (mwt < s.multiword_tokens.size() && s.multiword_tokens[mwt].start == w.id) {
        const auto& m = s.multiword_tokens[mwt++];
        out += std::to_string(m.start) + '-' + std::to_string(m.end) + '\t' + m.form;
        for (const auto& col : m.rest) {
          out += '\t';
          out += col;
        }
        out += '\n';
      }
      out += std::to_string(w.id);
      for (const std::string* col : {&w.form, &w.lemma, &w.upos, &w.xpos}) {
        out += '\t';
        out += *col;
      }
      out += '\t';
      out += format_feats(w.feats);
      out += '\t';
      out += w.head == kNoHead ? std::string("_") : std::to_string(w.head);
      for (const std::string* col : {&w.deprel, &w.deps, &w.misc}) {
        out += '\t';
        out += *col;
      }
      out += '\n';
      flush_empty(w.id);
    }
    out += '\n';
  }
  return out;
}

Treebank read_conllu_file(const std::string& path, Validation mode, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  Treebank tb = parse_conllu(buffer.str(), mode, warnings);
  tb.name = path;
  return tb;
}

void write_conllu_file(const std::string& path, const Treebank& tb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_conllu(tb);
}

}  // namespace jointud
