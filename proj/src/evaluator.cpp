#include "jointud/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "jointud/unicode.hpp"

namespace jointud {

namespace {

const std::set<std::string, std::less<>> kContentDeprels = {
    "nsubj", "obj",    "iobj",     "csubj", "ccomp", "xcomp",  "obl",  "vocative", "expl",      "dislocated",
    "advcl", "advmod", "discourse", "nmod", "appos", "nummod", "acl",  "amod",     "conj",      "fixed",
    "flat",  "compound", "list",   "parataxis", "orphan", "goeswith", "reparandum", "root", "dep"};

const std::set<std::string, std::less<>> kFunctionalDeprels = {"aux", "cop", "mark", "det", "clf", "case", "cc"};

const std::set<std::string, std::less<>> kUniversalFeatures = {
    "PronType", "NumType", "Poss",   "Reflex", "Foreign", "Abbr",  "Gender",   "Animacy", "Number",   "Case",  "Definite",
    "Degree",   "VerbForm", "Mood",  "Tense",  "Aspect",  "Voice", "Evident",  "Polarity", "Person", "Polite"};

constexpr int kRootParent = -1;
constexpr int kNotAligned = -2;
constexpr int kUnknownParent = -3;

struct Span {
  int start = 0, end = 0;
};

struct EvalWord {
  Span span;
  bool multiword = false;
  std::u32string form_lower;
  std::string lemma, upos, xpos, feats, deprel;
  int parent = kRootParent;  // file-wide index
  std::vector<int> functional_children;
  bool content = false, functional = false;
};

struct EvalTreebank {
  std::u32string characters;
  std::vector<Span> tokens;
  std::vector<EvalWord> words;
  bool has_upos = false, has_xpos = false, has_feats = false, has_lemmas = false;
};

std::u32string strip_spaces(const std::string& form) {
  std::u32string out;
  for (char32_t cp : utf8::decode(form))
    if (!utf8::is_space_separator(cp)) out.push_back(cp);
  return out;
}

std::string universal_feats(const Feats& feats) {
  std::vector<std::string> kept;
  for (const auto& [key, value] : feats)
    if (kUniversalFeatures.count(key)) kept.push_back(key + "=" + value);
  std::sort(kept.begin(), kept.end());
  std::string out;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (i) out += '|';
    out += kept[i];
  }
  return out;
}

EvalTreebank load(const Treebank& tb) {
  EvalTreebank ud;
  for (const auto& sentence : tb.sentences) {
    const int offset = static_cast<int>(ud.words.size());
    const int n = static_cast<int>(sentence.words.size());
    size_t mwt = 0;
    Span mwt_span;
    int mwt_end = 0;
    for (const auto& w : sentence.words) {
      EvalWord ew;
      if (mwt < sentence.multiword_tokens.size() && sentence.multiword_tokens[mwt].start == w.id) {
        const auto& m = sentence.multiword_tokens[mwt++];
        std::u32string chars = strip_spaces(m.form);
        if (chars.empty()) throw AlignmentError("empty FORM in multiword token");
        mwt_span = {static_cast<int>(ud.characters.size()), static_cast<int>(ud.characters.size() + chars.size())};
        ud.characters += chars;
        ud.tokens.push_back(mwt_span);
        mwt_end = m.end;
      }
      if (w.id <= mwt_end) {
        ew.span = mwt_span;
        ew.multiword = true;
        ew.form_lower = utf8::to_lower(utf8::decode(w.form));
      } else {
        std::u32string chars = strip_spaces(w.form);
        if (chars.empty()) throw AlignmentError("empty FORM in word");
        ew.span = {static_cast<int>(ud.characters.size()), static_cast<int>(ud.characters.size() + chars.size())};
        ud.characters += chars;
        ud.tokens.push_back(ew.span);
        ew.form_lower = utf8::to_lower(chars);
      }
      ew.lemma = w.lemma;
      ew.upos = w.upos;
      ew.xpos = w.xpos;
      ew.feats = universal_feats(w.feats);
      ew.deprel = std::string(universal_deprel(w.deprel));
      ew.content = kContentDeprels.count(ew.deprel) > 0;
      ew.functional = kFunctionalDeprels.count(ew.deprel) > 0;
      if (w.head == 0) ew.parent = kRootParent;
      else if (w.head > 0 && w.head <= n) ew.parent = offset + w.head - 1;
      else ew.parent = kUnknownParent;
      ud.has_upos |= w.upos != "_";
      ud.has_xpos |= w.xpos != "_";
      ud.has_feats |= !w.feats.empty();
      ud.has_lemmas |= w.lemma != "_";
      ud.words.push_back(std::move(ew));
    }
    for (int i = offset; i < offset + n; ++i) {
      const EvalWord& w = ud.words[i];
      if (w.parent >= 0 && w.functional) ud.words[w.parent].functional_children.push_back(i);
    }
  }
  return ud;
}

MetricScore make_score(long gold, long system, long correct, long aligned = -1) {
  MetricScore s;
  s.correct = correct;
  s.gold_total = gold;
  s.system_total = system;
  s.aligned_total = aligned < 0 ? 0 : aligned;
  s.precision = system ? 100.0 * correct / system : 0.0;
  s.recall = gold ? 100.0 * correct / gold : 0.0;
  s.f1 = system + gold ? 200.0 * correct / (system + gold) : 0.0;
  return s;
}

MetricScore spans_score(const std::vector<Span>& gold, const std::vector<Span>& system) {
  long correct = 0;
  size_t gi = 0, si = 0;
  while (gi < gold.size() && si < system.size()) {
    if (system[si].start < gold[gi].start) {
      ++si;
    } else if (gold[gi].start < system[si].start) {
      ++gi;
    } else {
      correct += gold[gi].end == system[si].end;
      ++gi, ++si;
    }
  }
  return make_score(static_cast<long>(gold.size()), static_cast<long>(system.size()), correct);
}

bool beyond_end(const std::vector<EvalWord>& words, size_t i, int span_end) {
  if (i >= words.size()) return true;
  if (words[i].multiword) return words[i].span.start >= span_end;
  return words[i].span.end > span_end;
}

int extend_end(const EvalWord& w, int span_end) {
  return w.multiword && w.span.end > span_end ? w.span.end : span_end;
}

std::vector<AlignedWordPair> align_words(const std::vector<EvalWord>& gold, const std::vector<EvalWord>& system) {
  std::vector<AlignedWordPair> out;
  size_t gi = 0, si = 0;
  while (gi < gold.size() && si < system.size()) {
    if (gold[gi].multiword || system[si].multiword) {
      // Minimal span covering every multiword token it touches, then LCS on
      // lowercased forms inside it.
      int span_end;
      if (gold[gi].multiword) {
        span_end = gold[gi].span.end;
        if (!system[si].multiword && system[si].span.start < gold[gi].span.start) ++si;
      } else {
        span_end = system[si].span.end;
        if (!gold[gi].multiword && gold[gi].span.start < system[si].span.start) ++gi;
      }
      const size_t gs = gi, ss = si;
      while (!beyond_end(gold, gi, span_end) || !beyond_end(system, si, span_end)) {
        if (gi < gold.size() && (si >= system.size() || gold[gi].span.start <= system[si].span.start)) {
          span_end = extend_end(gold[gi], span_end);
          ++gi;
        } else {
          span_end = extend_end(system[si], span_end);
          ++si;
        }
      }
      if (si > ss && gi > gs) {
        const size_t ng = gi - gs, ns = si - ss;
        std::vector<std::vector<int>> lcs(ng, std::vector<int>(ns, 0));
        for (size_t g = ng; g-- > 0;) {
          for (size_t s = ns; s-- > 0;) {
            if (gold[gs + g].form_lower == system[ss + s].form_lower)
              lcs[g][s] = 1 + (g + 1 < ng && s + 1 < ns ? lcs[g + 1][s + 1] : 0);
            lcs[g][s] = std::max(lcs[g][s], g + 1 < ng ? lcs[g + 1][s] : 0);
            lcs[g][s] = std::max(lcs[g][s], s + 1 < ns ? lcs[g][s + 1] : 0);
          }
        }
        size_t g = 0, s = 0;
        while (g < ng && s < ns) {
          if (gold[gs + g].form_lower == system[ss + s].form_lower) {
            const auto& gw = gold[gs + g];
            out.push_back({static_cast<int>(gs + g), static_cast<int>(ss + s), gw.span.start, gw.span.end});
            ++g, ++s;
          } else if (lcs[g][s] == (g + 1 < ng ? lcs[g + 1][s] : 0)) {
            ++g;
          } else {
            ++s;
          }
        }
      }
    } else {
      const auto& gw = gold[gi];
      const auto& sw = system[si];
      if (gw.span.start == sw.span.start && gw.span.end == sw.span.end) {
        out.push_back({static_cast<int>(gi), static_cast<int>(si), gw.span.start, gw.span.end});
        ++gi, ++si;
      } else if (gw.span.start <= sw.span.start) {
        ++gi;
      } else {
        ++si;
      }
    }
  }
  return out;
}

void check_same_text(const EvalTreebank& gold, const EvalTreebank& system) {
  if (gold.characters == system.characters) return;
  size_t index = 0;
  while (index < gold.characters.size() && index < system.characters.size() &&
         gold.characters[index] == system.characters[index])
    ++index;
  auto excerpt = [index](const std::u32string& chars) {
    return utf8::encode(std::u32string_view(chars).substr(std::min(index, chars.size()), 20));
  };
  throw AlignmentError("the concatenation of tokens in gold file and in system file differ; first differing "
                       "characters at offset " +
                       std::to_string(index) + ": gold '" + excerpt(gold.characters) + "', system '" +
                       excerpt(system.characters) + "'");
}

}  // namespace

std::vector<AlignedWordPair> align(const Treebank& gold, const Treebank& system) {
  EvalTreebank g = load(gold), s = load(system);
  check_same_text(g, s);
  return align_words(g.words, s.words);
}

EvalReport evaluate(const Treebank& gold_tb, const Treebank& system_tb) {
  const EvalTreebank gold = load(gold_tb), system = load(system_tb);
  check_same_text(gold, system);
  const auto pairs = align_words(gold.words, system.words);

  std::vector<int> system_to_gold(system.words.size(), kNotAligned);
  for (const auto& p : pairs) system_to_gold[p.system] = p.gold;
  auto gold_parent = [&](const EvalWord& w) { return w.parent; };
  auto system_parent = [&](const EvalWord& w) {
    if (w.parent < 0) return w.parent;
    return system_to_gold[w.parent];
  };
  auto functional_key = [&](const EvalWord& w, bool is_system) {
    std::vector<std::tuple<int, std::string, std::string, std::string>> key;
    for (int c : w.functional_children) {
      const EvalWord& child = is_system ? system.words[c] : gold.words[c];
      key.emplace_back(is_system ? system_to_gold[c] : c, child.deprel, child.upos, child.feats);
    }
    return key;
  };

  enum Filter { kAll, kContent };
  auto score = [&](Filter filter, auto&& correct_fn) {
    long g = 0, s = 0, a = 0, correct = 0;
    for (const auto& w : gold.words) g += filter == kAll || w.content;
    for (const auto& w : system.words) s += filter == kAll || w.content;
    for (const auto& p : pairs) {
      const EvalWord& gw = gold.words[p.gold];
      if (filter == kContent && !gw.content) continue;
      ++a;
      correct += correct_fn(gw, system.words[p.system]);
    }
    return make_score(g, s, correct, a);
  };
  auto same_lemma = [](const EvalWord& gw, const EvalWord& sw) { return gw.lemma == "_" || gw.lemma == sw.lemma; };
  auto same_arc = [&](const EvalWord& gw, const EvalWord& sw) {
    return gold_parent(gw) == system_parent(sw) && gw.deprel == sw.deprel;
  };

  EvalReport r;
  r[Metric::kTokens] = spans_score(gold.tokens, system.tokens);
  r[Metric::kWords] = score(kAll, [](const EvalWord&, const EvalWord&) { return true; });
  r[Metric::kUpos] = score(kAll, [](const EvalWord& g, const EvalWord& s) { return g.upos == s.upos; });
  r[Metric::kXpos] = score(kAll, [](const EvalWord& g, const EvalWord& s) { return g.xpos == s.xpos; });
  r[Metric::kUfeats] = score(kAll, [](const EvalWord& g, const EvalWord& s) { return g.feats == s.feats; });
  r[Metric::kAllTags] = score(kAll, [](const EvalWord& g, const EvalWord& s) {
    return g.upos == s.upos && g.xpos == s.xpos && g.feats == s.feats;
  });
  r[Metric::kLemmas] = score(kAll, same_lemma);
  r[Metric::kUas] = score(kAll, [&](const EvalWord& g, const EvalWord& s) { return gold_parent(g) == system_parent(s); });
  r[Metric::kLas] = score(kAll, same_arc);
  r[Metric::kClas] = score(kContent, same_arc);
  r[Metric::kMlas] = score(kContent, [&](const EvalWord& g, const EvalWord& s) {
    return same_arc(g, s) && g.upos == s.upos && g.feats == s.feats &&
           functional_key(g, false) == functional_key(s, true);
  });
  r[Metric::kBlex] = score(kContent, [&](const EvalWord& g, const EvalWord& s) { return same_arc(g, s) && same_lemma(g, s); });
  r.aligned_words = static_cast<long>(pairs.size());

  if (!gold.words.empty()) {
    r[Metric::kUpos].applicable = gold.has_upos;
    r[Metric::kXpos].applicable = gold.has_xpos;
    r[Metric::kUfeats].applicable = gold.has_feats;
    r[Metric::kLemmas].applicable = gold.has_lemmas;
    r[Metric::kBlex].applicable = gold.has_lemmas;
  }
  return r;
}

EvalReport macro_average(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("macro_average: no reports");
  EvalReport out;
  for (int m = 0; m < kMetricCount; ++m) {
    MetricScore& acc = out.scores[m];
    int used = 0;
    for (const auto& r : reports) {
      const MetricScore& s = r.scores[m];
      acc.correct += s.correct;
      acc.gold_total += s.gold_total;
      acc.system_total += s.system_total;
      acc.aligned_total += s.aligned_total;
      if (!s.applicable) continue;
      acc.precision += s.precision;
      acc.recall += s.recall;
      acc.f1 += s.f1;
      ++used;
    }
    if (used) {
      acc.precision /= used;
      acc.recall /= used;
      acc.f1 /= used;
    }
    acc.applicable = used > 0;
  }
  for (const auto& r : reports) out.aligned_words += r.aligned_words;
  return out;
}

double relative_error_reduction(double baseline_f1, double improved_f1) {
  if (!(baseline_f1 < 100.0)) throw std::invalid_argument("relative_error_reduction: baseline must be below 100");
  return 100.0 * (improved_f1 - baseline_f1) / (100.0 - baseline_f1);
}

double round_half_up(double value, int decimals) {
  const double factor = std::pow(10.0, decimals);
  const double scaled = value * factor;
  // Nudge values sitting just under a half because of binary representation.
  return std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, std::abs(scaled))) / factor;
}

std::string format_score(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up(value));
  return buf;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "Metric     | Precision |    Recall |  F1 Score\n";
  out << "-----------+-----------+-----------+-----------\n";
  char line[128];
  for (int m = 0; m < kMetricCount; ++m) {
    const MetricScore& s = report.scores[m];
    std::string name(kMetricNames[m]);
    if (!s.applicable) {
      std::snprintf(line, sizeof line, "%-11s|%10s |%10s |%10s\n", name.c_str(), "NA", "NA", "NA");
    } else {
      std::snprintf(line, sizeof line, "%-11s|%10s |%10s |%10s\n", name.c_str(), format_score(s.precision).c_str(),
                    format_score(s.recall).c_str(), format_score(s.f1).c_str());
    }
    out << line;
  }
  out << '\n';
  for (int m = 0; m < kMetricCount; ++m) {
    const MetricScore& s = report.scores[m];
    std::string name(kMetricNames[m]);
    auto value = [&](double v) { return s.applicable ? format_score(v) : std::string("NA"); };
    out << name << ".precision=" << value(s.precision) << '\n';
    out << name << ".recall=" << value(s.recall) << '\n';
    out << name << ".f1=" << value(s.f1) << '\n';
    out << name << ".correct=" << s.correct << '\n';
    out << name << ".gold=" << s.gold_total << '\n';
    out << name << ".system=" << s.system_total << '\n';
  }
  out << "aligned_words=" << report.aligned_words << '\n';
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  for (int m = 0; m < kMetricCount; ++m) {
    const MetricScore& s = report.scores[m];
    nlohmann::ordered_json entry;
    if (s.applicable) {
      entry["precision"] = round_half_up(s.precision, 4);
      entry["recall"] = round_half_up(s.recall, 4);
      entry["f1"] = round_half_up(s.f1, 4);
    } else {
      entry["precision"] = nullptr;
      entry["recall"] = nullptr;
      entry["f1"] = nullptr;
    }
    entry["correct"] = s.correct;
    entry["gold"] = s.gold_total;
    entry["system"] = s.system_total;
    entry["aligned"] = s.aligned_total;
    j[std::string(kMetricNames[m])] = entry;
  }
  j["aligned_words"] = report.aligned_words;
  return j.dump(2);
}

}  // namespace jointud
