#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ecc/common.hpp"
#include "ecc/parallel.hpp"

namespace ecc {

constexpr int kRootSentinel = -1;

// ---------------------------------------------------------------------------
// Raw corpus side: DOC/TEXT/P markup.
// ---------------------------------------------------------------------------

struct RawDocument {
  std::string doc_id;
  std::vector<std::string> paragraphs;  // whitespace-normalized, non-empty

  bool operator==(const RawDocument&) const = default;
};

struct GigawordResult {
  std::vector<RawDocument> documents;
  std::vector<std::string> warnings;  // skipped documents, one line each
};

namespace detail {

inline std::string decode_entities(std::string_view s) {
  static const std::pair<std::string_view, char> kEntities[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      bool matched = false;
      for (const auto& [name, ch] : kEntities) {
        if (s.substr(i, name.size()) == name) {
          out.push_back(ch);
          i += name.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

// Pulls the value of id="..." (or single-quoted) out of a raw tag body.
inline std::string tag_id_attribute(std::string_view tag) {
  for (std::size_t i = 0; i + 2 < tag.size(); ++i) {
    if ((i == 0 || is_space_byte(tag[i - 1])) && (tag[i] == 'i' || tag[i] == 'I') &&
        (tag[i + 1] == 'd' || tag[i + 1] == 'D')) {
      std::size_t j = i + 2;
      while (j < tag.size() && is_space_byte(tag[j])) ++j;
      if (j >= tag.size() || tag[j] != '=') continue;
      ++j;
      while (j < tag.size() && is_space_byte(tag[j])) ++j;
      if (j >= tag.size()) return {};
      char quote = tag[j];
      if (quote == '"' || quote == '\'') {
        std::size_t end = tag.find(quote, j + 1);
        if (end == std::string_view::npos) return {};
        return std::string(tag.substr(j + 1, end - j - 1));
      }
      std::size_t end = j;
      while (end < tag.size() && !is_space_byte(tag[end])) ++end;
      return std::string(tag.substr(j, end - j));
    }
  }
  return {};
}

}  // namespace detail

// Lenient scanner for DOC/TEXT/P corpus markup. Tag boundaries drive the
// parse; stray '<' that does not open a tag and unescaped '&' are treated as
// text, which the real corpus files require. Unclosed DOC or TEXT raises a
// ParseError naming the byte offset of the opening tag; a DOC without a TEXT
// element is skipped with a warning, as is a DOC with a missing or duplicate
// id. Empty paragraphs are dropped.
inline GigawordResult parse_gigaword_stream(std::string_view text) {
  GigawordResult result;
  std::set<std::string> seen_ids;

  bool in_doc = false, in_text = false, in_p = false;
  bool doc_had_text = false, doc_skipped = false;
  std::size_t doc_open_offset = 0, text_open_offset = 0;
  std::string doc_id;
  std::string paragraph;
  std::vector<std::string> paragraphs;

  auto flush_paragraph = [&]() {
    std::string cleaned = collapse_whitespace(detail::decode_entities(paragraph));
    if (!cleaned.empty()) paragraphs.push_back(std::move(cleaned));
    paragraph.clear();
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    bool opens_tag = false;
    if (c == '<' && i + 1 < n) {
      char next = text[i + 1];
      opens_tag = (next == '/') || (next >= 'A' && next <= 'Z') || (next >= 'a' && next <= 'z');
    }
    if (!opens_tag) {
      if (in_doc && in_text && in_p) paragraph.push_back(c);
      ++i;
      continue;
    }

    std::size_t close = text.find('>', i + 1);
    if (close == std::string_view::npos) {
      // No closing '>' anywhere: the remainder is text, not markup.
      if (in_doc && in_text && in_p) paragraph.append(text.substr(i));
      break;
    }
    std::string_view body = text.substr(i + 1, close - i - 1);
    bool closing = !body.empty() && body.front() == '/';
    if (closing) body.remove_prefix(1);
    std::size_t name_end = 0;
    while (name_end < body.size() && !is_space_byte(body[name_end])) ++name_end;
    std::string name = ascii_lower(body.substr(0, name_end));

    if (name == "doc" && !closing) {
      in_doc = true;
      in_text = in_p = false;
      doc_had_text = doc_skipped = false;
      doc_open_offset = i;
      paragraphs.clear();
      paragraph.clear();
      doc_id = detail::tag_id_attribute(body);
      if (doc_id.empty()) {
        result.warnings.push_back("document at byte offset " + std::to_string(i) +
                                  " skipped: missing id attribute");
        doc_skipped = true;
      } else if (!seen_ids.insert(doc_id).second) {
        result.warnings.push_back("document " + doc_id + " skipped: duplicate doc id");
        doc_skipped = true;
      }
    } else if (name == "doc" && closing) {
      if (in_text)
        throw ParseError("unclosed TEXT tag opened at byte offset " +
                         std::to_string(text_open_offset));
      if (in_doc && !doc_skipped) {
        if (!doc_had_text) {
          result.warnings.push_back("document " + doc_id + " skipped: no TEXT element");
        } else {
          result.documents.push_back({doc_id, paragraphs});
        }
      }
      in_doc = false;
    } else if (name == "text" && !closing && in_doc) {
      in_text = true;
      in_p = false;
      doc_had_text = true;
      text_open_offset = i;
    } else if (name == "text" && closing) {
      if (in_p) flush_paragraph();
      in_text = in_p = false;
    } else if (name == "p" && !closing && in_text) {
      if (in_p) flush_paragraph();
      in_p = true;
    } else if (name == "p" && closing && in_text) {
      if (in_p) flush_paragraph();
      in_p = false;
    }
    // Any other tag is markup noise; its text content is not paragraph text.
    i = close + 1;
  }

  if (in_text)
    throw ParseError("unclosed TEXT tag opened at byte offset " + std::to_string(text_open_offset));
  if (in_doc)
    throw ParseError("unclosed DOC tag opened at byte offset " + std::to_string(doc_open_offset));
  return result;
}

// ---------------------------------------------------------------------------
// Annotated corpus side: one JSON document record per line.
// ---------------------------------------------------------------------------

struct Token {
  int index = 0;  // position in sentence
  std::string surface;
  std::string lemma;  // lowercased on load
  std::string pos;

  bool operator==(const Token&) const = default;
};

struct DependencyArc {
  int head = kRootSentinel;  // token index, or -1 for the root arc
  int dependent = 0;
  std::string relation;

  bool operator==(const DependencyArc&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<DependencyArc> arcs;

  bool operator==(const Sentence&) const = default;
};

struct Mention {
  int sentence_index = 0;
  int start = 0;  // inclusive token span
  int end = 0;
  int head_token = 0;

  bool operator==(const Mention&) const = default;
};

struct CorefChain {
  std::string entity_id;
  std::vector<Mention> mentions;
  std::string canonical_lemma;  // lemma of the first mention's head token

  bool operator==(const CorefChain&) const = default;
};

struct AnnotatedDocument {
  std::string doc_id;
  std::vector<Sentence> sentences;
  std::vector<CorefChain> chains;

  bool operator==(const AnnotatedDocument&) const = default;
};

struct CorpusStats {
  std::int64_t doc_count = 0;
  std::int64_t sentence_count = 0;
  std::int64_t avg_hundredths = 0;  // avg sentences per doc, in units of 0.01

  double avg_sentences_per_doc() const { return static_cast<double>(avg_hundredths) / 100.0; }
  std::string avg_formatted() const { return format_scaled(avg_hundredths, 2); }

  bool operator==(const CorpusStats&) const = default;
};

struct AnnotatedLoadResult {
  std::vector<AnnotatedDocument> documents;
  std::vector<std::string> diagnostics;  // one line per rejected document
};

namespace detail {

// Checks that the arcs form a single-rooted tree over the sentence's tokens:
// every token is a dependent exactly once, exactly one root arc, no cycles.
// Returns an empty string on success, else the failing field description.
inline std::string check_arc_tree(const Sentence& sentence) {
  const int n = static_cast<int>(sentence.tokens.size());
  if (static_cast<int>(sentence.arcs.size()) != n)
    return "arcs: expected one arc per token, got " + std::to_string(sentence.arcs.size()) +
           " arcs for " + std::to_string(n) + " tokens";
  std::vector<int> head_of(n, -2);
  int roots = 0;
  for (const auto& arc : sentence.arcs) {
    if (arc.dependent < 0 || arc.dependent >= n)
      return "arcs: dependent index " + std::to_string(arc.dependent) + " out of range";
    if (arc.head != kRootSentinel && (arc.head < 0 || arc.head >= n))
      return "arcs: head index " + std::to_string(arc.head) + " out of range";
    if (arc.head == arc.dependent)
      return "arcs: token " + std::to_string(arc.dependent) + " heads itself";
    if (head_of[arc.dependent] != -2)
      return "arcs: token " + std::to_string(arc.dependent) + " has two heads";
    head_of[arc.dependent] = arc.head;
    if (arc.head == kRootSentinel) ++roots;
  }
  if (roots != 1) return "arcs: expected exactly one root arc, got " + std::to_string(roots);
  // Every token must reach the root; with unique heads this rules out cycles.
  for (int t = 0; t < n; ++t) {
    int cur = t, steps = 0;
    while (cur != kRootSentinel) {
      cur = head_of[cur];
      if (++steps > n) return "arcs: cycle through token " + std::to_string(t);
    }
  }
  return {};
}

inline std::string validate_document(AnnotatedDocument& doc) {
  if (doc.doc_id.empty()) return "doc_id: empty";
  if (doc.sentences.empty()) return "sentences: empty";
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    auto& sentence = doc.sentences[s];
    if (sentence.tokens.empty()) return "sentences[" + std::to_string(s) + "]: no tokens";
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      auto& token = sentence.tokens[t];
      token.index = static_cast<int>(t);
      token.lemma = ascii_lower(token.lemma);
      if (token.lemma.empty())
        return "sentences[" + std::to_string(s) + "].tokens[" + std::to_string(t) +
               "].lemma: empty";
    }
    std::string arc_problem = check_arc_tree(sentence);
    if (!arc_problem.empty()) return "sentences[" + std::to_string(s) + "]." + arc_problem;
  }
  std::set<std::string> entity_ids;
  for (const auto& chain : doc.chains) {
    if (chain.entity_id.empty()) return "chains: empty entity_id";
    if (!entity_ids.insert(chain.entity_id).second)
      return "chains: duplicate entity_id " + chain.entity_id;
    if (chain.mentions.empty()) return "chains[" + chain.entity_id + "].mentions: empty";
    for (const auto& m : chain.mentions) {
      if (m.sentence_index < 0 || m.sentence_index >= static_cast<int>(doc.sentences.size()))
        return "chains[" + chain.entity_id + "]: mention sentence_index " +
               std::to_string(m.sentence_index) + " out of range";
      const int n = static_cast<int>(doc.sentences[m.sentence_index].tokens.size());
      if (m.start < 0 || m.end >= n || m.start > m.head_token || m.head_token > m.end)
        return "chains[" + chain.entity_id + "]: mention span [" + std::to_string(m.start) + "," +
               std::to_string(m.end) + "] head " + std::to_string(m.head_token) +
               " invalid for sentence of " + std::to_string(n) + " tokens";
    }
  }
  // Derived field, not part of the wire format.
  for (auto& chain : doc.chains) {
    const Mention& first = chain.mentions.front();
    chain.canonical_lemma = doc.sentences[first.sentence_index].tokens[first.head_token].lemma;
  }
  return {};
}

inline AnnotatedDocument document_from_json(const nlohmann::json& j) {
  AnnotatedDocument doc;
  doc.doc_id = j.value("doc_id", std::string{});
  for (const auto& js : j.at("sentences")) {
    Sentence sentence;
    for (const auto& jt : js.at("tokens")) {
      Token token;
      token.surface = jt.value("surface", std::string{});
      token.lemma = jt.value("lemma", std::string{});
      token.pos = jt.value("pos", std::string{});
      sentence.tokens.push_back(std::move(token));
    }
    if (js.contains("arcs")) {
      for (const auto& ja : js.at("arcs")) {
        DependencyArc arc;
        arc.head = ja.at("head").get<int>();
        arc.dependent = ja.at("dependent").get<int>();
        arc.relation = ja.value("relation", std::string{});
        sentence.arcs.push_back(std::move(arc));
      }
    }
    doc.sentences.push_back(std::move(sentence));
  }
  if (j.contains("chains")) {
    for (const auto& jc : j.at("chains")) {
      CorefChain chain;
      chain.entity_id = jc.value("entity_id", std::string{});
      for (const auto& jm : jc.at("mentions")) {
        Mention m;
        m.sentence_index = jm.at("sentence").get<int>();
        m.start = jm.at("start").get<int>();
        m.end = jm.at("end").get<int>();
        m.head_token = jm.at("head").get<int>();
        chain.mentions.push_back(m);
      }
      doc.chains.push_back(std::move(chain));
    }
  }
  return doc;
}

}  // namespace detail

// Loads the line-delimited annotated-document format. Invalid documents are
// rejected with a diagnostic naming the document and field; strict=true
// escalates the first rejection to a ValidationError. Parsing and validation
// run per line and may be parallelized; output order always matches input.
inline AnnotatedLoadResult load_annotated(std::string_view text, bool strict = false,
                                          unsigned threads = 1) {
  std::vector<std::string> lines;
  for (auto& line : split_lines(text)) {
    if (!collapse_whitespace(line).empty()) lines.push_back(std::move(line));
  }

  struct LineResult {
    std::optional<AnnotatedDocument> doc;
    std::string diagnostic;
  };
  auto parse_line = [](const std::string& line) -> LineResult {
    AnnotatedDocument doc;
    try {
      doc = detail::document_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      return {std::nullopt, std::string("record rejected: ") + e.what()};
    }
    std::string problem = detail::validate_document(doc);
    if (!problem.empty()) {
      std::string id = doc.doc_id.empty() ? "<missing id>" : doc.doc_id;
      return {std::nullopt, "doc " + id + " rejected: " + problem};
    }
    return {std::move(doc), {}};
  };

  AnnotatedLoadResult result;
  auto parsed = parallel_map(lines, parse_line, threads);
  for (auto& r : parsed) {
    if (r.doc) {
      result.documents.push_back(std::move(*r.doc));
    } else {
      if (strict) throw ValidationError(r.diagnostic);
      result.diagnostics.push_back(std::move(r.diagnostic));
    }
  }
  return result;
}

inline nlohmann::ordered_json document_to_json(const AnnotatedDocument& doc) {
  nlohmann::ordered_json j;
  j["doc_id"] = doc.doc_id;
  j["sentences"] = nlohmann::ordered_json::array();
  for (const auto& sentence : doc.sentences) {
    nlohmann::ordered_json js;
    js["tokens"] = nlohmann::ordered_json::array();
    for (const auto& t : sentence.tokens)
      js["tokens"].push_back({{"surface", t.surface}, {"lemma", t.lemma}, {"pos", t.pos}});
    js["arcs"] = nlohmann::ordered_json::array();
    for (const auto& a : sentence.arcs)
      js["arcs"].push_back(
          {{"head", a.head}, {"dependent", a.dependent}, {"relation", a.relation}});
    j["sentences"].push_back(std::move(js));
  }
  j["chains"] = nlohmann::ordered_json::array();
  for (const auto& chain : doc.chains) {
    nlohmann::ordered_json jc;
    jc["entity_id"] = chain.entity_id;
    jc["mentions"] = nlohmann::ordered_json::array();
    for (const auto& m : chain.mentions)
      jc["mentions"].push_back(
          {{"sentence", m.sentence_index}, {"start", m.start}, {"end", m.end}, {"head", m.head_token}});
    j["chains"].push_back(std::move(jc));
  }
  return j;
}

// Emits the same line-delimited form load_annotated reads; the two round-trip.
inline std::string serialize_annotated(const std::vector<AnnotatedDocument>& docs) {
  std::string out;
  for (const auto& doc : docs) {
    out += document_to_json(doc).dump();
    out.push_back('\n');
  }
  return out;
}

inline CorpusStats corpus_stats_from_counts(std::int64_t doc_count, std::int64_t sentence_count) {
  CorpusStats stats;
  stats.doc_count = doc_count;
  stats.sentence_count = sentence_count;
  stats.avg_hundredths =
      doc_count == 0 ? 0 : scaled_round_half_up(sentence_count, doc_count, 2);
  return stats;
}

inline CorpusStats corpus_stats(const std::vector<AnnotatedDocument>& docs) {
  std::int64_t sentences = 0;
  for (const auto& doc : docs) sentences += static_cast<std::int64_t>(doc.sentences.size());
  return corpus_stats_from_counts(static_cast<std::int64_t>(docs.size()), sentences);
}

}  // namespace ecc
