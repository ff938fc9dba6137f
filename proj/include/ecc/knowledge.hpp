#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "ecc/common.hpp"
#include "ecc/corpus.hpp"
#include "ecc/events.hpp"
#include "ecc/pmi.hpp"
#include "ecc/temporal.hpp"

namespace ecc {

// One conditional rule: when the holder satisfies the property (under the
// given polarity), the action tends to follow. The argument fields keep the
// consequent's arguments in sentence token order, each tagged with the
// grammatical role it filled; holder_role is the role the holder itself
// fills in the consequent.
struct KnowledgeTemplate {
  std::string id;  // assigned when a knowledge base is built
  std::string holder;
  std::string property;
  bool polarity = true;
  std::string action;
  Role holder_role = Role::Subj;
  std::string first_arg;
  Role first_role = Role::Subj;
  std::string second_arg;
  Role second_role = Role::Obj;
  long long support = 1;
  std::optional<double> pmi;

  bool operator==(const KnowledgeTemplate&) const = default;
};

// The role-generalized reading of a template, with lexical arguments reduced
// to their roles.
struct GeneralizedTemplate {
  Role holder_role = Role::Subj;
  std::string property;
  bool polarity = true;
  std::string action;
  std::string subject_arg;
  std::string object_arg;

  bool operator==(const GeneralizedTemplate&) const = default;
};

// An event is negated when a "neg" arc hangs off its head token.
inline bool detect_polarity(const Sentence& sentence, int event_token) {
  for (const auto& arc : sentence.arcs)
    if (arc.head == event_token && arc.relation == "neg") return false;
  return true;
}

namespace detail {

inline std::tuple<std::string, std::string, std::string, std::string, bool, std::string,
                  std::string, std::string>
template_content_key(const KnowledgeTemplate& t) {
  return {t.action,     t.property,
          t.holder,     t.first_arg + "\t" + t.second_arg,
          !t.polarity,  // positive templates sort first
          to_string(t.holder_role), to_string(t.first_role), to_string(t.second_role)};
}

inline bool same_content(const KnowledgeTemplate& a, const KnowledgeTemplate& b) {
  return template_content_key(a) == template_content_key(b);
}

}  // namespace detail

// Builds the template for one directed pair: the earlier event supplies the
// condition, the later one the action.
inline KnowledgeTemplate template_from_pair(const AnnotatedDocument& doc,
                                            const OrderedEventPair& ordered,
                                            const PmiGraph* graph = nullptr) {
  const UnorderedEventPair& pair = ordered.pair;
  bool first_is_antecedent = ordered.relation == RelationLabel::Before;
  const EventTriple& antecedent = first_is_antecedent ? pair.first : pair.second;
  const EventTriple& consequent = first_is_antecedent ? pair.second : pair.first;
  Role role_in_antecedent = first_is_antecedent ? pair.role_in_first : pair.role_in_second;
  Role role_in_consequent = first_is_antecedent ? pair.role_in_second : pair.role_in_first;

  KnowledgeTemplate t;
  t.holder =
      role_in_antecedent == Role::Subj ? antecedent.subject : antecedent.object;
  t.property = antecedent.verb;
  t.polarity =
      detect_polarity(doc.sentences.at(antecedent.sentence_index), antecedent.verb_token);
  t.action = consequent.verb;
  t.holder_role = role_in_consequent;

  // Consequent arguments in token order.
  struct Arg {
    std::string lemma;
    Role role;
    int token;
  };
  std::vector<Arg> args;
  if (consequent.subject_token)
    args.push_back({consequent.subject, Role::Subj, *consequent.subject_token});
  if (consequent.object_token)
    args.push_back({consequent.object, Role::Obj, *consequent.object_token});
  std::sort(args.begin(), args.end(), [](const Arg& a, const Arg& b) { return a.token < b.token; });
  if (args.size() != 2)
    throw ValidationError("template requires a two-argument consequent event");
  t.first_arg = args[0].lemma;
  t.first_role = args[0].role;
  t.second_arg = args[1].lemma;
  t.second_role = args[1].role;

  if (graph) t.pmi = edge_pmi(*graph, first_key(pair), second_key(pair));
  return t;
}

inline std::vector<KnowledgeTemplate> make_templates(
    const std::vector<AnnotatedDocument>& documents, const std::vector<OrderedEventPair>& pairs,
    const PmiGraph* graph = nullptr) {
  std::map<std::string, const AnnotatedDocument*> by_id;
  for (const auto& doc : documents) by_id.emplace(doc.doc_id, &doc);
  std::vector<KnowledgeTemplate> templates;
  templates.reserve(pairs.size());
  for (const auto& ordered : pairs) {
    auto it = by_id.find(ordered.pair.doc_id);
    if (it == by_id.end())
      throw StageError("emit-kb",
                       "ordered pair references unknown document '" + ordered.pair.doc_id + "'");
    templates.push_back(template_from_pair(*it->second, ordered, graph));
  }
  return templates;
}

// ---------------------------------------------------------------------------
// Rendering and parsing
// ---------------------------------------------------------------------------

inline GeneralizedTemplate generalize(const KnowledgeTemplate& t) {
  GeneralizedTemplate g;
  g.holder_role = t.holder_role;
  g.property = t.property;
  g.polarity = t.polarity;
  g.action = t.action;
  g.subject_arg = t.first_role == Role::Subj ? t.first_arg : t.second_arg;
  g.object_arg = t.first_role == Role::Obj ? t.first_arg : t.second_arg;
  return g;
}

inline std::string render_template(const KnowledgeTemplate& t) {
  return t.holder + "." + t.property + " = " + (t.polarity ? "true" : "false") +
         " may cause execution of " + t.action + " [" + t.first_arg + ", " + t.second_arg + "]";
}

namespace detail {

inline const char* role_suffix(Role role) { return role == Role::Subj ? "_subject" : "_object"; }

}  // namespace detail

// The generalized line always lists the object argument first, so the shape
// of the rule is readable independently of the sentence's word order.
inline std::string render_generalized(const KnowledgeTemplate& t) {
  GeneralizedTemplate g = generalize(t);
  return t.holder + detail::role_suffix(g.holder_role) + "." + g.property + " = " +
         (g.polarity ? "true" : "false") + " may cause execution of " + g.action + " [" +
         g.object_arg + "_object, " + g.subject_arg + "_subject]";
}

namespace detail {

struct ParsedLine {
  std::string holder;
  std::string property;
  bool polarity = true;
  std::string action;
  std::string first_arg;
  std::string second_arg;
};

inline ParsedLine parse_template_line(std::string_view line) {
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("bad template line (" + why + "): '" + std::string(line) + "'");
  };
  ParsedLine parsed;
  std::size_t dot = line.find('.');
  if (dot == std::string_view::npos || dot == 0) throw fail("missing holder");
  parsed.holder = std::string(line.substr(0, dot));

  static const std::string kEquals = " = ";
  std::size_t eq = line.find(kEquals, dot + 1);
  if (eq == std::string_view::npos || eq == dot + 1) throw fail("missing property");
  parsed.property = std::string(line.substr(dot + 1, eq - dot - 1));

  static const std::string kCause = " may cause execution of ";
  std::size_t cause = line.find(kCause, eq + kEquals.size());
  if (cause == std::string_view::npos) throw fail("missing cause marker");
  std::string polarity(line.substr(eq + kEquals.size(), cause - eq - kEquals.size()));
  if (polarity == "true")
    parsed.polarity = true;
  else if (polarity == "false")
    parsed.polarity = false;
  else
    throw fail("polarity must be true or false");

  std::size_t bracket = line.find(" [", cause + kCause.size());
  if (bracket == std::string_view::npos || line.empty() || line.back() != ']')
    throw fail("missing argument list");
  parsed.action = std::string(line.substr(cause + kCause.size(), bracket - cause - kCause.size()));
  if (parsed.action.empty()) throw fail("missing action");

  std::string args(line.substr(bracket + 2, line.size() - bracket - 3));
  std::size_t comma = args.find(", ");
  if (comma == std::string::npos || args.find(", ", comma + 2) != std::string::npos)
    throw fail("argument list must hold exactly two entries");
  parsed.first_arg = args.substr(0, comma);
  parsed.second_arg = args.substr(comma + 2);
  if (parsed.first_arg.empty() || parsed.second_arg.empty()) throw fail("empty argument");
  return parsed;
}

inline bool strip_suffix(std::string& text, std::string_view suffix) {
  if (text.size() <= suffix.size()) return false;
  if (text.compare(text.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
  text.resize(text.size() - suffix.size());
  return true;
}

}  // namespace detail

// Recovers a full template from its two rendered lines. The generalized line
// carries the role information the lexical line alone cannot.
inline KnowledgeTemplate parse_template(std::string_view specific_line,
                                        std::string_view generalized_line) {
  auto specific = detail::parse_template_line(specific_line);
  auto generalized = detail::parse_template_line(generalized_line);

  KnowledgeTemplate t;
  t.holder = specific.holder;
  t.property = specific.property;
  t.polarity = specific.polarity;
  t.action = specific.action;
  t.first_arg = specific.first_arg;
  t.second_arg = specific.second_arg;

  std::string holder = generalized.holder;
  if (detail::strip_suffix(holder, "_subject"))
    t.holder_role = Role::Subj;
  else if (detail::strip_suffix(holder, "_object"))
    t.holder_role = Role::Obj;
  else
    throw ParseError("generalized line lacks a holder role suffix: '" +
                     std::string(generalized_line) + "'");
  std::string object_arg = generalized.first_arg;
  std::string subject_arg = generalized.second_arg;
  if (!detail::strip_suffix(object_arg, "_object") || !detail::strip_suffix(subject_arg, "_subject"))
    throw ParseError("generalized arguments must read [x_object, y_subject]: '" +
                     std::string(generalized_line) + "'");

  auto mismatch = [&](const std::string& why) -> ParseError {
    return ParseError("template lines disagree (" + why + "): '" + std::string(specific_line) +
                      "' vs '" + std::string(generalized_line) + "'");
  };
  if (holder != t.holder) throw mismatch("holder");
  if (generalized.property != t.property) throw mismatch("property");
  if (generalized.polarity != t.polarity) throw mismatch("polarity");
  if (generalized.action != t.action) throw mismatch("action");
  if (subject_arg == object_arg) throw mismatch("arguments are ambiguous");
  if (t.first_arg == subject_arg && t.second_arg == object_arg) {
    t.first_role = Role::Subj;
    t.second_role = Role::Obj;
  } else if (t.first_arg == object_arg && t.second_arg == subject_arg) {
    t.first_role = Role::Obj;
    t.second_role = Role::Subj;
  } else {
    throw mismatch("arguments");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Knowledge base
// ---------------------------------------------------------------------------

struct KnowledgeBase {
  std::vector<KnowledgeTemplate> templates;  // canonical order, ids assigned
};

struct ReviewedTemplate {
  KnowledgeTemplate item;
  std::string reason;
};

struct KbBuildResult {
  KnowledgeBase kb;
  std::vector<ReviewedTemplate> review;  // filtered out, kept for inspection
};

// Sort, merge exact repeats (summing support), then apply the quality gates.
// A template fails the support gate below min_support and the association
// gate when it carries a PMI value under min_pmi; templates with no measured
// PMI pass that gate. Allowlisted lexical lines survive the gates.
inline KbBuildResult build_knowledge_base(const std::vector<KnowledgeTemplate>& raw,
                                          long long min_support = 1, double min_pmi = 0.0,
                                          const std::set<std::string>& allowlist = {}) {
  std::vector<KnowledgeTemplate> sorted = raw;
  std::sort(sorted.begin(), sorted.end(), [](const KnowledgeTemplate& a, const KnowledgeTemplate& b) {
    return detail::template_content_key(a) < detail::template_content_key(b);
  });

  std::vector<KnowledgeTemplate> merged;
  for (auto& t : sorted) {
    if (!merged.empty() && detail::same_content(merged.back(), t)) {
      merged.back().support += t.support;
      if (!merged.back().pmi) merged.back().pmi = t.pmi;
    } else {
      merged.push_back(std::move(t));
    }
  }

  KbBuildResult result;
  for (auto& t : merged) {
    std::string reason;
    if (t.support < min_support)
      reason = "support " + std::to_string(t.support) + " below minimum " +
               std::to_string(min_support);
    else if (t.pmi && *t.pmi < min_pmi)
      reason = "pmi " + format_fixed(*t.pmi, 6) + " below minimum " + format_fixed(min_pmi, 6);
    if (!reason.empty() && allowlist.count(render_template(t))) reason.clear();
    if (reason.empty())
      result.kb.templates.push_back(std::move(t));
    else
      result.review.push_back({std::move(t), std::move(reason)});
  }

  for (std::size_t i = 0; i < result.kb.templates.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "t%06zu", i + 1);
    result.kb.templates[i].id = id;
  }
  return result;
}

inline std::vector<const KnowledgeTemplate*> query_templates(const KnowledgeBase& kb,
                                                             const std::string& action,
                                                             const std::string& property) {
  std::vector<const KnowledgeTemplate*> hits;
  for (const auto& t : kb.templates)
    if (t.action == action && t.property == property) hits.push_back(&t);
  return hits;
}

// ---------------------------------------------------------------------------
// Files: the readable base lists each template as its lexical line followed
// by its generalized line; numbers live in a JSON-lines sidecar aligned by
// position (and id).
// ---------------------------------------------------------------------------

inline std::string serialize_knowledge_base(const KnowledgeBase& kb) {
  std::string out;
  for (const auto& t : kb.templates) {
    out += render_template(t);
    out.push_back('\n');
    out += render_generalized(t);
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize_kb_sidecar(const KnowledgeBase& kb) {
  std::string out;
  for (const auto& t : kb.templates) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["support"] = t.support;
    if (t.pmi)
      j["pmi"] = format_fixed(*t.pmi, 6);
    else
      j["pmi"] = nullptr;
    j["holder_role"] = to_string(t.holder_role);
    j["first_arg_role"] = to_string(t.first_role);
    j["second_arg_role"] = to_string(t.second_role);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize_kb_review(const std::vector<ReviewedTemplate>& review) {
  std::string out;
  for (const auto& r : review) {
    out += render_template(r.item);
    out.push_back('\t');
    out += r.reason;
    out.push_back('\n');
  }
  return out;
}

inline std::set<std::string> load_allowlist(std::string_view text) {
  std::set<std::string> allow;
  for (const auto& line : split_lines(text)) {
    if (line.empty() || line[0] == '#') continue;
    allow.insert(line);
  }
  return allow;
}

// Sidecar text may be empty, in which case ids are regenerated by position
// and support defaults to one.
inline KnowledgeBase load_knowledge_base(std::string_view kb_text,
                                         std::string_view sidecar_text = {}) {
  std::vector<std::string> lines;
  for (const auto& line : split_lines(kb_text))
    if (!collapse_whitespace(line).empty()) lines.push_back(line);
  if (lines.size() % 2 != 0)
    throw ParseError("knowledge base must hold an even number of template lines");

  KnowledgeBase kb;
  for (std::size_t i = 0; i < lines.size(); i += 2) {
    KnowledgeTemplate t = parse_template(lines[i], lines[i + 1]);
    char id[32];
    std::snprintf(id, sizeof id, "t%06zu", i / 2 + 1);
    t.id = id;
    kb.templates.push_back(std::move(t));
  }

  if (!collapse_whitespace(std::string(sidecar_text)).empty()) {
    std::vector<std::string> records;
    for (const auto& line : split_lines(sidecar_text))
      if (!collapse_whitespace(line).empty()) records.push_back(line);
    if (records.size() != kb.templates.size())
      throw ParseError("knowledge base sidecar does not match the template count");
    for (std::size_t i = 0; i < records.size(); ++i) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(records[i]);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad sidecar record: ") + e.what());
      }
      kb.templates[i].id = j.at("id").get<std::string>();
      kb.templates[i].support = j.at("support").get<long long>();
      if (!j.at("pmi").is_null()) kb.templates[i].pmi = std::stod(j.at("pmi").get<std::string>());
    }
  }
  return kb;
}

}  // namespace ecc
