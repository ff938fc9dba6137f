#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecc/common.hpp"
#include "ecc/corpus.hpp"
#include "ecc/parallel.hpp"

namespace ecc {

// Knobs for event-head and argument detection. Defaults follow the plain
// nsubj/dobj reading; extra_labels can map further relations onto a slot
// (e.g. {"nsubjpass", Role::Subj}).
struct ExtractionConfig {
  std::string verb_pos_prefix = "VB";
  // Predicate adjectives with a copula dependent act as event heads; this is
  // what lets "X was sick" contribute an event with property word "sick".
  std::string adjective_pos_prefix = "JJ";
  std::set<std::string> copula_relations = {"cop"};
  std::set<std::string> subject_labels = {"nsubj"};
  std::set<std::string> object_labels = {"dobj"};
  std::map<std::string, Role> extra_labels;
  // Auxiliary uses of these lemmas never head an event.
  std::set<std::string> aux_stoplist = {"be", "have", "do"};
  std::set<std::string> aux_relations = {"aux", "auxpass", "cop"};
  std::optional<int> max_sentence_gap;  // absent = unlimited within a document
};

struct EventMentionRecord {
  std::string doc_id;
  int sentence_index = 0;
  int verb_token = 0;
  std::string verb_lemma;
  std::optional<std::string> subject_entity;
  std::optional<std::string> object_entity;
  std::string subject_surface;  // lemma of the subject head token, "" if none
  std::string object_surface;
  std::optional<int> subject_token;
  std::optional<int> object_token;

  bool operator==(const EventMentionRecord&) const = default;
};

struct EventTriple {
  std::string subject;  // may be empty until the two-actor filter runs
  std::string verb;
  std::string object;
  int sentence_index = 0;
  int verb_token = 0;
  std::optional<int> subject_token;
  std::optional<int> object_token;

  bool operator==(const EventTriple&) const = default;
};

struct UnorderedEventPair {
  EventTriple first;   // earlier event in document order
  EventTriple second;  // later event
  std::string protagonist;  // entity id of the shared participant
  Role role_in_first = Role::Subj;
  Role role_in_second = Role::Subj;
  std::string doc_id;

  bool operator==(const UnorderedEventPair&) const = default;
};

namespace detail {

inline bool is_aux_use(const Sentence& sentence, int token, const ExtractionConfig& config) {
  const std::string& lemma = sentence.tokens[token].lemma;
  if (!config.aux_stoplist.count(lemma)) return false;
  for (const auto& arc : sentence.arcs) {
    if (arc.dependent == token && config.aux_relations.count(arc.relation)) return true;
  }
  return false;
}

inline bool is_event_head(const Sentence& sentence, int token, const ExtractionConfig& config) {
  const std::string& pos = sentence.tokens[token].pos;
  if (pos.rfind(config.verb_pos_prefix, 0) == 0)
    return !is_aux_use(sentence, token, config);
  if (pos.rfind(config.adjective_pos_prefix, 0) == 0) {
    for (const auto& arc : sentence.arcs) {
      if (arc.head == token && config.copula_relations.count(arc.relation)) return true;
    }
  }
  return false;
}

inline std::optional<Role> slot_for_relation(const std::string& relation,
                                             const ExtractionConfig& config) {
  if (config.subject_labels.count(relation)) return Role::Subj;
  if (config.object_labels.count(relation)) return Role::Obj;
  auto it = config.extra_labels.find(relation);
  if (it != config.extra_labels.end()) return it->second;
  return std::nullopt;
}

}  // namespace detail

// One record per event head whose subject or object is the head token of a
// coreference mention. Arguments outside every chain keep their head lemma but
// carry no entity. Argument-to-mention matching is strict: the arc dependent
// must equal the mention's head token.
inline std::vector<EventMentionRecord> extract_event_mentions(
    const AnnotatedDocument& doc, const ExtractionConfig& config = {}) {
  // (sentence, head token) -> entity id; first chain in document order wins.
  std::map<std::pair<int, int>, std::string> mention_heads;
  for (const auto& chain : doc.chains) {
    for (const auto& m : chain.mentions) {
      mention_heads.emplace(std::make_pair(m.sentence_index, m.head_token), chain.entity_id);
    }
  }

  std::vector<EventMentionRecord> records;
  for (int s = 0; s < static_cast<int>(doc.sentences.size()); ++s) {
    const Sentence& sentence = doc.sentences[s];
    for (int t = 0; t < static_cast<int>(sentence.tokens.size()); ++t) {
      if (!detail::is_event_head(sentence, t, config)) continue;

      EventMentionRecord record;
      record.doc_id = doc.doc_id;
      record.sentence_index = s;
      record.verb_token = t;
      record.verb_lemma = sentence.tokens[t].lemma;

      // First matching arc per slot in dependent token order.
      std::vector<const DependencyArc*> sorted;
      for (const auto& arc : sentence.arcs)
        if (arc.head == t) sorted.push_back(&arc);
      std::sort(sorted.begin(), sorted.end(),
                [](const DependencyArc* a, const DependencyArc* b) {
                  return a->dependent < b->dependent;
                });
      for (const DependencyArc* arc : sorted) {
        auto slot = detail::slot_for_relation(arc->relation, config);
        if (!slot) continue;
        auto entity = mention_heads.find({s, arc->dependent});
        if (*slot == Role::Subj && record.subject_surface.empty()) {
          record.subject_surface = sentence.tokens[arc->dependent].lemma;
          record.subject_token = arc->dependent;
          if (entity != mention_heads.end()) record.subject_entity = entity->second;
        } else if (*slot == Role::Obj && record.object_surface.empty()) {
          record.object_surface = sentence.tokens[arc->dependent].lemma;
          record.object_token = arc->dependent;
          if (entity != mention_heads.end()) record.object_entity = entity->second;
        }
      }
      if (record.subject_entity || record.object_entity) records.push_back(std::move(record));
    }
  }
  return records;
}

inline EventTriple triple_from_record(const EventMentionRecord& r) {
  EventTriple t;
  t.subject = r.subject_surface;
  t.verb = r.verb_lemma;
  t.object = r.object_surface;
  t.sentence_index = r.sentence_index;
  t.verb_token = r.verb_token;
  t.subject_token = r.subject_token;
  t.object_token = r.object_token;
  return t;
}

// Every unordered pair of distinct event mentions sharing a chain yields one
// pair per (event pair, protagonist) combination. The earlier event is always
// stored first; output is sorted by (first position, second position, entity),
// so discovery order never shows through.
inline std::vector<UnorderedEventPair> pair_events_by_protagonist(
    const AnnotatedDocument& doc, const std::vector<EventMentionRecord>& mentions,
    const ExtractionConfig& config = {}) {
  std::vector<const EventMentionRecord*> ordered;
  for (const auto& m : mentions) ordered.push_back(&m);
  std::sort(ordered.begin(), ordered.end(),
            [](const EventMentionRecord* a, const EventMentionRecord* b) {
              return std::pair(a->sentence_index, a->verb_token) <
                     std::pair(b->sentence_index, b->verb_token);
            });

  // Subject match takes precedence when an entity fills both slots.
  auto role_of = [](const EventMentionRecord& r, const std::string& entity) -> std::optional<Role> {
    if (r.subject_entity == entity) return Role::Subj;
    if (r.object_entity == entity) return Role::Obj;
    return std::nullopt;
  };

  std::vector<UnorderedEventPair> pairs;
  for (const auto& chain : doc.chains) {
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      auto role_i = role_of(*ordered[i], chain.entity_id);
      if (!role_i) continue;
      for (std::size_t j = i + 1; j < ordered.size(); ++j) {
        auto role_j = role_of(*ordered[j], chain.entity_id);
        if (!role_j) continue;
        if (config.max_sentence_gap &&
            ordered[j]->sentence_index - ordered[i]->sentence_index > *config.max_sentence_gap)
          continue;
        UnorderedEventPair pair;
        pair.first = triple_from_record(*ordered[i]);
        pair.second = triple_from_record(*ordered[j]);
        pair.protagonist = chain.entity_id;
        pair.role_in_first = *role_i;
        pair.role_in_second = *role_j;
        pair.doc_id = doc.doc_id;
        pairs.push_back(std::move(pair));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const UnorderedEventPair& a, const UnorderedEventPair& b) {
    auto key = [](const UnorderedEventPair& p) {
      return std::tuple(p.first.sentence_index, p.first.verb_token, p.second.sentence_index,
                        p.second.verb_token, p.protagonist);
    };
    return key(a) < key(b);
  });
  return pairs;
}

// Keeps only pairs in which both triples name two distinct actors.
inline std::vector<UnorderedEventPair> filter_two_actor_pairs(
    const std::vector<UnorderedEventPair>& pairs) {
  std::vector<UnorderedEventPair> kept;
  for (const auto& pair : pairs) {
    auto two_actor = [](const EventTriple& t) {
      return !t.subject.empty() && !t.object.empty() && t.subject != t.object;
    };
    if (two_actor(pair.first) && two_actor(pair.second)) kept.push_back(pair);
  }
  return kept;
}

// Full per-document extraction: mentions, pairing, two-actor filter.
inline std::vector<UnorderedEventPair> extract_document_pairs(const AnnotatedDocument& doc,
                                                              const ExtractionConfig& config = {}) {
  return filter_two_actor_pairs(
      pair_events_by_protagonist(doc, extract_event_mentions(doc, config), config));
}

// ---------------------------------------------------------------------------
// Pairs file: one JSON record per line mirroring UnorderedEventPair.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json triple_to_json(const EventTriple& t) {
  nlohmann::ordered_json j;
  j["subject"] = t.subject;
  j["verb"] = t.verb;
  j["object"] = t.object;
  j["sentence"] = t.sentence_index;
  j["token"] = t.verb_token;
  if (t.subject_token) j["subject_token"] = *t.subject_token;
  if (t.object_token) j["object_token"] = *t.object_token;
  return j;
}

inline EventTriple triple_from_json(const nlohmann::json& j) {
  EventTriple t;
  t.subject = j.value("subject", std::string{});
  t.verb = j.at("verb").get<std::string>();
  t.object = j.value("object", std::string{});
  t.sentence_index = j.at("sentence").get<int>();
  t.verb_token = j.at("token").get<int>();
  if (j.contains("subject_token")) t.subject_token = j.at("subject_token").get<int>();
  if (j.contains("object_token")) t.object_token = j.at("object_token").get<int>();
  return t;
}

}  // namespace detail

inline std::string serialize_pairs(const std::vector<UnorderedEventPair>& pairs) {
  std::string out;
  for (const auto& pair : pairs) {
    nlohmann::ordered_json j;
    j["doc_id"] = pair.doc_id;
    j["protagonist"] = pair.protagonist;
    j["role_in_first"] = to_string(pair.role_in_first);
    j["role_in_second"] = to_string(pair.role_in_second);
    j["first"] = detail::triple_to_json(pair.first);
    j["second"] = detail::triple_to_json(pair.second);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<UnorderedEventPair> load_pairs(std::string_view text) {
  std::vector<UnorderedEventPair> pairs;
  for (const auto& line : split_lines(text)) {
    if (collapse_whitespace(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      UnorderedEventPair pair;
      pair.doc_id = j.at("doc_id").get<std::string>();
      pair.protagonist = j.at("protagonist").get<std::string>();
      auto r1 = role_from_string(j.at("role_in_first").get<std::string>());
      auto r2 = role_from_string(j.at("role_in_second").get<std::string>());
      if (!r1 || !r2) throw ParseError("bad pair record: unknown role label");
      pair.role_in_first = *r1;
      pair.role_in_second = *r2;
      pair.first = detail::triple_from_json(j.at("first"));
      pair.second = detail::triple_from_json(j.at("second"));
      pairs.push_back(std::move(pair));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad pair record: ") + e.what());
    }
  }
  return pairs;
}

}  // namespace ecc
