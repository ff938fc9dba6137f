#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecc/common.hpp"
#include "ecc/corpus.hpp"
#include "ecc/events.hpp"
#include "ecc/knowledge.hpp"
#include "ecc/pmi.hpp"
#include "ecc/temporal.hpp"
#include "ecc/wsc.hpp"

namespace ecc {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
  long long min_count = 2;    // co-occurrence floor for graph edges
  long long min_support = 1;  // support floor for kept templates
  double min_pmi = 0.0;       // association floor for templates with a PMI
  unsigned threads = 1;
  TrainerParams trainer;
  ExtractionConfig extraction;
};

namespace detail {

inline void check_known_keys(const nlohmann::json& j, const std::set<std::string>& known,
                             const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ValidationError("unknown " + where + " key '" + key + "'");
}

inline std::set<std::string> string_set(const nlohmann::json& j) {
  std::set<std::string> values;
  for (const auto& v : j) values.insert(v.get<std::string>());
  return values;
}

}  // namespace detail

inline PipelineConfig load_pipeline_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad pipeline config: ") + e.what());
  }
  detail::check_known_keys(
      j,
      {"min_count", "min_support", "min_pmi", "threads", "trainer", "max_sentence_gap",
       "verb_pos_prefix", "adjective_pos_prefix", "subject_labels", "object_labels",
       "extra_labels", "aux_stoplist", "copula_relations", "aux_relations"},
      "pipeline config");

  PipelineConfig config;
  if (j.contains("min_count")) config.min_count = j.at("min_count").get<long long>();
  if (j.contains("min_support")) config.min_support = j.at("min_support").get<long long>();
  if (j.contains("min_pmi")) config.min_pmi = j.at("min_pmi").get<double>();
  if (j.contains("threads")) config.threads = j.at("threads").get<unsigned>();
  if (j.contains("trainer")) {
    const auto& t = j.at("trainer");
    detail::check_known_keys(t, {"learning_rate", "lambda", "epochs"}, "trainer");
    if (t.contains("learning_rate"))
      config.trainer.learning_rate = t.at("learning_rate").get<double>();
    if (t.contains("lambda")) config.trainer.lambda = t.at("lambda").get<double>();
    if (t.contains("epochs")) config.trainer.epochs = t.at("epochs").get<int>();
  }
  if (j.contains("max_sentence_gap") && !j.at("max_sentence_gap").is_null())
    config.extraction.max_sentence_gap = j.at("max_sentence_gap").get<int>();
  if (j.contains("verb_pos_prefix"))
    config.extraction.verb_pos_prefix = j.at("verb_pos_prefix").get<std::string>();
  if (j.contains("adjective_pos_prefix"))
    config.extraction.adjective_pos_prefix = j.at("adjective_pos_prefix").get<std::string>();
  if (j.contains("subject_labels"))
    config.extraction.subject_labels = detail::string_set(j.at("subject_labels"));
  if (j.contains("object_labels"))
    config.extraction.object_labels = detail::string_set(j.at("object_labels"));
  if (j.contains("aux_stoplist"))
    config.extraction.aux_stoplist = detail::string_set(j.at("aux_stoplist"));
  if (j.contains("copula_relations"))
    config.extraction.copula_relations = detail::string_set(j.at("copula_relations"));
  if (j.contains("aux_relations"))
    config.extraction.aux_relations = detail::string_set(j.at("aux_relations"));
  if (j.contains("extra_labels")) {
    for (const auto& [relation, role] : j.at("extra_labels").items()) {
      auto parsed = role_from_string(role.get<std::string>());
      if (!parsed) throw ValidationError("extra_labels role must be SUBJ or OBJ");
      config.extraction.extra_labels[relation] = *parsed;
    }
  }
  if (config.threads == 0) throw ValidationError("threads must be at least 1");
  if (config.min_count < 1) throw ValidationError("min_count must be at least 1");
  return config;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Run report: the deterministic numbers a run produces. Timing goes to a
// separate log so report bytes are reproducible.
// ---------------------------------------------------------------------------

struct RunReport {
  long long documents = 0;
  long long rejected_documents = 0;
  long long sentences = 0;
  std::string avg_sentences = "n/a";
  long long event_mentions = 0;
  long long pairs = 0;
  long long two_actor_pairs = 0;
  long long graph_total = 0;
  long long graph_nodes = 0;
  long long graph_edges = 0;
  long long self_skipped = 0;
  long long classified = 0;
  long long decided = 0;
  long long abstained = 0;
  long long tie_dropped = 0;
  long long emitted = 0;
  long long templates = 0;
  long long reviewed = 0;
  std::string yield = "n/a";
};

// Percent of extracted pairs that survived into the final base, one decimal,
// halves rounded up.
inline std::string report_yield(long long templates, long long pairs) {
  if (pairs <= 0) return "n/a";
  return format_scaled(scaled_round_half_up(100 * templates, pairs, 1), 1);
}

inline std::string serialize_report(const RunReport& report) {
  nlohmann::ordered_json j;
  j["documents"] = report.documents;
  j["rejected_documents"] = report.rejected_documents;
  j["sentences"] = report.sentences;
  j["avg_sentences"] = report.avg_sentences;
  j["event_mentions"] = report.event_mentions;
  j["pairs"] = report.pairs;
  j["two_actor_pairs"] = report.two_actor_pairs;
  j["graph_total"] = report.graph_total;
  j["graph_nodes"] = report.graph_nodes;
  j["graph_edges"] = report.graph_edges;
  j["self_skipped"] = report.self_skipped;
  j["classified"] = report.classified;
  j["decided"] = report.decided;
  j["abstained"] = report.abstained;
  j["tie_dropped"] = report.tie_dropped;
  j["emitted"] = report.emitted;
  j["templates"] = report.templates;
  j["reviewed"] = report.reviewed;
  j["yield"] = report.yield;
  return j.dump(2) + "\n";
}

inline RunReport load_report(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunReport report;
  report.documents = j.at("documents").get<long long>();
  report.rejected_documents = j.at("rejected_documents").get<long long>();
  report.sentences = j.at("sentences").get<long long>();
  report.avg_sentences = j.at("avg_sentences").get<std::string>();
  report.event_mentions = j.at("event_mentions").get<long long>();
  report.pairs = j.at("pairs").get<long long>();
  report.two_actor_pairs = j.at("two_actor_pairs").get<long long>();
  report.graph_total = j.at("graph_total").get<long long>();
  report.graph_nodes = j.at("graph_nodes").get<long long>();
  report.graph_edges = j.at("graph_edges").get<long long>();
  report.self_skipped = j.at("self_skipped").get<long long>();
  report.classified = j.at("classified").get<long long>();
  report.decided = j.at("decided").get<long long>();
  report.abstained = j.at("abstained").get<long long>();
  report.tie_dropped = j.at("tie_dropped").get<long long>();
  report.emitted = j.at("emitted").get<long long>();
  report.templates = j.at("templates").get<long long>();
  report.reviewed = j.at("reviewed").get<long long>();
  report.yield = j.at("yield").get<std::string>();
  return report;
}

// ---------------------------------------------------------------------------
// The batch run. Stages hand data to each other only through files in the
// output directory, so each one can be rerun or inspected in isolation:
//
//   validate        corpus.jsonl, validate_diagnostics.txt
//   extract-events  pairs.jsonl
//   build-graph     graph.tsv
//   train-temporal  models/{tense,aspect,class}.nb,
//                   models/{same,cross}_sentence.margin, models/diagnostics.txt
//   order-events    classified.jsonl, ordered.jsonl
//   emit-kb         kb.txt, kb_meta.jsonl, kb_review.tsv
//   report          report.json
//
// A stage failure writes a FAILED marker naming the stage and rethrows.
// timings.log is the only output that varies between runs.
// ---------------------------------------------------------------------------

struct PipelineInputs {
  std::string corpus;        // annotated corpus, JSON lines
  std::string timebank;      // training records, JSON lines
  std::string synsets;       // lemma->synset lexicon, may be empty
  std::string prepositions;  // one word per line, empty = built-in list
  std::string allowlist;     // lexical template lines exempt from the gates
};

inline RunReport run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/models");

  RunReport report;
  std::string timings;
  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  auto stage = [&](const std::string& name, auto&& body) {
    auto start = std::chrono::steady_clock::now();
    auto record = [&] {
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count();
      timings += name + "\t" + std::to_string(ms) + "ms\n";
    };
    try {
      body();
      record();
    } catch (const StageError& e) {
      record();
      write_text_file(path("FAILED"), e.stage() + "\t" + e.what() + std::string("\n"));
      write_text_file(path("timings.log"), timings);
      throw;
    } catch (const std::exception& e) {
      record();
      write_text_file(path("FAILED"), name + "\t" + e.what() + std::string("\n"));
      write_text_file(path("timings.log"), timings);
      throw StageError(name, e.what());
    }
  };

  stage("validate", [&] {
    auto loaded = load_annotated(inputs.corpus, /*strict=*/false, config.threads);
    if (loaded.documents.empty()) throw ValidationError("no valid documents in corpus");
    report.documents = static_cast<long long>(loaded.documents.size());
    report.rejected_documents = static_cast<long long>(loaded.diagnostics.size());
    CorpusStats stats = corpus_stats(loaded.documents);
    report.sentences = stats.sentence_count;
    report.avg_sentences = stats.avg_formatted();
    write_text_file(path("corpus.jsonl"), serialize_annotated(loaded.documents));
    std::string diagnostics;
    for (const auto& d : loaded.diagnostics) diagnostics += d + "\n";
    write_text_file(path("validate_diagnostics.txt"), diagnostics);
  });

  stage("extract-events", [&] {
    auto docs = load_annotated(read_text_file(path("corpus.jsonl")), /*strict=*/true).documents;
    auto per_doc = parallel_map(
        docs,
        [&](const AnnotatedDocument& doc) {
          auto mentions = extract_event_mentions(doc, config.extraction);
          auto all = pair_events_by_protagonist(doc, mentions, config.extraction);
          auto kept = filter_two_actor_pairs(all);
          return std::tuple(mentions.size(), all.size(), kept);
        },
        config.threads);
    std::string out;
    for (const auto& [mentions, all, kept] : per_doc) {
      report.event_mentions += static_cast<long long>(mentions);
      report.pairs += static_cast<long long>(all);
      report.two_actor_pairs += static_cast<long long>(kept.size());
      out += serialize_pairs(kept);
    }
    write_text_file(path("pairs.jsonl"), out);
  });

  stage("build-graph", [&] {
    auto pairs = load_pairs(read_text_file(path("pairs.jsonl")));
    auto table = count_pairs(pairs);
    auto graph = build_graph(table, config.min_count);
    report.graph_total = graph.total;
    report.graph_nodes = static_cast<long long>(graph.nodes.size());
    report.graph_edges = static_cast<long long>(graph.edges.size());
    report.self_skipped = graph.self_skipped;
    write_text_file(path("graph.tsv"), serialize_graph(graph));
  });

  stage("train-temporal", [&] {
    auto data = load_timebank(inputs.timebank);
    auto models = train_temporal_models(data, config.trainer);
    write_text_file(path("models/tense.nb"), serialize_naive_bayes(models.tense_model));
    write_text_file(path("models/aspect.nb"), serialize_naive_bayes(models.aspect_model));
    write_text_file(path("models/class.nb"), serialize_naive_bayes(models.class_model));
    if (models.same_sentence_model)
      write_text_file(path("models/same_sentence.margin"),
                      serialize_margin(*models.same_sentence_model));
    if (models.cross_sentence_model)
      write_text_file(path("models/cross_sentence.margin"),
                      serialize_margin(*models.cross_sentence_model));
    std::string diagnostics;
    for (const auto& d : data.diagnostics) diagnostics += "input: " + d + "\n";
    for (const auto& d : models.diagnostics) diagnostics += "training: " + d + "\n";
    write_text_file(path("models/diagnostics.txt"), diagnostics);
  });

  stage("order-events", [&] {
    auto docs = load_annotated(read_text_file(path("corpus.jsonl")), /*strict=*/true).documents;
    auto pairs = load_pairs(read_text_file(path("pairs.jsonl")));
    TemporalModels models;
    models.tense_model = load_naive_bayes(read_text_file(path("models/tense.nb")));
    models.aspect_model = load_naive_bayes(read_text_file(path("models/aspect.nb")));
    models.class_model = load_naive_bayes(read_text_file(path("models/class.nb")));
    if (std::filesystem::exists(path("models/same_sentence.margin")))
      models.same_sentence_model =
          load_margin(read_text_file(path("models/same_sentence.margin")));
    if (std::filesystem::exists(path("models/cross_sentence.margin")))
      models.cross_sentence_model =
          load_margin(read_text_file(path("models/cross_sentence.margin")));
    auto synsets = load_synset_lexicon(inputs.synsets);
    auto prepositions = collapse_whitespace(inputs.prepositions).empty()
                            ? default_prepositions()
                            : load_preposition_list(inputs.prepositions);
    auto classified = order_pairs(docs, pairs, models, synsets, prepositions, config.threads);
    write_text_file(path("classified.jsonl"), serialize_classified(classified));

    auto aggregated = aggregate_corpus_relations(classified);
    report.classified = aggregated.total;
    report.abstained = aggregated.abstained;
    report.decided = aggregated.total - aggregated.abstained;
    report.tie_dropped = aggregated.tie_dropped;
    report.emitted = static_cast<long long>(aggregated.emitted.size());
    write_text_file(path("ordered.jsonl"), serialize_ordered(aggregated.emitted));
  });

  stage("emit-kb", [&] {
    auto docs = load_annotated(read_text_file(path("corpus.jsonl")), /*strict=*/true).documents;
    auto ordered = load_ordered(read_text_file(path("ordered.jsonl")));
    auto graph = load_graph(read_text_file(path("graph.tsv")));
    auto raw = make_templates(docs, ordered, &graph);
    auto built = build_knowledge_base(raw, config.min_support, config.min_pmi,
                                      load_allowlist(inputs.allowlist));
    report.templates = static_cast<long long>(built.kb.templates.size());
    report.reviewed = static_cast<long long>(built.review.size());
    write_text_file(path("kb.txt"), serialize_knowledge_base(built.kb));
    write_text_file(path("kb_meta.jsonl"), serialize_kb_sidecar(built.kb));
    write_text_file(path("kb_review.tsv"), serialize_kb_review(built.review));
  });

  stage("report", [&] {
    report.yield = report_yield(report.templates, report.two_actor_pairs);
    write_text_file(path("report.json"), serialize_report(report));
  });

  write_text_file(path("timings.log"), timings);
  return report;
}

}  // namespace ecc
