// Command-line front end for the conditional-commonsense pipeline.
//
// Exit codes: 0 success, 1 processing failure (bad data, failed stage),
// 2 usage error (unknown flags, missing files).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ecc/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  unsigned threads = 0;  // 0 = take the config's value
};

ecc::PipelineConfig resolve_config(const CommonOpts& opts) {
  ecc::PipelineConfig config;
  if (!opts.config_path.empty())
    config = ecc::load_pipeline_config(ecc::read_text_file(opts.config_path));
  if (opts.threads > 0) config.threads = opts.threads;
  return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_threads = true) {
  cmd->add_option("--config", opts.config_path, "pipeline configuration JSON")
      ->check(CLI::ExistingFile);
  if (with_threads)
    cmd->add_option("--threads", opts.threads, "worker thread count (overrides config)");
}

std::string read_optional(const std::string& path) {
  return path.empty() ? std::string{} : ecc::read_text_file(path);
}

void cmd_ingest(const std::string& input, const std::string& output) {
  auto result = ecc::parse_gigaword_stream(ecc::read_text_file(input));
  std::string out;
  for (const auto& doc : result.documents) {
    nlohmann::ordered_json j;
    j["doc_id"] = doc.doc_id;
    j["paragraphs"] = doc.paragraphs;
    out += j.dump();
    out.push_back('\n');
  }
  ecc::write_text_file(output, out);
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
  std::cout << "documents: " << result.documents.size() << "\n";
  std::cout << "warnings: " << result.warnings.size() << "\n";
}

void cmd_validate(const std::string& input, bool strict, const CommonOpts& opts) {
  auto config = resolve_config(opts);
  auto loaded = ecc::load_annotated(ecc::read_text_file(input), strict, config.threads);
  for (const auto& d : loaded.diagnostics) std::cerr << "rejected: " << d << "\n";
  std::cout << "documents: " << loaded.documents.size() << "\n";
  std::cout << "rejected: " << loaded.diagnostics.size() << "\n";
}

void cmd_stats(const std::string& input) {
  auto loaded = ecc::load_annotated(ecc::read_text_file(input));
  auto stats = ecc::corpus_stats(loaded.documents);
  std::cout << "documents: " << stats.doc_count << "\n";
  std::cout << "sentences: " << stats.sentence_count << "\n";
  std::cout << "avg_sentences_per_document: " << stats.avg_formatted() << "\n";
}

void cmd_extract(const std::string& corpus, const std::string& output, const CommonOpts& opts) {
  auto config = resolve_config(opts);
  auto docs = ecc::load_annotated(ecc::read_text_file(corpus)).documents;
  auto per_doc = ecc::parallel_map(
      docs,
      [&](const ecc::AnnotatedDocument& doc) {
        auto mentions = ecc::extract_event_mentions(doc, config.extraction);
        auto all = ecc::pair_events_by_protagonist(doc, mentions, config.extraction);
        return std::tuple(mentions.size(), all.size(), ecc::filter_two_actor_pairs(all));
      },
      config.threads);
  std::size_t mention_count = 0, candidate_count = 0, kept_count = 0;
  std::string out;
  for (const auto& [mentions, candidates, kept] : per_doc) {
    mention_count += mentions;
    candidate_count += candidates;
    kept_count += kept.size();
    out += ecc::serialize_pairs(kept);
  }
  ecc::write_text_file(output, out);
  std::cout << "event_mentions: " << mention_count << "\n";
  std::cout << "candidate_pairs: " << candidate_count << "\n";
  std::cout << "unordered_pairs: " << kept_count << "\n";
}

void cmd_build_graph(const std::string& pairs_path, const std::string& output,
                     const CommonOpts& opts) {
  auto config = resolve_config(opts);
  auto pairs = ecc::load_pairs(ecc::read_text_file(pairs_path));
  auto table = ecc::count_pairs(pairs);
  auto graph = ecc::build_graph(table, config.min_count);
  ecc::write_text_file(output, ecc::serialize_graph(graph));
  std::cout << "total: " << graph.total << "\n";
  std::cout << "nodes: " << graph.nodes.size() << "\n";
  std::cout << "edges: " << graph.edges.size() << "\n";
  std::cout << "self_skipped: " << graph.self_skipped << "\n";
}

void cmd_train(const std::string& timebank, const std::string& model_dir, const CommonOpts& opts) {
  auto config = resolve_config(opts);
  auto data = ecc::load_timebank(ecc::read_text_file(timebank));
  auto models = ecc::train_temporal_models(data, config.trainer);
  std::filesystem::create_directories(model_dir);
  auto path = [&](const char* name) { return model_dir + "/" + name; };
  ecc::write_text_file(path("tense.nb"), ecc::serialize_naive_bayes(models.tense_model));
  ecc::write_text_file(path("aspect.nb"), ecc::serialize_naive_bayes(models.aspect_model));
  ecc::write_text_file(path("class.nb"), ecc::serialize_naive_bayes(models.class_model));
  if (models.same_sentence_model)
    ecc::write_text_file(path("same_sentence.margin"),
                         ecc::serialize_margin(*models.same_sentence_model));
  if (models.cross_sentence_model)
    ecc::write_text_file(path("cross_sentence.margin"),
                         ecc::serialize_margin(*models.cross_sentence_model));
  std::string diagnostics;
  for (const auto& d : data.diagnostics) diagnostics += "input: " + d + "\n";
  for (const auto& d : models.diagnostics) diagnostics += "training: " + d + "\n";
  ecc::write_text_file(path("diagnostics.txt"), diagnostics);
  for (const auto& d : data.diagnostics) std::cerr << "warning: " << d << "\n";
  for (const auto& d : models.diagnostics) std::cerr << "warning: " << d << "\n";
  std::cout << "attributes: " << data.attributes.size() << "\n";
  std::cout << "relations: " << data.relations.size() << "\n";
}

ecc::TemporalModels load_models(const std::string& model_dir) {
  namespace fs = std::filesystem;
  ecc::TemporalModels models;
  auto path = [&](const char* name) { return model_dir + "/" + name; };
  models.tense_model = ecc::load_naive_bayes(ecc::read_text_file(path("tense.nb")));
  models.aspect_model = ecc::load_naive_bayes(ecc::read_text_file(path("aspect.nb")));
  models.class_model = ecc::load_naive_bayes(ecc::read_text_file(path("class.nb")));
  if (fs::exists(path("same_sentence.margin")))
    models.same_sentence_model = ecc::load_margin(ecc::read_text_file(path("same_sentence.margin")));
  if (fs::exists(path("cross_sentence.margin")))
    models.cross_sentence_model =
        ecc::load_margin(ecc::read_text_file(path("cross_sentence.margin")));
  return models;
}

void cmd_order(const std::string& corpus, const std::string& pairs_path,
               const std::string& model_dir, const std::string& output,
               const std::string& classified_path, const std::string& synsets_path,
               const std::string& prepositions_path, const CommonOpts& opts) {
  auto config = resolve_config(opts);
  auto docs = ecc::load_annotated(ecc::read_text_file(corpus)).documents;
  auto pairs = ecc::load_pairs(ecc::read_text_file(pairs_path));
  auto models = load_models(model_dir);
  auto synsets = ecc::load_synset_lexicon(read_optional(synsets_path));
  std::string prep_text = read_optional(prepositions_path);
  auto prepositions = ecc::collapse_whitespace(prep_text).empty()
                          ? ecc::default_prepositions()
                          : ecc::load_preposition_list(prep_text);
  auto classified = ecc::order_pairs(docs, pairs, models, synsets, prepositions, config.threads);
  if (!classified_path.empty())
    ecc::write_text_file(classified_path, ecc::serialize_classified(classified));
  auto aggregated = ecc::aggregate_corpus_relations(classified);
  ecc::write_text_file(output, ecc::serialize_ordered(aggregated.emitted));
  std::cout << "classified: " << aggregated.total << "\n";
  std::cout << "decided: " << aggregated.total - aggregated.abstained << "\n";
  std::cout << "abstained: " << aggregated.abstained << "\n";
  std::cout << "tie_dropped: " << aggregated.tie_dropped << "\n";
  std::cout << "emitted: " << aggregated.emitted.size() << "\n";
}

void cmd_emit_kb(const std::string& corpus, const std::string& ordered_path,
                 const std::string& graph_path, const std::string& out_dir,
                 const std::string& allowlist_path, const CommonOpts& opts) {
  auto config = resolve_config(opts);
  auto docs = ecc::load_annotated(ecc::read_text_file(corpus)).documents;
  auto ordered = ecc::load_ordered(ecc::read_text_file(ordered_path));
  ecc::PmiGraph graph;
  bool have_graph = !graph_path.empty();
  if (have_graph) graph = ecc::load_graph(ecc::read_text_file(graph_path));
  auto raw = ecc::make_templates(docs, ordered, have_graph ? &graph : nullptr);
  auto built = ecc::build_knowledge_base(raw, config.min_support, config.min_pmi,
                                         ecc::load_allowlist(read_optional(allowlist_path)));
  std::filesystem::create_directories(out_dir);
  ecc::write_text_file(out_dir + "/kb.txt", ecc::serialize_knowledge_base(built.kb));
  ecc::write_text_file(out_dir + "/kb_meta.jsonl", ecc::serialize_kb_sidecar(built.kb));
  ecc::write_text_file(out_dir + "/kb_review.tsv", ecc::serialize_kb_review(built.review));
  std::cout << "templates: " << built.kb.templates.size() << "\n";
  std::cout << "reviewed: " << built.review.size() << "\n";
}

ecc::KnowledgeBase load_kb(const std::string& kb_path, const std::string& meta_path) {
  return ecc::load_knowledge_base(ecc::read_text_file(kb_path), read_optional(meta_path));
}

void cmd_answer(const std::string& kb_path, const std::string& meta_path,
                const std::string& action, const std::string& property,
                const std::string& polarity, const std::vector<std::string>& candidates) {
  if (polarity != "true" && polarity != "false")
    throw ecc::ValidationError("--polarity must be true or false");
  ecc::WscTask task;
  task.task_id = "query";
  ecc::WscAnnotation annotation;
  annotation.action = ecc::ascii_lower(action);
  annotation.property = ecc::ascii_lower(property);
  annotation.polarity = polarity == "true";
  for (int i = 0; i < 2; ++i) {
    std::size_t eq = candidates[i].rfind('=');
    if (eq == std::string::npos)
      throw ecc::ValidationError("candidate must read NAME=SUBJ or NAME=OBJ");
    task.answers[i] = candidates[i].substr(0, eq);
    auto role = ecc::role_from_string(candidates[i].substr(eq + 1));
    if (!role) throw ecc::ValidationError("candidate role must be SUBJ or OBJ");
    annotation.answer_roles[i] = *role;
  }
  if (task.answers[0] == task.answers[1])
    throw ecc::ValidationError("candidates must be distinct");
  if (annotation.answer_roles[0] == annotation.answer_roles[1])
    throw ecc::ValidationError("candidate roles must be distinct");
  task.annotation = annotation;

  auto kb = load_kb(kb_path, meta_path);
  auto resolution = ecc::resolve_task(kb, task);
  if (resolution.chosen) {
    std::cout << "answer: " << task.answers[*resolution.chosen] << "\n";
    std::string matched;
    for (const auto& id : resolution.matched_templates) {
      if (!matched.empty()) matched += ",";
      matched += id;
    }
    std::cout << "matched: " << matched << "\n";
  } else {
    std::cout << "answer: ABSTAIN\n";
  }
}

void cmd_evaluate(const std::string& kb_path, const std::string& meta_path,
                  const std::string& tasks_path, const std::string& details_path) {
  auto kb = load_kb(kb_path, meta_path);
  auto loaded = ecc::load_wsc_tasks(ecc::read_text_file(tasks_path));
  for (const auto& d : loaded.diagnostics) std::cerr << "rejected: " << d << "\n";
  auto report = ecc::evaluate_tasks(kb, loaded.tasks);
  if (!details_path.empty())
    ecc::write_text_file(details_path, ecc::serialize_wsc_details(report));
  std::cout << "tasks: " << loaded.tasks.size() << "\n";
  std::cout << "correct: " << report.correct << "\n";
  std::cout << "wrong: " << report.wrong << "\n";
  std::cout << "abstained: " << report.abstained << "\n";
}

void cmd_run(const std::string& corpus, const std::string& timebank, const std::string& out_dir,
             const std::string& synsets, const std::string& prepositions,
             const std::string& allowlist, const CommonOpts& opts) {
  auto config = resolve_config(opts);
  ecc::PipelineInputs inputs;
  inputs.corpus = ecc::read_text_file(corpus);
  inputs.timebank = ecc::read_text_file(timebank);
  inputs.synsets = read_optional(synsets);
  inputs.prepositions = read_optional(prepositions);
  inputs.allowlist = read_optional(allowlist);
  auto report = ecc::run_pipeline(inputs, config, out_dir);
  std::cout << "documents: " << report.documents << "\n";
  std::cout << "pairs: " << report.two_actor_pairs << "\n";
  std::cout << "templates: " << report.templates << "\n";
  std::cout << "yield: " << report.yield << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional commonsense extraction over annotated narrative corpora"};
  app.require_subcommand(1);

  // ingest
  std::string in_path, out_path;
  auto* ingest = app.add_subcommand("ingest", "convert an SGML stream into raw documents");
  ingest->add_option("--input", in_path, "SGML input file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--output", out_path, "raw document JSON-lines output")->required();
  ingest->callback([&] { cmd_ingest(in_path, out_path); });

  // validate
  std::string val_input;
  bool val_strict = false;
  CommonOpts val_opts;
  auto* validate = app.add_subcommand("validate", "check an annotated corpus");
  validate->add_option("--input", val_input, "annotated corpus JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  validate->add_flag("--strict", val_strict, "fail on the first invalid document");
  add_common(validate, val_opts);
  validate->callback([&] { cmd_validate(val_input, val_strict, val_opts); });

  // stats
  std::string stats_input;
  auto* stats = app.add_subcommand("stats", "corpus size summary");
  stats->add_option("--input", stats_input, "annotated corpus JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  stats->callback([&] { cmd_stats(stats_input); });

  // extract-events
  std::string ex_corpus, ex_output;
  CommonOpts ex_opts;
  auto* extract = app.add_subcommand("extract-events", "extract protagonist-linked event pairs");
  extract->add_option("--corpus", ex_corpus, "annotated corpus JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--output", ex_output, "pairs JSON-lines output")->required();
  add_common(extract, ex_opts);
  extract->callback([&] { cmd_extract(ex_corpus, ex_output, ex_opts); });

  // build-graph
  std::string bg_pairs, bg_output;
  CommonOpts bg_opts;
  auto* build_graph = app.add_subcommand("build-graph", "count pair co-occurrences");
  build_graph->add_option("--pairs", bg_pairs, "pairs JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  build_graph->add_option("--output", bg_output, "graph TSV output")->required();
  add_common(build_graph, bg_opts, /*with_threads=*/false);
  build_graph->callback([&] { cmd_build_graph(bg_pairs, bg_output, bg_opts); });

  // train-temporal
  std::string tr_timebank, tr_model_dir;
  CommonOpts tr_opts;
  auto* train = app.add_subcommand("train-temporal", "train ordering models");
  train->add_option("--timebank", tr_timebank, "training records JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--model-dir", tr_model_dir, "directory for model files")->required();
  add_common(train, tr_opts, /*with_threads=*/false);
  train->callback([&] { cmd_train(tr_timebank, tr_model_dir, tr_opts); });

  // order-events
  std::string or_corpus, or_pairs, or_model_dir, or_output, or_classified, or_synsets, or_preps;
  CommonOpts or_opts;
  auto* order = app.add_subcommand("order-events", "direct pairs and take the corpus vote");
  order->add_option("--corpus", or_corpus, "annotated corpus JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  order->add_option("--pairs", or_pairs, "pairs JSON-lines")->required()->check(CLI::ExistingFile);
  order->add_option("--model-dir", or_model_dir, "trained model directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  order->add_option("--output", or_output, "aggregated ordered pairs output")->required();
  order->add_option("--classified", or_classified, "optional per-pair decisions output");
  order->add_option("--synsets", or_synsets, "lemma->synset TSV")->check(CLI::ExistingFile);
  order->add_option("--prepositions", or_preps, "preposition list")->check(CLI::ExistingFile);
  add_common(order, or_opts);
  order->callback([&] {
    cmd_order(or_corpus, or_pairs, or_model_dir, or_output, or_classified, or_synsets, or_preps,
              or_opts);
  });

  // emit-kb
  std::string kb_corpus, kb_ordered, kb_graph, kb_out_dir, kb_allowlist;
  CommonOpts kb_opts;
  auto* emit = app.add_subcommand("emit-kb", "build the template base");
  emit->add_option("--corpus", kb_corpus, "annotated corpus JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  emit->add_option("--ordered", kb_ordered, "ordered pairs JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  emit->add_option("--graph", kb_graph, "graph TSV for association scores")
      ->check(CLI::ExistingFile);
  emit->add_option("--output-dir", kb_out_dir, "directory for kb files")->required();
  emit->add_option("--allowlist", kb_allowlist, "template lines exempt from quality gates")
      ->check(CLI::ExistingFile);
  add_common(emit, kb_opts, /*with_threads=*/false);
  emit->callback(
      [&] { cmd_emit_kb(kb_corpus, kb_ordered, kb_graph, kb_out_dir, kb_allowlist, kb_opts); });

  // answer
  std::string an_kb, an_meta, an_action, an_property, an_polarity = "true";
  std::vector<std::string> an_candidates;
  auto* answer = app.add_subcommand("answer", "answer one query against a knowledge base");
  answer->add_option("--kb", an_kb, "knowledge base file")->required()->check(CLI::ExistingFile);
  answer->add_option("--meta", an_meta, "knowledge base sidecar")->check(CLI::ExistingFile);
  answer->add_option("--action", an_action, "action lemma")->required();
  answer->add_option("--property", an_property, "property lemma")->required();
  answer->add_option("--polarity", an_polarity, "property polarity (true|false)");
  answer->add_option("--candidate", an_candidates, "candidate as NAME=SUBJ|OBJ (give twice)")
      ->expected(2);
  answer->callback([&] {
    if (an_candidates.size() != 2)
      throw ecc::ValidationError("exactly two --candidate values are required");
    cmd_answer(an_kb, an_meta, an_action, an_property, an_polarity, an_candidates);
  });

  // evaluate
  std::string ev_kb, ev_meta, ev_tasks, ev_details;
  auto* evaluate = app.add_subcommand("evaluate", "score a task file against a knowledge base");
  evaluate->add_option("--kb", ev_kb, "knowledge base file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--meta", ev_meta, "knowledge base sidecar")->check(CLI::ExistingFile);
  evaluate->add_option("--tasks", ev_tasks, "task JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--details", ev_details, "per-task outcome JSON-lines output");
  evaluate->callback([&] { cmd_evaluate(ev_kb, ev_meta, ev_tasks, ev_details); });

  // run
  std::string run_corpus, run_timebank, run_out, run_synsets, run_preps, run_allowlist;
  CommonOpts run_opts;
  auto* run = app.add_subcommand("run", "execute the full pipeline");
  run->add_option("--corpus", run_corpus, "annotated corpus JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--timebank", run_timebank, "training records JSON-lines")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--synsets", run_synsets, "lemma->synset TSV")->check(CLI::ExistingFile);
  run->add_option("--prepositions", run_preps, "preposition list")->check(CLI::ExistingFile);
  run->add_option("--allowlist", run_allowlist, "template lines exempt from quality gates")
      ->check(CLI::ExistingFile);
  add_common(run, run_opts);
  run->callback([&] {
    cmd_run(run_corpus, run_timebank, run_out, run_synsets, run_preps, run_allowlist, run_opts);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
