#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecc/common.hpp"
#include "ecc/corpus.hpp"
#include "ecc/events.hpp"
#include "ecc/parallel.hpp"
#include "ecc/pmi.hpp"

namespace ecc {

// ---------------------------------------------------------------------------
// Label vocabularies
// ---------------------------------------------------------------------------

enum class Tense { Past, Present, Future, None };
enum class Aspect { Progressive, Perfective, PerfectiveProgressive, None };
enum class EventClass { Occurrence, State, Reporting, IAction, IState, Aspectual, Perception };
enum class RelationLabel { Before, After };

inline const std::vector<std::string>& tense_labels() {
  static const std::vector<std::string> labels = {"PAST", "PRESENT", "FUTURE", "NONE"};
  return labels;
}

inline const std::vector<std::string>& aspect_labels() {
  static const std::vector<std::string> labels = {"PROGRESSIVE", "PERFECTIVE",
                                                  "PERFECTIVE_PROGRESSIVE", "NONE"};
  return labels;
}

inline const std::vector<std::string>& event_class_labels() {
  static const std::vector<std::string> labels = {
      "OCCURRENCE", "STATE", "REPORTING", "I_ACTION", "I_STATE", "ASPECTUAL", "PERCEPTION"};
  return labels;
}

inline const char* to_string(RelationLabel label) {
  return label == RelationLabel::Before ? "BEFORE" : "AFTER";
}

inline std::optional<RelationLabel> relation_from_string(std::string_view s) {
  if (s == "BEFORE") return RelationLabel::Before;
  if (s == "AFTER") return RelationLabel::After;
  return std::nullopt;
}

inline RelationLabel opposite(RelationLabel label) {
  return label == RelationLabel::Before ? RelationLabel::After : RelationLabel::Before;
}

// ---------------------------------------------------------------------------
// Attribute features
//
// Tense and aspect cues live in the auxiliary chain directly before the event
// word: modal tokens (POS "MD") and forms of have/be/do tagged as verbs. The
// scan walks backwards and stops at the first token outside that set; the
// nearest hit for each cue wins. Missing cues read "NONE".
// ---------------------------------------------------------------------------

inline const std::string kNoValue = "NONE";

using FeatureVector = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string pos_at(const std::vector<Token>& tokens, int index) {
  if (index < 0 || index >= static_cast<int>(tokens.size())) return kNoValue;
  return tokens[index].pos;
}

struct AuxWindow {
  std::string have_word = kNoValue;
  std::string be_word = kNoValue;
  std::string modal_word = kNoValue;
};

inline AuxWindow scan_aux_window(const std::vector<Token>& tokens, int event_token) {
  AuxWindow window;
  for (int i = event_token - 1; i >= 0; --i) {
    const Token& tok = tokens[i];
    bool modal = tok.pos == "MD";
    bool aux_verb = tok.pos.rfind("VB", 0) == 0 &&
                    (tok.lemma == "have" || tok.lemma == "be" || tok.lemma == "do");
    if (!modal && !aux_verb) break;
    if (modal && window.modal_word == kNoValue) window.modal_word = ascii_lower(tok.surface);
    if (tok.lemma == "have" && window.have_word == kNoValue)
      window.have_word = ascii_lower(tok.surface);
    if (tok.lemma == "be" && window.be_word == kNoValue) window.be_word = ascii_lower(tok.surface);
  }
  return window;
}

}  // namespace detail

inline FeatureVector tense_features(const std::vector<Token>& tokens, int event_token) {
  auto window = detail::scan_aux_window(tokens, event_token);
  return {{"pos_minus_2", detail::pos_at(tokens, event_token - 2)},
          {"pos_minus_1", detail::pos_at(tokens, event_token - 1)},
          {"pos_event", detail::pos_at(tokens, event_token)},
          {"have_word", window.have_word},
          {"be_word", window.be_word}};
}

inline FeatureVector aspect_features(const std::vector<Token>& tokens, int event_token) {
  auto window = detail::scan_aux_window(tokens, event_token);
  return {{"pos_event", detail::pos_at(tokens, event_token)},
          {"modal_word", window.modal_word},
          {"be_word", window.be_word}};
}

inline FeatureVector class_features(const std::string& lemma,
                                    const std::map<std::string, std::string>& synsets) {
  auto it = synsets.find(lemma);
  return {{"synset", it == synsets.end() ? kNoValue : it->second}};
}

// Synset lexicon: "lemma<TAB>synset" per line; blank lines and '#' comments ok.
inline std::map<std::string, std::string> load_synset_lexicon(std::string_view text) {
  std::map<std::string, std::string> synsets;
  for (const auto& line : split_lines(text)) {
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("bad synset line: '" + line + "'");
    synsets[ascii_lower(line.substr(0, tab))] = line.substr(tab + 1);
  }
  return synsets;
}

// ---------------------------------------------------------------------------
// Training data
// ---------------------------------------------------------------------------

struct AttributeInstance {
  std::string doc_id;
  std::vector<Token> tokens;
  int event_token = 0;
  std::string tense;
  std::string aspect;
  std::string event_class;
  std::string synset = kNoValue;
};

struct EventAttributes {
  std::string tense;
  std::string aspect;
  std::string event_class;
};

struct RelationInstance {
  std::string doc_id;
  RelationLabel label = RelationLabel::Before;
  bool same_sentence = false;
  FeatureVector features;
};

struct TimebankData {
  std::vector<AttributeInstance> attributes;
  std::vector<RelationInstance> relations;
  std::vector<std::string> diagnostics;
};

// Fixed key order shared by training and inference.
inline FeatureVector relation_features(const EventAttributes& e1, const EventAttributes& e2,
                                       bool dominance, const std::string& preposition_e1,
                                       const std::string& preposition_e2, bool same_sentence) {
  return {{"e1_tense", e1.tense},
          {"e1_aspect", e1.aspect},
          {"e1_class", e1.event_class},
          {"e2_tense", e2.tense},
          {"e2_aspect", e2.aspect},
          {"e2_class", e2.event_class},
          {"dominance", dominance ? "true" : "false"},
          {"preposition_e1", preposition_e1},
          {"preposition_e2", preposition_e2},
          {"same_sentence", same_sentence ? "true" : "false"}};
}

namespace detail {

inline bool known_label(const std::vector<std::string>& labels, const std::string& value) {
  return std::find(labels.begin(), labels.end(), value) != labels.end();
}

inline std::optional<AttributeInstance> parse_attribute_record(const nlohmann::json& j,
                                                               std::string& error) {
  AttributeInstance inst;
  inst.doc_id = j.at("doc_id").get<std::string>();
  int index = 0;
  for (const auto& tj : j.at("tokens")) {
    Token token;
    token.index = index++;
    token.surface = tj.at("surface").get<std::string>();
    token.lemma = ascii_lower(tj.at("lemma").get<std::string>());
    token.pos = tj.at("pos").get<std::string>();
    inst.tokens.push_back(std::move(token));
  }
  inst.event_token = j.at("event_token").get<int>();
  if (inst.tokens.empty() || inst.event_token < 0 ||
      inst.event_token >= static_cast<int>(inst.tokens.size())) {
    error = "event_token out of range";
    return std::nullopt;
  }
  inst.tense = j.at("tense").get<std::string>();
  inst.aspect = j.at("aspect").get<std::string>();
  inst.event_class = j.at("class").get<std::string>();
  if (j.contains("synset")) inst.synset = j.at("synset").get<std::string>();
  if (!known_label(tense_labels(), inst.tense)) {
    error = "unknown tense '" + inst.tense + "'";
    return std::nullopt;
  }
  if (!known_label(aspect_labels(), inst.aspect)) {
    error = "unknown aspect '" + inst.aspect + "'";
    return std::nullopt;
  }
  if (!known_label(event_class_labels(), inst.event_class)) {
    error = "unknown class '" + inst.event_class + "'";
    return std::nullopt;
  }
  return inst;
}

inline std::optional<RelationInstance> parse_relation_record(const nlohmann::json& j,
                                                             std::string& error) {
  RelationInstance inst;
  inst.doc_id = j.at("doc_id").get<std::string>();
  auto label = relation_from_string(j.at("label").get<std::string>());
  if (!label) {
    error = "unknown relation label";
    return std::nullopt;
  }
  inst.label = *label;
  inst.same_sentence = j.at("same_sentence").get<bool>();
  bool dominance = j.value("dominance", false);
  if (dominance && !inst.same_sentence) {
    error = "dominance requires same_sentence";
    return std::nullopt;
  }
  auto read_side = [&](const char* name, EventAttributes& attrs,
                       std::string& preposition) -> bool {
    const auto& side = j.at(name);
    attrs.tense = side.at("tense").get<std::string>();
    attrs.aspect = side.at("aspect").get<std::string>();
    attrs.event_class = side.at("class").get<std::string>();
    preposition = side.value("preposition", kNoValue);
    if (!known_label(tense_labels(), attrs.tense) || !known_label(aspect_labels(), attrs.aspect) ||
        !known_label(event_class_labels(), attrs.event_class)) {
      error = std::string("bad attribute value in ") + name;
      return false;
    }
    return true;
  };
  EventAttributes e1, e2;
  std::string prep1, prep2;
  if (!read_side("e1", e1, prep1) || !read_side("e2", e2, prep2)) return std::nullopt;
  inst.features = relation_features(e1, e2, dominance, prep1, prep2, inst.same_sentence);
  return inst;
}

}  // namespace detail

// JSON-lines loader; each record is {"type":"attribute",...} or
// {"type":"relation",...}. Bad records are skipped with a diagnostic.
inline TimebankData load_timebank(std::string_view text) {
  TimebankData data;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (collapse_whitespace(lines[i]).empty()) continue;
    std::string where = "line " + std::to_string(i + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      data.diagnostics.push_back(where + ": not valid JSON");
      continue;
    }
    try {
      std::string type = j.at("type").get<std::string>();
      std::string error;
      if (type == "attribute") {
        if (auto inst = detail::parse_attribute_record(j, error))
          data.attributes.push_back(std::move(*inst));
        else
          data.diagnostics.push_back(where + ": " + error);
      } else if (type == "relation") {
        if (auto inst = detail::parse_relation_record(j, error))
          data.relations.push_back(std::move(*inst));
        else
          data.diagnostics.push_back(where + ": " + error);
      } else {
        data.diagnostics.push_back(where + ": unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      data.diagnostics.push_back(where + ": " + e.what());
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Naive Bayes with add-one smoothing
//
// Only labels seen in training exist in the model. Each feature's value space
// is the set of values observed for it plus one slot for anything unseen, so
// unseen values still get nonzero likelihood. Ties go to the earliest label.
// ---------------------------------------------------------------------------

struct LabeledInstance {
  FeatureVector features;
  std::string label;
};

struct NaiveBayesModel {
  std::vector<std::string> labels;       // stored order fixes tie-breaking
  std::vector<long long> label_counts;   // parallel to labels
  // feature name -> value -> per-label counts
  std::map<std::string, std::map<std::string, std::vector<long long>>> feature_counts;
  long long total = 0;
};

// label_order supplies the tie-break ranking; labels never observed are
// dropped from the model entirely.
inline NaiveBayesModel train_naive_bayes(const std::vector<LabeledInstance>& instances,
                                         const std::vector<std::string>& label_order) {
  if (instances.empty()) throw TrainingError("naive bayes: no training instances");
  std::set<std::string> seen;
  for (const auto& inst : instances) {
    if (!detail::known_label(label_order, inst.label))
      throw TrainingError("naive bayes: label '" + inst.label + "' not in label order");
    seen.insert(inst.label);
  }

  NaiveBayesModel model;
  for (const auto& label : label_order)
    if (seen.count(label)) model.labels.push_back(label);
  model.label_counts.assign(model.labels.size(), 0);

  auto label_index = [&](const std::string& label) {
    return static_cast<std::size_t>(
        std::find(model.labels.begin(), model.labels.end(), label) - model.labels.begin());
  };
  for (const auto& inst : instances) {
    std::size_t l = label_index(inst.label);
    ++model.label_counts[l];
    ++model.total;
    for (const auto& [name, value] : inst.features) {
      auto& per_label = model.feature_counts[name][value];
      if (per_label.empty()) per_label.assign(model.labels.size(), 0);
      ++per_label[l];
    }
  }
  return model;
}

// Normalized posterior per stored label. Feature names the model never saw
// contribute nothing; unseen values fall into the extra smoothing slot.
inline std::vector<double> nb_posteriors(const NaiveBayesModel& model,
                                         const FeatureVector& features) {
  std::size_t label_count = model.labels.size();
  std::vector<double> log_post(label_count);
  for (std::size_t l = 0; l < label_count; ++l) {
    log_post[l] = std::log(static_cast<double>(model.label_counts[l] + 1) /
                           static_cast<double>(model.total + label_count));
  }
  for (const auto& [name, value] : features) {
    auto fit = model.feature_counts.find(name);
    if (fit == model.feature_counts.end()) continue;
    double value_space = static_cast<double>(fit->second.size() + 1);
    auto vit = fit->second.find(value);
    for (std::size_t l = 0; l < label_count; ++l) {
      long long count = vit == fit->second.end() ? 0 : vit->second[l];
      log_post[l] += std::log(static_cast<double>(count + 1) /
                              (static_cast<double>(model.label_counts[l]) + value_space));
    }
  }
  double peak = *std::max_element(log_post.begin(), log_post.end());
  std::vector<double> posterior(label_count);
  double sum = 0.0;
  for (std::size_t l = 0; l < label_count; ++l) {
    posterior[l] = std::exp(log_post[l] - peak);
    sum += posterior[l];
  }
  for (auto& p : posterior) p /= sum;
  return posterior;
}

inline std::string nb_predict(const NaiveBayesModel& model, const FeatureVector& features) {
  auto posterior = nb_posteriors(model, features);
  std::size_t best = 0;
  for (std::size_t l = 1; l < posterior.size(); ++l)
    if (posterior[l] > posterior[best]) best = l;
  return model.labels[best];
}

// File layout, tab separated:
//   label   <index> <name> <count>
//   feature <name> <value> <label index> <count>
// Feature rows are sorted by (name, value, label index); zero counts omitted.
inline std::string serialize_naive_bayes(const NaiveBayesModel& model) {
  std::string out;
  for (std::size_t l = 0; l < model.labels.size(); ++l) {
    out += "label\t" + std::to_string(l) + "\t" + model.labels[l] + "\t" +
           std::to_string(model.label_counts[l]) + "\n";
  }
  for (const auto& [name, values] : model.feature_counts) {
    for (const auto& [value, per_label] : values) {
      for (std::size_t l = 0; l < per_label.size(); ++l) {
        if (per_label[l] == 0) continue;
        out += "feature\t" + name + "\t" + value + "\t" + std::to_string(l) + "\t" +
               std::to_string(per_label[l]) + "\n";
      }
    }
  }
  return out;
}

inline NaiveBayesModel load_naive_bayes(std::string_view text) {
  NaiveBayesModel model;
  std::vector<std::tuple<std::string, std::string, std::size_t, long long>> features;
  for (const auto& line : split_lines(text)) {
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields[0] == "label" && fields.size() == 4) {
      std::size_t index = static_cast<std::size_t>(std::stoull(fields[1]));
      if (index != model.labels.size())
        throw ParseError("bad model file: label indices out of order");
      model.labels.push_back(fields[2]);
      model.label_counts.push_back(std::stoll(fields[3]));
      model.total += model.label_counts.back();
    } else if (fields[0] == "feature" && fields.size() == 5) {
      features.emplace_back(fields[1], fields[2], std::stoull(fields[3]), std::stoll(fields[4]));
    } else {
      throw ParseError("bad model file: unrecognized line '" + std::string(line) + "'");
    }
  }
  if (model.labels.empty()) throw ParseError("bad model file: no labels");
  for (const auto& [name, value, index, count] : features) {
    if (index >= model.labels.size()) throw ParseError("bad model file: label index out of range");
    auto& per_label = model.feature_counts[name][value];
    if (per_label.empty()) per_label.assign(model.labels.size(), 0);
    per_label[index] = count;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Margin classifier
//
// Linear scorer over indicator features keyed "name=value". Positive class is
// BEFORE; a score of exactly zero also reads BEFORE. Training is plain hinge
// subgradient descent with L2 shrinking on a canonically sorted instance list,
// so rerunning on the same data reproduces the model bit for bit.
// ---------------------------------------------------------------------------

struct TrainerParams {
  double learning_rate = 0.1;
  double lambda = 1e-4;
  int epochs = 200;
};

struct MarginClassifier {
  std::map<std::string, double> weights;
  double bias = 0.0;
  TrainerParams params;
  int epochs_run = 0;
};

inline std::string feature_key(const std::string& name, const std::string& value) {
  return name + "=" + value;
}

inline double margin_score(const MarginClassifier& model, const FeatureVector& features) {
  double score = model.bias;
  for (const auto& [name, value] : features) {
    auto it = model.weights.find(feature_key(name, value));
    if (it != model.weights.end()) score += it->second;
  }
  return score;
}

inline RelationLabel margin_decide(const MarginClassifier& model, const FeatureVector& features) {
  return margin_score(model, features) < 0.0 ? RelationLabel::After : RelationLabel::Before;
}

inline MarginClassifier train_margin_classifier(const std::vector<LabeledInstance>& instances,
                                                const TrainerParams& params = {}) {
  if (instances.empty()) throw TrainingError("margin classifier: no training instances");

  // Canonical order removes any dependence on how callers collected the pool.
  std::vector<const LabeledInstance*> order;
  order.reserve(instances.size());
  for (const auto& inst : instances) order.push_back(&inst);
  auto canonical = [](const LabeledInstance& inst) {
    std::string key = inst.label;
    for (const auto& [name, value] : inst.features) key += "\t" + feature_key(name, value);
    return key;
  };
  std::sort(order.begin(), order.end(), [&](const LabeledInstance* a, const LabeledInstance* b) {
    return canonical(*a) < canonical(*b);
  });

  MarginClassifier model;
  model.params = params;
  double shrink = 1.0 - params.learning_rate * params.lambda;
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    for (const LabeledInstance* inst : order) {
      double y = inst->label == "BEFORE" ? 1.0 : -1.0;
      double score = margin_score(model, inst->features);
      for (auto& [key, weight] : model.weights) weight *= shrink;
      if (y * score < 1.0) {
        for (const auto& [name, value] : inst->features)
          model.weights[feature_key(name, value)] += params.learning_rate * y;
        model.bias += params.learning_rate * y;
      }
    }
    model.epochs_run = epoch;
    bool all_correct = true;
    for (const LabeledInstance* inst : order) {
      RelationLabel want = inst->label == "BEFORE" ? RelationLabel::Before : RelationLabel::After;
      if (margin_decide(model, inst->features) != want) {
        all_correct = false;
        break;
      }
    }
    if (all_correct) break;
  }
  return model;
}

// File layout, tab separated; reals carry nine decimals:
//   param  learning_rate|lambda|epochs|epochs_run  <value>
//   bias   <value>
//   weight <key> <value>
inline std::string serialize_margin(const MarginClassifier& model) {
  std::string out;
  out += "param\tlearning_rate\t" + format_fixed(model.params.learning_rate, 9) + "\n";
  out += "param\tlambda\t" + format_fixed(model.params.lambda, 9) + "\n";
  out += "param\tepochs\t" + std::to_string(model.params.epochs) + "\n";
  out += "param\tepochs_run\t" + std::to_string(model.epochs_run) + "\n";
  out += "bias\t" + format_fixed(model.bias, 9) + "\n";
  for (const auto& [key, weight] : model.weights)
    out += "weight\t" + key + "\t" + format_fixed(weight, 9) + "\n";
  return out;
}

inline MarginClassifier load_margin(std::string_view text) {
  MarginClassifier model;
  bool saw_bias = false;
  for (const auto& line : split_lines(text)) {
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields[0] == "param" && fields.size() == 3) {
      if (fields[1] == "learning_rate")
        model.params.learning_rate = std::stod(fields[2]);
      else if (fields[1] == "lambda")
        model.params.lambda = std::stod(fields[2]);
      else if (fields[1] == "epochs")
        model.params.epochs = std::stoi(fields[2]);
      else if (fields[1] == "epochs_run")
        model.epochs_run = std::stoi(fields[2]);
      else
        throw ParseError("bad model file: unknown param '" + fields[1] + "'");
    } else if (fields[0] == "bias" && fields.size() == 2) {
      model.bias = std::stod(fields[1]);
      saw_bias = true;
    } else if (fields[0] == "weight" && fields.size() == 3) {
      model.weights[fields[1]] = std::stod(fields[2]);
    } else {
      throw ParseError("bad model file: unrecognized line '" + std::string(line) + "'");
    }
  }
  if (!saw_bias) throw ParseError("bad model file: missing bias line");
  return model;
}

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

struct TemporalModels {
  NaiveBayesModel tense_model;
  NaiveBayesModel aspect_model;
  NaiveBayesModel class_model;
  // Missing pools disable the corresponding classifier; pairs routed to a
  // disabled classifier come back undecided.
  std::optional<MarginClassifier> same_sentence_model;
  std::optional<MarginClassifier> cross_sentence_model;
  std::vector<std::string> diagnostics;
};

inline TemporalModels train_temporal_models(const TimebankData& data,
                                            const TrainerParams& params = {}) {
  if (data.attributes.empty())
    throw TrainingError("temporal training: no attribute instances");

  TemporalModels models;
  std::vector<LabeledInstance> tense_pool, aspect_pool, class_pool;
  for (const auto& inst : data.attributes) {
    tense_pool.push_back({tense_features(inst.tokens, inst.event_token), inst.tense});
    aspect_pool.push_back({aspect_features(inst.tokens, inst.event_token), inst.aspect});
    class_pool.push_back(
        {{{"synset", inst.synset}}, inst.event_class});
  }
  models.tense_model = train_naive_bayes(tense_pool, tense_labels());
  models.aspect_model = train_naive_bayes(aspect_pool, aspect_labels());
  models.class_model = train_naive_bayes(class_pool, event_class_labels());

  std::vector<LabeledInstance> same_pool, cross_pool;
  for (const auto& inst : data.relations) {
    LabeledInstance labeled{inst.features, to_string(inst.label)};
    (inst.same_sentence ? same_pool : cross_pool).push_back(std::move(labeled));
  }
  auto train_pool = [&](const std::vector<LabeledInstance>& pool, const char* name)
      -> std::optional<MarginClassifier> {
    if (pool.empty()) {
      models.diagnostics.push_back(std::string("no ") + name +
                                   " relation instances; that classifier is disabled");
      return std::nullopt;
    }
    std::set<std::string> labels;
    for (const auto& inst : pool) labels.insert(inst.label);
    if (labels.size() == 1) {
      models.diagnostics.push_back(std::string(name) + " pool carries a single label " +
                                   *labels.begin());
    }
    return train_margin_classifier(pool, params);
  };
  models.same_sentence_model = train_pool(same_pool, "same-sentence");
  models.cross_sentence_model = train_pool(cross_pool, "cross-sentence");
  return models;
}

// ---------------------------------------------------------------------------
// Applying the models to corpus event pairs
// ---------------------------------------------------------------------------

inline const std::set<std::string>& default_prepositions() {
  static const std::set<std::string> preps = {
      "about", "above",   "across", "after",  "against", "along",  "among",
      "around", "at",      "before", "behind", "below",   "beneath", "beside",
      "between", "beyond", "by",     "down",   "during",  "for",     "from",
      "in",     "inside",  "into",   "near",   "of",      "off",     "on",
      "over",   "through", "to",     "under",  "up",      "with"};
  return preps;
}

inline std::set<std::string> load_preposition_list(std::string_view text) {
  std::set<std::string> preps;
  for (const auto& line : split_lines(text)) {
    std::string word = collapse_whitespace(line);
    if (word.empty() || word[0] == '#') continue;
    preps.insert(ascii_lower(word));
  }
  return preps;
}

namespace detail {

// True when target is in the dependency subtree under source.
inline bool dominates(const Sentence& sentence, int source, int target) {
  std::vector<int> stack = {source};
  std::set<int> visited;
  while (!stack.empty()) {
    int current = stack.back();
    stack.pop_back();
    if (!visited.insert(current).second) continue;
    for (const auto& arc : sentence.arcs) {
      if (arc.head != current) continue;
      if (arc.dependent == target) return true;
      stack.push_back(arc.dependent);
    }
  }
  return false;
}

// First collapsed preposition relation touching the verb, by dependent order.
inline std::string preposition_of(const Sentence& sentence, int verb_token,
                                  const std::set<std::string>& prepositions) {
  std::vector<const DependencyArc*> incident;
  for (const auto& arc : sentence.arcs)
    if (arc.head == verb_token || arc.dependent == verb_token) incident.push_back(&arc);
  std::sort(incident.begin(), incident.end(),
            [](const DependencyArc* a, const DependencyArc* b) {
              return a->dependent < b->dependent;
            });
  for (const DependencyArc* arc : incident) {
    if (arc->relation.rfind("prep_", 0) != 0) continue;
    std::string suffix = arc->relation.substr(5);
    if (prepositions.count(suffix)) return suffix;
  }
  return kNoValue;
}

}  // namespace detail

inline EventAttributes predict_attributes(const TemporalModels& models,
                                          const std::vector<Token>& tokens, int event_token,
                                          const std::map<std::string, std::string>& synsets) {
  EventAttributes attrs;
  attrs.tense = nb_predict(models.tense_model, tense_features(tokens, event_token));
  attrs.aspect = nb_predict(models.aspect_model, aspect_features(tokens, event_token));
  attrs.event_class =
      nb_predict(models.class_model, class_features(tokens[event_token].lemma, synsets));
  return attrs;
}

struct ClassifiedPair {
  UnorderedEventPair pair;
  std::optional<RelationLabel> relation;  // empty = classifier undecided

  bool operator==(const ClassifiedPair&) const = default;
};

// Stage-two features for a corpus pair, with stage-one attribute predictions
// filled in from the trained models.
inline FeatureVector pair_features(const TemporalModels& models, const AnnotatedDocument& doc,
                                   const UnorderedEventPair& pair,
                                   const std::map<std::string, std::string>& synsets,
                                   const std::set<std::string>& prepositions) {
  const Sentence& s1 = doc.sentences.at(pair.first.sentence_index);
  const Sentence& s2 = doc.sentences.at(pair.second.sentence_index);
  EventAttributes e1 = predict_attributes(models, s1.tokens, pair.first.verb_token, synsets);
  EventAttributes e2 = predict_attributes(models, s2.tokens, pair.second.verb_token, synsets);
  bool same_sentence = pair.first.sentence_index == pair.second.sentence_index;
  bool dominance =
      same_sentence && detail::dominates(s1, pair.first.verb_token, pair.second.verb_token);
  std::string prep1 = detail::preposition_of(s1, pair.first.verb_token, prepositions);
  std::string prep2 = detail::preposition_of(s2, pair.second.verb_token, prepositions);
  return relation_features(e1, e2, dominance, prep1, prep2, same_sentence);
}

inline std::optional<RelationLabel> classify_pair(const TemporalModels& models,
                                                  const AnnotatedDocument& doc,
                                                  const UnorderedEventPair& pair,
                                                  const std::map<std::string, std::string>& synsets,
                                                  const std::set<std::string>& prepositions) {
  bool same_sentence = pair.first.sentence_index == pair.second.sentence_index;
  const auto& model = same_sentence ? models.same_sentence_model : models.cross_sentence_model;
  if (!model) return std::nullopt;
  return margin_decide(*model, pair_features(models, doc, pair, synsets, prepositions));
}

inline std::vector<ClassifiedPair> order_pairs(
    const std::vector<AnnotatedDocument>& documents, const std::vector<UnorderedEventPair>& pairs,
    const TemporalModels& models, const std::map<std::string, std::string>& synsets,
    const std::set<std::string>& prepositions, unsigned threads = 1) {
  std::map<std::string, const AnnotatedDocument*> by_id;
  for (const auto& doc : documents) by_id.emplace(doc.doc_id, &doc);
  return parallel_map(
      pairs,
      [&](const UnorderedEventPair& pair) {
        auto it = by_id.find(pair.doc_id);
        if (it == by_id.end())
          throw StageError("order-events", "pair references unknown document '" + pair.doc_id + "'");
        return ClassifiedPair{pair, classify_pair(models, *it->second, pair, synsets, prepositions)};
      },
      threads);
}

// ---------------------------------------------------------------------------
// Corpus-level aggregation
//
// All classified pairs over the same unordered node pair vote on a single
// direction. Votes are normalized to the canonical key orientation before
// counting; a strict majority re-labels every instance in the group to agree
// with it. Tied groups, and groups whose two nodes coincide, are dropped.
// ---------------------------------------------------------------------------

struct OrderedEventPair {
  UnorderedEventPair pair;
  RelationLabel relation = RelationLabel::Before;

  bool operator==(const OrderedEventPair&) const = default;
};

struct AggregationResult {
  std::vector<OrderedEventPair> emitted;  // input order preserved
  long long tie_dropped = 0;
  long long abstained = 0;
  long long total = 0;
};

inline AggregationResult aggregate_corpus_relations(const std::vector<ClassifiedPair>& pairs) {
  AggregationResult result;
  result.total = static_cast<long long>(pairs.size());

  struct GroupVotes {
    long long before = 0;
    long long after = 0;
  };
  std::map<std::pair<VerbDepKey, VerbDepKey>, GroupVotes> groups;
  for (const auto& cp : pairs) {
    if (!cp.relation) continue;
    VerbDepKey a = first_key(cp.pair);
    VerbDepKey b = second_key(cp.pair);
    if (a == b) continue;  // handled below as tie_dropped
    auto key = canonical_pair(a, b);
    // A flipped instance's BEFORE means canonical-second precedes
    // canonical-first, so its vote counts for the opposite direction.
    RelationLabel vote = (key.first == a) ? *cp.relation : opposite(*cp.relation);
    auto& votes = groups[key];
    (vote == RelationLabel::Before ? votes.before : votes.after) += 1;
  }

  for (const auto& cp : pairs) {
    if (!cp.relation) {
      ++result.abstained;
      continue;
    }
    VerbDepKey a = first_key(cp.pair);
    VerbDepKey b = second_key(cp.pair);
    if (a == b) {
      ++result.tie_dropped;
      continue;
    }
    auto key = canonical_pair(a, b);
    const GroupVotes& votes = groups.at(key);
    if (votes.before == votes.after) {
      ++result.tie_dropped;
      continue;
    }
    RelationLabel majority =
        votes.before > votes.after ? RelationLabel::Before : RelationLabel::After;
    // Translate the canonical-orientation majority back into this instance's
    // own first/second orientation.
    RelationLabel label = (key.first == a) ? majority : opposite(majority);
    result.emitted.push_back({cp.pair, label});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Classified/ordered pair files: the pairs-file record plus a "relation"
// field holding BEFORE, AFTER, or null for an undecided pair.
// ---------------------------------------------------------------------------

inline std::string serialize_classified(const std::vector<ClassifiedPair>& pairs) {
  std::string out;
  for (const auto& cp : pairs) {
    nlohmann::ordered_json j;
    j["doc_id"] = cp.pair.doc_id;
    j["protagonist"] = cp.pair.protagonist;
    j["role_in_first"] = to_string(cp.pair.role_in_first);
    j["role_in_second"] = to_string(cp.pair.role_in_second);
    j["first"] = detail::triple_to_json(cp.pair.first);
    j["second"] = detail::triple_to_json(cp.pair.second);
    if (cp.relation)
      j["relation"] = to_string(*cp.relation);
    else
      j["relation"] = nullptr;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<ClassifiedPair> load_classified(std::string_view text) {
  std::vector<ClassifiedPair> result;
  for (const auto& line : split_lines(text)) {
    if (collapse_whitespace(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      ClassifiedPair cp;
      cp.pair.doc_id = j.at("doc_id").get<std::string>();
      cp.pair.protagonist = j.at("protagonist").get<std::string>();
      auto r1 = role_from_string(j.at("role_in_first").get<std::string>());
      auto r2 = role_from_string(j.at("role_in_second").get<std::string>());
      if (!r1 || !r2) throw ParseError("bad classified record: unknown role label");
      cp.pair.role_in_first = *r1;
      cp.pair.role_in_second = *r2;
      cp.pair.first = detail::triple_from_json(j.at("first"));
      cp.pair.second = detail::triple_from_json(j.at("second"));
      if (!j.at("relation").is_null()) {
        auto rel = relation_from_string(j.at("relation").get<std::string>());
        if (!rel) throw ParseError("bad classified record: unknown relation label");
        cp.relation = *rel;
      }
      result.push_back(std::move(cp));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad classified record: ") + e.what());
    }
  }
  return result;
}

inline std::string serialize_ordered(const std::vector<OrderedEventPair>& pairs) {
  std::vector<ClassifiedPair> classified;
  classified.reserve(pairs.size());
  for (const auto& op : pairs) classified.push_back({op.pair, op.relation});
  return serialize_classified(classified);
}

inline std::vector<OrderedEventPair> load_ordered(std::string_view text) {
  std::vector<OrderedEventPair> result;
  for (auto& cp : load_classified(text)) {
    if (!cp.relation) throw ParseError("bad ordered record: relation missing");
    result.push_back({std::move(cp.pair), *cp.relation});
  }
  return result;
}

}  // namespace ecc
