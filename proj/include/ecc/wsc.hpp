#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecc/common.hpp"
#include "ecc/knowledge.hpp"

namespace ecc {

// Hand annotation connecting a task to the knowledge base's vocabulary: the
// action event the candidates participate in, the conditional property the
// pronoun's clause asserts, and the role each candidate fills in the action.
struct WscAnnotation {
  std::string action;
  std::string property;
  bool polarity = true;
  Role answer_roles[2] = {Role::Subj, Role::Obj};
};

struct WscTask {
  std::string task_id;
  std::string sentence;
  std::string pronoun;
  std::string answers[2];
  int correct = 0;  // index of the right answer
  std::optional<WscAnnotation> annotation;  // absent = cannot be resolved
  std::optional<std::string> note;
};

struct WscLoadResult {
  std::vector<WscTask> tasks;
  std::vector<std::string> diagnostics;
};

inline WscLoadResult load_wsc_tasks(std::string_view text) {
  WscLoadResult result;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (collapse_whitespace(lines[i]).empty()) continue;
    std::string where = "line " + std::to_string(i + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception&) {
      result.diagnostics.push_back(where + ": not valid JSON");
      continue;
    }
    try {
      WscTask task;
      task.task_id = j.at("task_id").get<std::string>();
      task.sentence = j.at("sentence").get<std::string>();
      task.pronoun = j.at("pronoun").get<std::string>();
      const auto& answers = j.at("answers");
      if (!answers.is_array() || answers.size() != 2) {
        result.diagnostics.push_back(where + ": answers must hold exactly two entries");
        continue;
      }
      task.answers[0] = answers[0].get<std::string>();
      task.answers[1] = answers[1].get<std::string>();
      if (task.answers[0] == task.answers[1]) {
        result.diagnostics.push_back(where + ": answers must be distinct");
        continue;
      }
      task.correct = j.at("correct").get<int>();
      if (task.correct != 0 && task.correct != 1) {
        result.diagnostics.push_back(where + ": correct must be 0 or 1");
        continue;
      }
      if (j.contains("note")) task.note = j.at("note").get<std::string>();
      if (j.contains("annotation") && !j.at("annotation").is_null()) {
        const auto& a = j.at("annotation");
        WscAnnotation annotation;
        annotation.action = ascii_lower(a.at("action").get<std::string>());
        annotation.property = ascii_lower(a.at("property").get<std::string>());
        annotation.polarity = a.value("polarity", true);
        const auto& roles = a.at("answer_roles");
        if (!roles.is_array() || roles.size() != 2) {
          result.diagnostics.push_back(where + ": answer_roles must hold exactly two entries");
          continue;
        }
        auto r0 = role_from_string(roles[0].get<std::string>());
        auto r1 = role_from_string(roles[1].get<std::string>());
        if (!r0 || !r1) {
          result.diagnostics.push_back(where + ": unknown role label");
          continue;
        }
        if (*r0 == *r1) {
          result.diagnostics.push_back(where + ": answer roles must be distinct");
          continue;
        }
        if (annotation.action.empty() || annotation.property.empty()) {
          result.diagnostics.push_back(where + ": annotation action and property are required");
          continue;
        }
        annotation.answer_roles[0] = *r0;
        annotation.answer_roles[1] = *r1;
        task.annotation = annotation;
      }
      result.tasks.push_back(std::move(task));
    } catch (const nlohmann::json::exception& e) {
      result.diagnostics.push_back(where + ": " + e.what());
    }
  }
  return result;
}

enum class Outcome { Correct, Wrong, Abstain };

inline const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Correct: return "CORRECT";
    case Outcome::Wrong: return "WRONG";
    default: return "ABSTAIN";
  }
}

struct Resolution {
  Outcome outcome = Outcome::Abstain;
  std::optional<int> chosen;  // answer index when decided
  std::vector<std::string> matched_templates;  // ids; non-empty exactly when decided
};

// Templates matching the annotated (action, property, polarity) vote for the
// role their holder fills, weighted by support. A strict majority between the
// two candidates' roles picks the answer; anything less abstains.
inline Resolution resolve_task(const KnowledgeBase& kb, const WscTask& task) {
  Resolution resolution;
  if (!task.annotation) return resolution;
  const WscAnnotation& a = *task.annotation;

  long long votes[2] = {0, 0};
  std::vector<const KnowledgeTemplate*> hits;
  for (const KnowledgeTemplate* t : query_templates(kb, a.action, a.property)) {
    if (t->polarity != a.polarity) continue;
    hits.push_back(t);
    for (int i = 0; i < 2; ++i)
      if (t->holder_role == a.answer_roles[i]) votes[i] += t->support;
  }
  if (votes[0] == votes[1]) return resolution;

  int chosen = votes[0] > votes[1] ? 0 : 1;
  resolution.chosen = chosen;
  resolution.outcome = chosen == task.correct ? Outcome::Correct : Outcome::Wrong;
  for (const KnowledgeTemplate* t : hits)
    if (t->holder_role == a.answer_roles[chosen]) resolution.matched_templates.push_back(t->id);
  return resolution;
}

struct TaskResult {
  std::string task_id;
  Outcome outcome = Outcome::Abstain;
  std::optional<std::string> chosen_answer;
  std::vector<std::string> matched_templates;
};

struct WscReport {
  long long correct = 0;
  long long wrong = 0;
  long long abstained = 0;
  std::vector<TaskResult> details;
};

inline WscReport evaluate_tasks(const KnowledgeBase& kb, const std::vector<WscTask>& tasks) {
  WscReport report;
  for (const auto& task : tasks) {
    Resolution resolution = resolve_task(kb, task);
    TaskResult detail;
    detail.task_id = task.task_id;
    detail.outcome = resolution.outcome;
    if (resolution.chosen) detail.chosen_answer = task.answers[*resolution.chosen];
    detail.matched_templates = resolution.matched_templates;
    switch (resolution.outcome) {
      case Outcome::Correct: ++report.correct; break;
      case Outcome::Wrong: ++report.wrong; break;
      case Outcome::Abstain: ++report.abstained; break;
    }
    report.details.push_back(std::move(detail));
  }
  return report;
}

inline std::string serialize_wsc_details(const WscReport& report) {
  std::string out;
  for (const auto& detail : report.details) {
    nlohmann::ordered_json j;
    j["task_id"] = detail.task_id;
    j["outcome"] = to_string(detail.outcome);
    if (detail.chosen_answer)
      j["chosen"] = *detail.chosen_answer;
    else
      j["chosen"] = nullptr;
    j["matched_templates"] = detail.matched_templates;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace ecc
