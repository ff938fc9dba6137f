#include <gtest/gtest.h>

#include "ecc/ecc.hpp"
#include "oracles.hpp"

using namespace ecc;

namespace {

KnowledgeBase fixture_kb() {
  return load_knowledge_base(oracle::read_fixture("wsc_kb/kb.txt"),
                             oracle::read_fixture("wsc_kb/kb_meta.jsonl"));
}

const WscTask& task_by_id(const std::vector<WscTask>& tasks, const std::string& id) {
  for (const auto& task : tasks)
    if (task.task_id == id) return task;
  throw std::runtime_error("no such task: " + id);
}

}  // namespace

TEST(WscLoad, FixtureTasksParseCleanly) {
  auto loaded = load_wsc_tasks(oracle::read_fixture("wsc_tasks.jsonl"));
  EXPECT_TRUE(loaded.diagnostics.empty());
  ASSERT_EQ(loaded.tasks.size(), 10u);

  const auto& w01 = task_by_id(loaded.tasks, "w01");
  EXPECT_EQ(w01.answers[0], "Jim");
  EXPECT_EQ(w01.answers[1], "Kevin");
  EXPECT_EQ(w01.correct, 0);
  ASSERT_TRUE(w01.annotation.has_value());
  EXPECT_EQ(w01.annotation->action, "yell");
  EXPECT_EQ(w01.annotation->property, "upset");
  EXPECT_TRUE(w01.annotation->polarity);
  EXPECT_EQ(w01.annotation->answer_roles[0], Role::Subj);
  EXPECT_EQ(w01.annotation->answer_roles[1], Role::Obj);

  EXPECT_FALSE(task_by_id(loaded.tasks, "w08").annotation.has_value());
  EXPECT_FALSE(task_by_id(loaded.tasks, "w06").annotation->polarity);
  EXPECT_EQ(task_by_id(loaded.tasks, "w03").correct, 1);
}

TEST(WscLoad, BadRecordsProduceLineDiagnostics) {
  std::string text =
      "{oops\n"
      R"({"task_id":"a","sentence":"s","pronoun":"p","answers":["x","y","z"],"correct":0})"
      "\n"
      R"({"task_id":"b","sentence":"s","pronoun":"p","answers":["x","x"],"correct":0})"
      "\n"
      R"({"task_id":"c","sentence":"s","pronoun":"p","answers":["x","y"],"correct":2})"
      "\n"
      R"({"task_id":"d","pronoun":"p","answers":["x","y"],"correct":0})"
      "\n"
      R"({"task_id":"e","sentence":"s","pronoun":"p","answers":["x","y"],"correct":0,)"
      R"("annotation":{"action":"go","property":"tired","answer_roles":["SUBJ","SUBJ"]}})"
      "\n"
      R"({"task_id":"f","sentence":"s","pronoun":"p","answers":["x","y"],"correct":0,)"
      R"("annotation":{"action":"go","property":"tired","answer_roles":["SUBJ","LEFT"]}})"
      "\n"
      R"({"task_id":"g","sentence":"s","pronoun":"p","answers":["x","y"],"correct":0,)"
      R"("annotation":{"action":"","property":"tired","answer_roles":["SUBJ","OBJ"]}})"
      "\n";
  auto loaded = load_wsc_tasks(text);
  EXPECT_TRUE(loaded.tasks.empty());
  ASSERT_EQ(loaded.diagnostics.size(), 8u);
  EXPECT_NE(loaded.diagnostics[0].find("line 1: not valid JSON"), std::string::npos);
  EXPECT_NE(loaded.diagnostics[1].find("answers must hold exactly two entries"),
            std::string::npos);
  EXPECT_NE(loaded.diagnostics[2].find("answers must be distinct"), std::string::npos);
  EXPECT_NE(loaded.diagnostics[3].find("correct must be 0 or 1"), std::string::npos);
  EXPECT_NE(loaded.diagnostics[4].find("line 5"), std::string::npos);  // missing sentence
  EXPECT_NE(loaded.diagnostics[5].find("answer roles must be distinct"), std::string::npos);
  EXPECT_NE(loaded.diagnostics[6].find("unknown role label"), std::string::npos);
  EXPECT_NE(loaded.diagnostics[7].find("annotation action and property are required"),
            std::string::npos);
}

TEST(WscResolve, SupportWeightedMajorityPicksTheHolderRole) {
  auto kb = fixture_kb();
  auto tasks = load_wsc_tasks(oracle::read_fixture("wsc_tasks.jsonl")).tasks;

  auto r = resolve_task(kb, task_by_id(tasks, "w01"));
  EXPECT_EQ(r.outcome, Outcome::Correct);
  ASSERT_TRUE(r.chosen.has_value());
  EXPECT_EQ(*r.chosen, 0);  // Jim: subject votes 3 beat object votes 1
  EXPECT_EQ(r.matched_templates, std::vector<std::string>{"t000001"});
}

TEST(WscResolve, PolarityMustMatchTheAnnotation) {
  auto kb = fixture_kb();
  auto tasks = load_wsc_tasks(oracle::read_fixture("wsc_tasks.jsonl")).tasks;

  auto decided = resolve_task(kb, task_by_id(tasks, "w06"));
  EXPECT_EQ(decided.outcome, Outcome::Correct);
  EXPECT_EQ(decided.matched_templates, std::vector<std::string>{"t000007"});

  // Same query with positive polarity finds no usable template.
  auto abstained = resolve_task(kb, task_by_id(tasks, "w09"));
  EXPECT_EQ(abstained.outcome, Outcome::Abstain);
  EXPECT_FALSE(abstained.chosen.has_value());
  EXPECT_TRUE(abstained.matched_templates.empty());
}

TEST(WscResolve, TiedVotesAndMissingAnnotationsAbstain) {
  auto kb = fixture_kb();
  auto tasks = load_wsc_tasks(oracle::read_fixture("wsc_tasks.jsonl")).tasks;

  EXPECT_EQ(resolve_task(kb, task_by_id(tasks, "w10")).outcome, Outcome::Abstain);  // 1-1 tie
  EXPECT_EQ(resolve_task(kb, task_by_id(tasks, "w07")).outcome, Outcome::Abstain);  // no hits
  EXPECT_EQ(resolve_task(kb, task_by_id(tasks, "w08")).outcome, Outcome::Abstain);  // no annotation
}

TEST(WscResolve, WrongAnswerIsReportedAsWrong) {
  auto kb = fixture_kb();
  WscTask task;
  task.task_id = "flip";
  task.sentence = "s";
  task.pronoun = "p";
  task.answers[0] = "Jim";
  task.answers[1] = "Kevin";
  task.correct = 1;  // claim Kevin although the evidence favors Jim
  WscAnnotation annotation;
  annotation.action = "yell";
  annotation.property = "upset";
  annotation.answer_roles[0] = Role::Subj;
  annotation.answer_roles[1] = Role::Obj;
  task.annotation = annotation;

  auto r = resolve_task(kb, task);
  EXPECT_EQ(r.outcome, Outcome::Wrong);
  ASSERT_TRUE(r.chosen.has_value());
  EXPECT_EQ(*r.chosen, 0);
}

TEST(WscEvaluate, FixtureScoresSixCorrectFourAbstained) {
  auto kb = fixture_kb();
  auto tasks = load_wsc_tasks(oracle::read_fixture("wsc_tasks.jsonl")).tasks;
  auto report = evaluate_tasks(kb, tasks);
  EXPECT_EQ(report.correct, 6);
  EXPECT_EQ(report.wrong, 0);
  EXPECT_EQ(report.abstained, 4);
  ASSERT_EQ(report.details.size(), 10u);

  for (const auto& detail : report.details) {
    bool decided = detail.outcome != Outcome::Abstain;
    EXPECT_EQ(detail.chosen_answer.has_value(), decided) << detail.task_id;
    EXPECT_EQ(!detail.matched_templates.empty(), decided) << detail.task_id;
  }
  EXPECT_EQ(report.details[0].task_id, "w01");
  ASSERT_TRUE(report.details[0].chosen_answer.has_value());
  EXPECT_EQ(*report.details[0].chosen_answer, "Jim");
}

TEST(WscEvaluate, DetailLinesSerializeAsJson) {
  auto kb = fixture_kb();
  auto tasks = load_wsc_tasks(oracle::read_fixture("wsc_tasks.jsonl")).tasks;
  auto report = evaluate_tasks(kb, tasks);
  std::string text = serialize_wsc_details(report);

  auto lines = split_lines(text);
  std::size_t nonempty = 0;
  for (const auto& line : lines)
    if (!line.empty()) ++nonempty;
  EXPECT_EQ(nonempty, 10u);
  EXPECT_NE(text.find("{\"task_id\":\"w01\",\"outcome\":\"CORRECT\",\"chosen\":\"Jim\","
                      "\"matched_templates\":[\"t000001\"]}"),
            std::string::npos)
      << text;
  EXPECT_NE(text.find("{\"task_id\":\"w08\",\"outcome\":\"ABSTAIN\",\"chosen\":null,"
                      "\"matched_templates\":[]}"),
            std::string::npos)
      << text;
}
