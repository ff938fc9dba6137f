#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "ecc/ecc.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("ecc_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  fs::path out_file = scratch_dir() / "stdout.txt";
  fs::path err_file = scratch_dir() / "stderr.txt";
  std::string command = std::string("\"") + ECC_CLI_PATH + "\" " + args + " > \"" +
                        out_file.string() + "\" 2> \"" + err_file.string() + "\"";
  int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = ecc::read_text_file(out_file.string());
  result.err = ecc::read_text_file(err_file.string());
  return result;
}

std::string fx(const std::string& name) {
  return "\"" + oracle::fixture_path(name) + "\"";
}

std::string write_scratch(const std::string& name, std::string_view content) {
  fs::path p = scratch_dir() / name;
  ecc::write_text_file(p.string(), std::string(content));
  return p.string();
}

}  // namespace

TEST(Cli, NoSubcommandIsAUsageError) {
  auto r = run_cli("");
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, HelpExitsCleanly) {
  auto r = run_cli("--help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("ingest"), std::string::npos);
  EXPECT_NE(r.out.find("evaluate"), std::string::npos);
}

TEST(Cli, MissingInputFileIsAUsageError) {
  auto r = run_cli("stats --input /nonexistent/corpus.jsonl");
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, BadDataIsAProcessingFailure) {
  std::string bad = write_scratch("bad.jsonl", "this is not JSON\n");
  auto r = run_cli("validate --input \"" + bad + "\" --strict");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, IngestConvertsTheSgmlStream) {
  std::string out = (scratch_dir() / "raw.jsonl").string();
  auto r = run_cli("ingest --input " + fx("gigaword_sample.sgml") + " --output \"" + out + "\"");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "documents: 3\nwarnings: 1\n");
  EXPECT_NE(r.err.find("warning:"), std::string::npos);

  auto lines = ecc::split_lines(ecc::read_text_file(out));
  std::size_t records = 0;
  for (const auto& line : lines)
    if (!line.empty()) ++records;
  EXPECT_EQ(records, 3u);
}

TEST(Cli, ValidateCountsCleanDocuments) {
  auto r = run_cli("validate --input " + fx("annotated_fixture.jsonl"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "documents: 5\nrejected: 0\n");

  auto mixed = run_cli("validate --input " + fx("annotated_mixed.jsonl"));
  EXPECT_EQ(mixed.exit_code, 0);
  EXPECT_EQ(mixed.out, "documents: 1\nrejected: 2\n");
  EXPECT_NE(mixed.err.find("rejected:"), std::string::npos);
}

TEST(Cli, StatsSummarizesTheCorpus) {
  auto r = run_cli("stats --input " + fx("annotated_fixture.jsonl"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "documents: 5\nsentences: 14\navg_sentences_per_document: 2.80\n");
}

TEST(Cli, StepwiseCommandsChainIntoTheSameBase) {
  std::string config = " --config " + fx("config/pipeline.json");
  std::string pairs = (scratch_dir() / "pairs.jsonl").string();
  std::string graph = (scratch_dir() / "graph.tsv").string();
  std::string models = (scratch_dir() / "models").string();
  std::string ordered = (scratch_dir() / "ordered.jsonl").string();
  std::string kb_dir = (scratch_dir() / "kb").string();

  auto extract = run_cli("extract-events --corpus " + fx("annotated_fixture.jsonl") +
                         " --output \"" + pairs + "\"" + config);
  EXPECT_EQ(extract.exit_code, 0);
  EXPECT_EQ(extract.out, "event_mentions: 13\ncandidate_pairs: 8\nunordered_pairs: 5\n");

  auto built = run_cli("build-graph --pairs \"" + pairs + "\" --output \"" + graph + "\"" + config);
  EXPECT_EQ(built.exit_code, 0);
  EXPECT_EQ(built.out, "total: 5\nnodes: 8\nedges: 4\nself_skipped: 0\n");

  auto trained = run_cli("train-temporal --timebank " + fx("timebank_lite.jsonl") +
                         " --model-dir \"" + models + "\"" + config);
  EXPECT_EQ(trained.exit_code, 0);
  EXPECT_EQ(trained.out, "attributes: 41\nrelations: 25\n");

  auto order = run_cli("order-events --corpus " + fx("annotated_fixture.jsonl") + " --pairs \"" +
                       pairs + "\" --model-dir \"" + models + "\" --output \"" + ordered +
                       "\" --synsets " + fx("config/synsets.tsv") + " --prepositions " +
                       fx("config/prepositions.txt") + config);
  EXPECT_EQ(order.exit_code, 0);
  EXPECT_EQ(order.out, "classified: 5\ndecided: 5\nabstained: 0\ntie_dropped: 0\nemitted: 5\n");

  auto emitted = run_cli("emit-kb --corpus " + fx("annotated_fixture.jsonl") + " --ordered \"" +
                         ordered + "\" --graph \"" + graph + "\" --output-dir \"" + kb_dir + "\"" +
                         config);
  EXPECT_EQ(emitted.exit_code, 0);
  EXPECT_EQ(emitted.out, "templates: 5\nreviewed: 0\n");

  auto kb = ecc::load_knowledge_base(ecc::read_text_file(kb_dir + "/kb.txt"),
                                     ecc::read_text_file(kb_dir + "/kb_meta.jsonl"));
  ASSERT_EQ(kb.templates.size(), 5u);
  EXPECT_EQ(kb.templates[0].action, "arrest");
  EXPECT_EQ(kb.templates[1].action, "avoid");
}

TEST(Cli, FullRunWritesTheOutputTree) {
  std::string out_dir = (scratch_dir() / "run").string();
  auto r = run_cli("run --corpus " + fx("annotated_fixture.jsonl") + " --timebank " +
                   fx("timebank_lite.jsonl") + " --out \"" + out_dir + "\" --synsets " +
                   fx("config/synsets.tsv") + " --prepositions " + fx("config/prepositions.txt") +
                   " --config " + fx("config/pipeline.json"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "documents: 5\npairs: 5\ntemplates: 5\nyield: 100.0\n");
  EXPECT_TRUE(fs::exists(fs::path(out_dir) / "kb.txt"));
  EXPECT_TRUE(fs::exists(fs::path(out_dir) / "report.json"));

  auto report = ecc::load_report(ecc::read_text_file(out_dir + "/report.json"));
  EXPECT_EQ(report.sentences, 14);
  EXPECT_EQ(report.avg_sentences, "2.80");
}

TEST(Cli, AnswerResolvesAQueryAgainstTheBase) {
  std::string base = " --kb " + fx("wsc_kb/kb.txt") + " --meta " + fx("wsc_kb/kb_meta.jsonl");
  auto r = run_cli("answer" + base +
                   " --action yell --property upset"
                   " --candidate Jim=SUBJ --candidate Kevin=OBJ");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "answer: Jim\nmatched: t000001\n");

  auto abstain = run_cli("answer" + base +
                         " --action yell --property upset --polarity false"
                         " --candidate Jim=SUBJ --candidate Kevin=OBJ");
  EXPECT_EQ(abstain.exit_code, 0);
  EXPECT_EQ(abstain.out, "answer: ABSTAIN\n");

  auto bad = run_cli("answer" + base +
                     " --action yell --property upset"
                     " --candidate Jim=SUBJ --candidate Jim=OBJ");
  EXPECT_EQ(bad.exit_code, 1);
}

TEST(Cli, EvaluateScoresTheTaskFile) {
  std::string details = (scratch_dir() / "details.jsonl").string();
  auto r = run_cli("evaluate --kb " + fx("wsc_kb/kb.txt") + " --meta " +
                   fx("wsc_kb/kb_meta.jsonl") + " --tasks " + fx("wsc_tasks.jsonl") +
                   " --details \"" + details + "\"");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "tasks: 10\ncorrect: 6\nwrong: 0\nabstained: 4\n");

  auto lines = ecc::split_lines(ecc::read_text_file(details));
  std::size_t records = 0;
  for (const auto& line : lines)
    if (!line.empty()) ++records;
  EXPECT_EQ(records, 10u);
}
