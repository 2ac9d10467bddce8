#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "selfcheck/datasets.hpp"
#include "selfcheck/errors.hpp"
#include "selfcheck/pipeline.hpp"
#include "stub_server.hpp"

namespace selfcheck {
namespace {

using nlohmann::json;

const std::filesystem::path k_fixtures = SELFCHECK_FIXTURE_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<json> lines_of(const std::filesystem::path& p) {
  std::vector<json> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) out.push_back(json::parse(line));
  return out;
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override { out_ = testing::make_temp_dir("pipeline"); }
  void TearDown() override { std::filesystem::remove_all(out_); }

  RunConfig semantic_config() const {
    RunConfig c;
    c.dataset = k_fixtures / "wikibio_small.jsonl";
    c.method = Method::Semantic;
    c.embeddings = k_fixtures / "toy_vectors.txt";
    c.out_dir = out_;
    return c;
  }

  std::filesystem::path out_;
};

TEST_F(PipelineTest, SemanticRunWritesScoresAndJournal) {
  const ScoreSummary s = run_score(semantic_config());
  EXPECT_EQ(s.records, 3u);
  EXPECT_EQ(s.sentences, 6u);
  std::size_t passages = 0;
  for (const json& row : lines_of(s.scores_path)) {
    if (row["type"] == "passage") {
      ++passages;
      EXPECT_TRUE(row["extras"].contains("doc_max_avg_nll"));
    }
    if (row["type"] == "sentence") {
      EXPECT_GE(row["score"].get<double>(), row["extras"]["avg_nll"].get<double>());
    }
  }
  EXPECT_EQ(passages, 3u);

  const auto journal = lines_of(s.journal_path);
  ASSERT_GE(journal.size(), 3u);
  EXPECT_EQ(journal.front()["event"], "run_start");
  EXPECT_EQ(journal.front()["data"]["dataset_sha256"], file_sha256(k_fixtures / "wikibio_small.jsonl"));
  EXPECT_EQ(journal.front()["data"]["config"]["theta"], 0.9);
  EXPECT_EQ(journal.back()["event"], "run_end");
}

TEST_F(PipelineTest, SemanticRunsAreBitIdentical) {
  const auto first = slurp(run_score(semantic_config()).scores_path);
  const auto second = slurp(run_score(semantic_config()).scores_path);
  EXPECT_EQ(first, second);
}

TEST_F(PipelineTest, EmbeddingsRequiredUnlessOptedOut) {
  RunConfig c = semantic_config();
  c.embeddings.reset();
  EXPECT_THROW(run_score(c), ConfigError);
  c.no_embeddings = true;
  EXPECT_EQ(run_score(c).records, 3u);
  c.embeddings = k_fixtures / "toy_vectors.txt";
  EXPECT_THROW(run_score(c), ConfigError);
}

TEST_F(PipelineTest, ThetaAndKValidated) {
  RunConfig c = semantic_config();
  c.theta = 0.0;
  EXPECT_THROW(run_score(c), ConfigError);
  c = semantic_config();
  c.k = 0.0;
  EXPECT_THROW(run_score(c), ConfigError);
}

TEST_F(PipelineTest, LimitScoresPrefixAndEvalAlignsById) {
  RunConfig c = semantic_config();
  c.limit = 2;
  const ScoreSummary s = run_score(c);
  EXPECT_EQ(s.records, 2u);
  const EvalOutcome e = run_eval(s.scores_path, c, true);
  EXPECT_EQ(e.report.passages, 2u);
  ASSERT_TRUE(e.report_path);
  EXPECT_TRUE(json::parse(slurp(*e.report_path)).contains("nonfactual_aucpr"));
}

TEST_F(PipelineTest, ConsistencyAgainstStubJudge) {
  testing::StubServer server(testing::overlap_judge_handler());
  RunConfig c;
  c.dataset = k_fixtures / "wikibio_small.jsonl";
  c.method = Method::Consistency;
  c.generation.endpoint_url = server.base_url();
  c.generation.model_name = "judge";
  c.out_dir = out_;
  const ScoreSummary s = run_score(c);
  EXPECT_EQ(server.calls(), 18u);
  EXPECT_EQ(s.failed_samples, 0u);
  for (const auto& rec : s.scores) {
    for (const auto& sentence : rec.sentences) {
      EXPECT_GE(sentence.score, 0.0);
      EXPECT_LE(sentence.score, 1.0);
      EXPECT_EQ(sentence.per_sample.size(), 3u);
    }
  }
}

TEST_F(PipelineTest, PromptedNliAgainstStub) {
  testing::StubServer server([](const testing::RecordedRequest&) {
    return testing::StubResponse{200, testing::chat_body("contradict"), {}};
  });
  RunConfig c;
  c.dataset = k_fixtures / "wikibio_small.jsonl";
  c.method = Method::Nli;
  c.generation.endpoint_url = server.base_url();
  c.generation.model_name = "m";
  c.out_dir = out_;
  for (const auto& rec : run_score(c).scores) {
    for (const auto& sentence : rec.sentences) EXPECT_EQ(sentence.score, 1.0);
  }
}

TEST_F(PipelineTest, AllJudgeCallsFailingIsATransportError) {
  RunConfig c;
  c.dataset = k_fixtures / "wikibio_small.jsonl";
  c.method = Method::Consistency;
  c.generation.endpoint_url = "http://127.0.0.1:1";
  c.generation.model_name = "m";
  c.generation.max_retries = 0;
  c.out_dir = out_;
  EXPECT_THROW(run_score(c), TransportError);
  EXPECT_TRUE(std::filesystem::exists(out_ / "scores.jsonl"));
  EXPECT_NE(slurp(out_ / "journal.jsonl").find("judge_failure"), std::string::npos);
}

TEST_F(PipelineTest, EvalPerfectDetectorAndEmptyScores) {
  const auto records = load_wikibio(k_fixtures / "wikibio_small.jsonl").records;
  std::vector<RecordScores> perfect;
  for (const auto& r : records) {
    RecordScores s;
    s.id = r.id;
    for (std::size_t i = 0; i < r.sentences.size(); ++i) {
      JudgmentScore j;
      j.sentence_index = i;
      j.score = label_to_score(*r.sentences[i].label);
      s.sentences.push_back(j);
    }
    perfect.push_back(s);
  }
  export_scores(records, perfect, out_ / "perfect.jsonl");
  RunConfig c = semantic_config();
  const EvalOutcome e = run_eval(out_ / "perfect.jsonl", c, false);
  EXPECT_EQ(e.report.nonfactual_aucpr, 1.0);
  EXPECT_EQ(e.report.factual_aucpr, 1.0);
  EXPECT_NE(format_report(e.report).find("100.00       100.00"), std::string::npos)
      << format_report(e.report);

  export_scores({}, {}, out_ / "empty.jsonl");
  EXPECT_THROW(run_eval(out_ / "empty.jsonl", c, false), DataError);
}

TEST_F(PipelineTest, EvalNamesFirstMismatchedId) {
  const auto records = load_wikibio(k_fixtures / "wikibio_small.jsonl").records;
  std::vector<PassageRecord> renamed{records[0]};
  renamed[0].id = "wikibio:999";
  RecordScores s;
  s.id = "wikibio:999";
  s.sentences.resize(2);
  s.sentences[1].sentence_index = 1;
  export_scores(renamed, std::vector<RecordScores>{s}, out_ / "bad.jsonl");
  try {
    run_eval(out_ / "bad.jsonl", semantic_config(), false);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("wikibio:999"), std::string::npos) << e.what();
  }
}

TEST_F(PipelineTest, SampleTwoQueriesThreeSamples) {
  testing::StubServer server([](const testing::RecordedRequest& r) {
    return testing::StubResponse{200, testing::chat_body("bio " + std::to_string(r.index)), {}};
  });
  RunConfig c;
  c.generation.endpoint_url = server.base_url();
  c.generation.model_name = "m";
  c.generation.num_samples = 3;
  c.out_dir = out_;
  const auto path = run_sample(c, k_fixtures / "queries.jsonl");
  const auto rows = lines_of(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["id"], "q-anna");
  EXPECT_EQ(rows[1]["samples"].size(), 3u);
  EXPECT_FALSE(std::filesystem::exists(out_ / "samples.jsonl.partial"));
}

TEST_F(PipelineTest, SampleFailureLeavesExistingOutputIntact) {
  std::ofstream(out_ / "samples.jsonl") << "previous run\n";
  RunConfig c;
  c.generation.endpoint_url = "http://127.0.0.1:1";
  c.generation.model_name = "m";
  c.generation.max_retries = 0;
  c.generation.num_samples = 2;
  c.out_dir = out_;
  EXPECT_THROW(run_sample(c, k_fixtures / "queries.jsonl"), TransportError);
  EXPECT_EQ(slurp(out_ / "samples.jsonl"), "previous run\n");
}

std::string aime_reply(const std::string& prompt) {
  std::smatch m;
  const std::regex pattern("Compute (\\d+)\\*");
  if (!std::regex_search(prompt, m, pattern)) return "?";
  const int n = std::stoi(m[1]);
  if (n == 2) return "So the answer is \\boxed{4}.";
  if (n == 3) return "The answer is 10";
  return "I cannot solve this.";
}

TEST_F(PipelineTest, BuildAimeAttachesLabelsAndQueue) {
  testing::StubServer server([](const testing::RecordedRequest& r) {
    return testing::StubResponse{200, testing::chat_body(aime_reply(testing::user_message(r.body))), {}};
  });
  RunConfig c;
  c.generation.endpoint_url = server.base_url();
  c.generation.model_name = "m";
  c.out_dir = out_;
  const BuildSummary s = run_build_aime(c, k_fixtures / "aime_problems.jsonl");
  EXPECT_EQ(s.rows, 3u);
  EXPECT_EQ(s.review, 1u);
  EXPECT_EQ(server.calls(), 15u);
  const auto rows = read_aime_rows(s.rows_path);
  std::map<int, AimeRow> by_number;
  for (const auto& r : rows) by_number[r.problem_number] = r;
  EXPECT_EQ(by_number[2].preliminary_label, PreliminaryLabel::CandidateAccurate);
  EXPECT_EQ(by_number[3].preliminary_label, PreliminaryLabel::MajorInaccurate);
  EXPECT_EQ(by_number[4].flags, (std::vector<std::string>{"no_final_answer"}));
  EXPECT_EQ(by_number[2].sampled_responses.size(), 4u);
  EXPECT_FALSE(std::filesystem::exists(out_ / "aime_rows.jsonl.partial"));
  const auto queue = read_aime_rows(s.review_path);
  ASSERT_EQ(queue.size(), 1u);
  EXPECT_EQ(queue[0].problem_number, 2);
}

TEST_F(PipelineTest, BuildFailureKeepsPartialRows) {
  testing::StubServer server([](const testing::RecordedRequest& r) {
    const std::string prompt = testing::user_message(r.body);
    if (prompt.find("Compute 3") != std::string::npos) return testing::StubResponse{400, "{}", {}};
    return testing::StubResponse{200, testing::chat_body(aime_reply(prompt)), {}};
  });
  std::ofstream(out_ / "aime_rows.jsonl") << "old\n";
  RunConfig c;
  c.generation.endpoint_url = server.base_url();
  c.generation.model_name = "m";
  c.generation.max_in_flight = 1;
  c.out_dir = out_;
  EXPECT_THROW(run_build_aime(c, k_fixtures / "aime_problems.jsonl"), TransportError);
  EXPECT_EQ(slurp(out_ / "aime_rows.jsonl"), "old\n");
  const auto partial = read_aime_rows(out_ / "aime_rows.jsonl.partial");
  EXPECT_EQ(partial.size(), 2u);
}

TEST_F(PipelineTest, ConfigFileMergeAndUnknownKeys) {
  std::ofstream(out_ / "c.json") << R"({"method":"consistency","max_tokens":64,"num-samples":7,"theta":0.8,"prompt_mode":"cot"})";
  RunConfig c;
  merge_config_file(c, out_ / "c.json");
  EXPECT_EQ(c.method, Method::Consistency);
  EXPECT_EQ(c.generation.max_tokens, 64);
  EXPECT_EQ(c.generation.num_samples, 7);
  EXPECT_TRUE(c.num_samples_explicit);
  EXPECT_EQ(c.theta, 0.8);
  EXPECT_EQ(c.prompt_mode, PromptMode::ChainOfThought);
  EXPECT_EQ(c.generation.temperature, 0.6);

  std::ofstream(out_ / "bad.json") << R"({"tehta":0.8})";
  EXPECT_THROW(merge_config_file(c, out_ / "bad.json"), ConfigError);
  std::ofstream(out_ / "type.json") << R"({"theta":"high"})";
  EXPECT_THROW(merge_config_file(c, out_ / "type.json"), ConfigError);
  EXPECT_THROW(merge_config_file(c, out_ / "absent.json"), ConfigError);
}

TEST_F(PipelineTest, ConfigSnapshotOmitsCredential) {
  ::setenv("SELF_CHECK_API_KEY", "sk-snapshot-secret", 1);
  RunConfig c;
  const std::string snapshot = c.to_json();
  ::unsetenv("SELF_CHECK_API_KEY");
  EXPECT_EQ(snapshot.find("sk-snapshot-secret"), std::string::npos);
  EXPECT_NE(snapshot.find("SELF_CHECK_API_KEY"), std::string::npos);
}

TEST(ParseEnums, RejectUnknownValues) {
  EXPECT_EQ(parse_method("nli"), Method::Nli);
  EXPECT_THROW(parse_method("bleu"), ConfigError);
  EXPECT_THROW(parse_dataset_kind("squad"), ConfigError);
  EXPECT_THROW(parse_nli_backend("local"), ConfigError);
  EXPECT_THROW(parse_verdict_reduction("mean"), ConfigError);
  EXPECT_THROW(parse_prompt_mode("fewshot"), ConfigError);
}

}  // namespace
}  // namespace selfcheck
