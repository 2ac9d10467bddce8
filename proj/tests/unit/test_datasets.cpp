#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fake_completer.hpp"
#include "selfcheck/datasets.hpp"
#include "selfcheck/errors.hpp"
#include "stub_server.hpp"

namespace selfcheck {
namespace {

using nlohmann::json;

class TempDir {
 public:
  TempDir() : path_(testing::make_temp_dir("datasets")) {}
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name, std::ios::binary) << text;
    return path_ / name;
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json wikibio_row(int idx, std::vector<std::string> sentences, std::vector<std::string> labels,
                 std::size_t samples) {
  std::string text;
  for (const auto& s : sentences) text += (text.empty() ? "" : " ") + s;
  json samples_json = json::array();
  for (std::size_t i = 0; i < samples; ++i) samples_json.push_back("sample " + std::to_string(i));
  return {{"gpt3_text", text},           {"wiki_bio_text", "ref"},
          {"gpt3_sentences", sentences}, {"annotation", labels},
          {"wiki_bio_test_idx", idx},    {"gpt3_text_samples", samples_json}};
}

TEST(LoadWikiBio, OneRowWithSampleCountWarning) {
  TempDir dir;
  const auto path = dir.write(
      "w.jsonl", wikibio_row(7, {"A b.", "C d."}, {"accurate", "major_inaccurate"}, 3).dump() + "\n");
  const LoadReport r = load_wikibio(path);
  ASSERT_EQ(r.records.size(), 1u);
  const PassageRecord& rec = r.records[0];
  EXPECT_EQ(rec.id, "wikibio:7");
  EXPECT_EQ(rec.samples.size(), 3u);
  EXPECT_EQ(rec.granularity, Granularity::Sentence);
  EXPECT_EQ(rec.sentences[1].label, Label::MajorInaccurate);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("20"), std::string::npos);
  EXPECT_EQ(r.sentence_count, 2u);
  EXPECT_EQ(r.label_counts.at(Label::Accurate), 1u);
}

TEST(LoadWikiBio, AlignmentErrorNamesRow) {
  TempDir dir;
  const auto path = dir.write("w.jsonl",
                              wikibio_row(1, {"A."}, {"accurate"}, 20).dump() + "\n" +
                                  wikibio_row(2, {"A.", "B."}, {"accurate"}, 20).dump() + "\n");
  try {
    load_wikibio(path);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(LoadWikiBio, UnknownLabelAndMissingField) {
  TempDir dir;
  EXPECT_THROW(load_wikibio(dir.write("a.jsonl", wikibio_row(1, {"A."}, {"wrong"}, 20).dump())),
               DataError);
  json row = wikibio_row(1, {"A."}, {"accurate"}, 20);
  row.erase("gpt3_text_samples");
  EXPECT_THROW(load_wikibio(dir.write("b.jsonl", row.dump())), DataError);
  EXPECT_THROW(load_wikibio(dir.path() / "missing.jsonl"), DataError);
  EXPECT_THROW(load_wikibio(dir.write("c.jsonl", "{not json}\n")), DataError);
}

TEST(LoadWikiBio, JsonArrayAndUnknownFieldsAccepted) {
  TempDir dir;
  json row = wikibio_row(3, {"A."}, {"minor_inaccurate"}, 20);
  row["extra_field"] = {1, 2, 3};
  const LoadReport r = load_wikibio(dir.write("a.json", json::array({row}).dump()));
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(LoadWikiBio, SplitsTextWhenSentencesAbsent) {
  TempDir dir;
  json row = wikibio_row(4, {}, {}, 20);
  row["gpt3_text"] = "He was born in 1950. He died in 2001.";
  const LoadReport r = load_wikibio(dir.write("a.jsonl", row.dump()));
  ASSERT_EQ(r.records[0].sentences.size(), 2u);
  EXPECT_FALSE(r.records[0].sentences[0].label);
}

json aime_row(int annotation) {
  return {{"year", 2024},
          {"set", "I"},
          {"problem_number", 3},
          {"url", "u"},
          {"problem_statement", "Find n."},
          {"exact_answer", "204"},
          {"human_solutions", {"h"}},
          {"llm_solution", "So n = \\boxed{204}."},
          {"llm_exact_answer", "204"},
          {"annotation", annotation},
          {"sampled_responses", {"a", "b", "c", "d"}}};
}

TEST(LoadAime, WholeSolutionRecords) {
  TempDir dir;
  const LoadReport r = load_aime(dir.write("a.jsonl", aime_row(0).dump() + "\n"));
  ASSERT_EQ(r.records.size(), 1u);
  const PassageRecord& rec = r.records[0];
  EXPECT_EQ(rec.id, "aime:2024-I-3");
  EXPECT_EQ(rec.granularity, Granularity::WholeSolution);
  ASSERT_EQ(rec.sentences.size(), 1u);
  EXPECT_EQ(rec.sentences[0].text, rec.target_text);
  EXPECT_EQ(rec.sentences[0].label, Label::Accurate);
  EXPECT_EQ(rec.samples.size(), 4u);
  EXPECT_NO_THROW(rec.validate_for_scoring());
}

TEST(LoadAime, AnnotationCodes) {
  EXPECT_EQ(aime_code_to_label(0), Label::Accurate);
  EXPECT_EQ(aime_code_to_label(1), Label::MinorInaccurate);
  EXPECT_EQ(aime_code_to_label(2), Label::MajorInaccurate);
  EXPECT_THROW(aime_code_to_label(3), DataError);
  TempDir dir;
  EXPECT_THROW(load_aime(dir.write("a.jsonl", aime_row(3).dump())), DataError);
}

TEST(LoadAime, PublishedColumnNamesAndStringLists) {
  TempDir dir;
  json row{{"Year", 2023},
           {"Set", "II"},
           {"Problem Number", 5},
           {"URL", "u"},
           {"Problem Statement", "p"},
           {"Exact Answer", "80"},
           {"Solution 1", "h1"},
           {"Solution 2", "h2"},
           {"LLM Solution (gpt-4o)", "answer 80"},
           {"Exact Answer (gpt-4o)", "80"},
           {"Annotation", 2},
           {"Sampled Responses", R"(["x", "y"])"}};
  const auto rows = read_aime_rows(dir.write("a.jsonl", row.dump()));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].human_solutions, (std::vector<std::string>{"h1", "h2"}));
  EXPECT_EQ(rows[0].sampled_responses, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(rows[0].annotation, 2);
}

TEST(LoadAime, WarnsOnOutOfRangeAnswer) {
  TempDir dir;
  json row = aime_row(2);
  row["exact_answer"] = "1234";
  EXPECT_EQ(load_aime(dir.write("a.jsonl", row.dump())).warnings.size(), 1u);
}

TEST(ExtractFinalAnswer, Examples) {
  EXPECT_EQ(extract_final_answer("... so the answer is \\boxed{204}."), 204);
  EXPECT_EQ(extract_final_answer("... therefore x = 17"), 17);
  EXPECT_EQ(extract_final_answer("no numeric conclusion"), std::nullopt);
}

TEST(ExtractFinalAnswer, MoreCases) {
  EXPECT_EQ(extract_final_answer("\\boxed{3} first, then \\boxed{45}"), 45);
  EXPECT_EQ(extract_final_answer("We get 12.\nSo the total is 340\n\n"), 340);
  EXPECT_EQ(extract_final_answer("Values 5 and 1500 appear"), 5);
  EXPECT_EQ(extract_final_answer("x2 and 3.5"), std::nullopt);
  EXPECT_EQ(extract_final_answer("\\boxed{\\frac{1}{2}} then 7"), 7);
  EXPECT_EQ(extract_final_answer(""), std::nullopt);
}

TEST(PreliminaryLabel, Examples) {
  EXPECT_EQ(preliminary_label(204, 204), PreliminaryLabel::CandidateAccurate);
  EXPECT_EQ(preliminary_label(17, 204), PreliminaryLabel::MajorInaccurate);
  EXPECT_EQ(preliminary_label(std::nullopt, 204), PreliminaryLabel::MajorInaccurate);
  EXPECT_THROW(preliminary_label(1, 1000), DataError);
}

TEST(ParseAimeAnswer, Range) {
  EXPECT_EQ(parse_aime_answer("080"), 80);
  EXPECT_EQ(parse_aime_answer(" 7 "), 7);
  EXPECT_EQ(parse_aime_answer("1000"), std::nullopt);
  EXPECT_EQ(parse_aime_answer("-1"), std::nullopt);
  EXPECT_EQ(parse_aime_answer("abc"), std::nullopt);
}

AimeRow problem(int number, const std::string& answer) {
  AimeRow r;
  r.year = 2024;
  r.set = "I";
  r.problem_number = number;
  r.problem_statement = "Problem " + std::to_string(number);
  r.exact_answer = answer;
  return r;
}

TEST(BuildAime, FiveSamplesTargetFirst) {
  std::atomic<int> n{0};
  testing::FakeCompleter client([&](const std::string&) {
    return "Solution " + std::to_string(n++) + ": \\boxed{204}";
  });
  const auto result = build_aime_samples({problem(1, "204")}, client, AimeBuildOptions{});
  ASSERT_EQ(result.rows.size(), 1u);
  const AimeRow& row = result.rows[0];
  EXPECT_EQ(row.llm_solution, "Solution 0: \\boxed{204}");
  EXPECT_EQ(row.sampled_responses.size(), 4u);
  EXPECT_EQ(row.preliminary_label, PreliminaryLabel::CandidateAccurate);
  EXPECT_EQ(row.llm_exact_answer, "204");
  ASSERT_EQ(result.review_queue.size(), 1u);
  EXPECT_FALSE(row.annotation);
}

TEST(BuildAime, NonNumericIsMajorAndFlagged) {
  testing::FakeCompleter client([](const std::string&) { return "I am not sure."; });
  const auto result = build_aime_samples({problem(1, "204")}, client, AimeBuildOptions{});
  EXPECT_EQ(result.rows[0].preliminary_label, PreliminaryLabel::MajorInaccurate);
  EXPECT_EQ(result.rows[0].flags, (std::vector<std::string>{"no_final_answer"}));
  EXPECT_TRUE(result.review_queue.empty());
}

TEST(BuildAime, JudgeFallbackCanRescue) {
  testing::FakeCompleter client([](const std::string& prompt) -> std::string {
    if (prompt.rfind("Context: The correct final answer is 204.", 0) == 0) return "Yes";
    return "The result is two hundred four.";
  });
  AimeBuildOptions options;
  options.judge_fallback = true;
  const auto result = build_aime_samples({problem(1, "204")}, client, options);
  EXPECT_EQ(result.rows[0].preliminary_label, PreliminaryLabel::CandidateAccurate);
  EXPECT_EQ(result.review_queue.size(), 1u);
}

TEST(BuildAime, InvalidGroundTruthGetsNoLabel) {
  testing::FakeCompleter client([](const std::string&) { return "\\boxed{5}"; });
  const auto result = build_aime_samples({problem(1, "n/a")}, client, AimeBuildOptions{});
  EXPECT_FALSE(result.rows[0].preliminary_label);
  EXPECT_EQ(result.rows[0].flags, (std::vector<std::string>{"invalid_ground_truth"}));
}

TEST(BuildAime, SeededChoiceIsReproducible) {
  std::atomic<int> n{0};
  testing::FakeCompleter client([&](const std::string&) { return "s" + std::to_string(n++ % 5); });
  AimeBuildOptions options;
  options.seeded_choice = 42;
  const auto a = build_aime_samples({problem(1, "1"), problem(2, "2")}, client, options);
  const auto b = build_aime_samples({problem(1, "1"), problem(2, "2")}, client, options);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.rows[i].llm_solution, b.rows[i].llm_solution);
    EXPECT_EQ(a.rows[i].sampled_responses.size(), 4u);
  }
}

TEST(BuildAime, NeverProducesMinorLabels) {
  std::atomic<int> n{0};
  testing::FakeCompleter client(
      [&](const std::string&) { return n++ % 2 ? "\\boxed{7}" : "answer: 8"; }, 3);
  std::vector<AimeRow> problems;
  for (int i = 0; i < 20; ++i) problems.push_back(problem(i, i % 2 ? "7" : "8"));
  const auto result = build_aime_samples(problems, client, AimeBuildOptions{});
  ASSERT_EQ(result.rows.size(), 20u);
  for (const auto& row : result.rows) {
    ASSERT_TRUE(row.preliminary_label);
    EXPECT_FALSE(row.annotation);
  }
  for (const auto& row : result.review_queue) {
    EXPECT_EQ(row.preliminary_label, PreliminaryLabel::CandidateAccurate);
  }
}

TEST(AimeRows, WriteReadRoundTrip) {
  TempDir dir;
  AimeRow row = problem(9, "123");
  row.url = "https://example.org";
  row.human_solutions = {"h1", "h2"};
  row.llm_solution = "s";
  row.llm_exact_answer = "123";
  row.annotation = 1;
  row.sampled_responses = {"a", "b"};
  row.preliminary_label = PreliminaryLabel::CandidateAccurate;
  row.flags = {"judge_matched_answer"};
  const std::vector<AimeRow> rows{row};
  write_aime_rows(rows, dir.path() / "r.jsonl");
  const auto back = read_aime_rows(dir.path() / "r.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].human_solutions, row.human_solutions);
  EXPECT_EQ(back[0].annotation, 1);
  EXPECT_EQ(back[0].preliminary_label, PreliminaryLabel::CandidateAccurate);
  EXPECT_EQ(back[0].flags, row.flags);
  write_aime_rows(back, dir.path() / "r2.jsonl");
  EXPECT_EQ(slurp(dir.path() / "r.jsonl"), slurp(dir.path() / "r2.jsonl"));
}

TEST(WikiBioRows, WriteReadRoundTrip) {
  TempDir dir;
  const auto path = dir.write(
      "w.jsonl", wikibio_row(5, {"A.", "B."}, {"accurate", "minor_inaccurate"}, 2).dump() + "\n");
  const auto rows = read_wikibio_rows(path);
  write_wikibio_rows(rows, dir.path() / "w2.jsonl");
  const auto back = read_wikibio_rows(dir.path() / "w2.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].gpt3_sentences, rows[0].gpt3_sentences);
  EXPECT_EQ(back[0].annotation, rows[0].annotation);
  EXPECT_EQ(back[0].gpt3_text_samples, rows[0].gpt3_text_samples);
  EXPECT_EQ(back[0].wiki_bio_test_idx, 5);
}

RecordScores scores_for(const PassageRecord& r, double base) {
  RecordScores s;
  s.id = r.id;
  s.granularity = r.granularity;
  for (std::size_t i = 0; i < r.sentences.size(); ++i) {
    JudgmentScore j;
    j.sentence_index = i;
    j.score = base + 0.25 * i;
    j.per_sample = {j.score, j.score};
    s.sentences.push_back(j);
    s.sentence_extras["avg_nll"].push_back(base / 3);
  }
  s.passage_extras["doc_avg_nll"] = 1.0 / 3.0;
  return s;
}

TEST(ExportScores, EmptyRunIsHeaderOnly) {
  TempDir dir;
  export_scores({}, {}, dir.path() / "s.jsonl");
  const auto doc = json::parse(slurp(dir.path() / "s.jsonl"));
  EXPECT_EQ(doc["type"], "header");
  EXPECT_EQ(doc["version"], k_scores_schema_version);
  EXPECT_TRUE(load_scores(dir.path() / "s.jsonl").empty());
}

TEST(ExportScores, TwoSentenceRowsThenPassageRow) {
  TempDir dir;
  const auto path = dir.write(
      "w.jsonl", wikibio_row(1, {"A.", "B."}, {"accurate", "major_inaccurate"}, 2).dump());
  const auto records = load_wikibio(path).records;
  const std::vector<RecordScores> scores{scores_for(records[0], 0.5)};
  export_scores(records, scores, dir.path() / "s.jsonl");
  std::istringstream lines(slurp(dir.path() / "s.jsonl"));
  std::vector<json> docs;
  for (std::string line; std::getline(lines, line);) docs.push_back(json::parse(line));
  ASSERT_EQ(docs.size(), 4u);
  EXPECT_EQ(docs[1]["type"], "sentence");
  EXPECT_EQ(docs[2]["label"], "major_inaccurate");
  EXPECT_EQ(docs[3]["type"], "passage");
  EXPECT_DOUBLE_EQ(docs[3]["score"].get<double>(), 0.625);
  EXPECT_DOUBLE_EQ(docs[3]["gold_score"].get<double>(), 0.5);
}

TEST(ExportScores, DeterministicAndRoundTrips) {
  TempDir dir;
  const auto path = dir.write("w.jsonl", wikibio_row(1, {"A.", "B."}, {"accurate", "accurate"}, 2).dump() +
                                             "\n" + wikibio_row(2, {"C."}, {"minor_inaccurate"}, 2).dump());
  const auto records = load_wikibio(path).records;
  const std::vector<RecordScores> scores{scores_for(records[0], 0.1), scores_for(records[1], 0.7)};
  export_scores(records, scores, dir.path() / "a.jsonl");
  export_scores(records, scores, dir.path() / "b.jsonl");
  EXPECT_EQ(slurp(dir.path() / "a.jsonl"), slurp(dir.path() / "b.jsonl"));

  const auto back = load_scores(dir.path() / "a.jsonl");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(back[r].id, scores[r].id);
    ASSERT_EQ(back[r].sentences.size(), scores[r].sentences.size());
    for (std::size_t i = 0; i < back[r].sentences.size(); ++i) {
      EXPECT_EQ(back[r].sentences[i].score, scores[r].sentences[i].score);
      EXPECT_EQ(back[r].sentences[i].per_sample, scores[r].sentences[i].per_sample);
    }
    EXPECT_EQ(back[r].sentence_extras, scores[r].sentence_extras);
    EXPECT_EQ(back[r].passage_extras, scores[r].passage_extras);
  }
  export_scores(records, back, dir.path() / "c.jsonl");
  EXPECT_EQ(slurp(dir.path() / "a.jsonl"), slurp(dir.path() / "c.jsonl"));
}

TEST(LoadScores, RejectsEmptyAndForeignFiles) {
  TempDir dir;
  EXPECT_THROW(load_scores(dir.write("e.jsonl", "")), DataError);
  EXPECT_THROW(load_scores(dir.write("f.jsonl", R"({"type":"header","schema":"other","version":1})")),
               DataError);
  EXPECT_THROW(load_scores(dir.write("g.jsonl", R"({"type":"header","schema":"selfcheck.scores","version":99})")),
               DataError);
}

TEST(Queries, MissingIdsAreNumbered) {
  TempDir dir;
  const auto q = read_queries(dir.write("q.jsonl", R"({"query":"a"})" "\n" R"({"id":"x","prompt":"b"})" "\n"));
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].id, "q1");
  EXPECT_EQ(q[1].id, "x");
  EXPECT_EQ(q[1].query, "b");
}

}  // namespace
}  // namespace selfcheck
