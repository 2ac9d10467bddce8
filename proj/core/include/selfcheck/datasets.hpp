#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfcheck/llm_client.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/types.hpp"

namespace selfcheck {

// Row of the WikiBio hallucination dataset (field names as published).
struct WikiBioRow {
  std::string gpt3_text;
  std::string wiki_bio_text;
  std::vector<std::string> gpt3_sentences;
  std::vector<Label> annotation;
  std::int64_t wiki_bio_test_idx = 0;
  std::vector<std::string> gpt3_text_samples;
};

enum class PreliminaryLabel { CandidateAccurate, MajorInaccurate };

std::string_view preliminary_label_name(PreliminaryLabel label);

// Row of the AIME math hallucination dataset. Snake-case keys are canonical;
// the published column titles ("Problem Statement", "LLM Solution (gpt-4o)",
// "Solution 1".."Solution 13", ...) are accepted on input.
struct AimeRow {
  int year = 0;
  std::string set;
  int problem_number = 0;
  std::string url;
  std::string problem_statement;
  std::string exact_answer;
  std::vector<std::string> human_solutions;
  std::string llm_solution;
  std::string llm_exact_answer;
  std::optional<int> annotation;  // 0 accurate, 1 minor, 2 major
  std::vector<std::string> sampled_responses;
  // Set by the builder before human review.
  std::optional<PreliminaryLabel> preliminary_label;
  std::vector<std::string> flags;
};

// Decodes an AIME annotation code; throws DataError outside {0, 1, 2}.
Label aime_code_to_label(int code);
int label_to_aime_code(Label label);

struct LoadReport {
  std::vector<PassageRecord> records;
  std::map<Label, std::size_t> label_counts;
  std::size_t sentence_count = 0;
  std::vector<std::string> warnings;
};

// Input files hold one JSON object per line, or a single JSON array.
// Unknown fields are ignored. Row errors name the 1-based row number.
std::vector<WikiBioRow> read_wikibio_rows(const std::filesystem::path& path);
std::vector<AimeRow> read_aime_rows(const std::filesystem::path& path);
void write_wikibio_rows(std::span<const WikiBioRow> rows, const std::filesystem::path& path);
void write_aime_rows(std::span<const AimeRow> rows, const std::filesystem::path& path);

// Sentence-granularity records; sentences come from gpt3_sentences, or from
// split_sentences(gpt3_text) when that list is absent.
LoadReport load_wikibio(const std::filesystem::path& path);
// Whole-solution records: the LLM solution is the single scored unit.
LoadReport load_aime(const std::filesystem::path& path);

PassageRecord wikibio_record(const WikiBioRow& row, std::size_t row_index);
PassageRecord aime_record(const AimeRow& row);

// Integer inside the last \boxed{...}; otherwise the last standalone integer
// in [0, 999] on the last line that has one.
std::optional<int> extract_final_answer(std::string_view solution_text);

// Matching answers give CandidateAccurate, anything else MajorInaccurate.
// Throws DataError when the ground truth lies outside [0, 999].
PreliminaryLabel preliminary_label(std::optional<int> llm_answer, int ground_truth);

// Parses an AIME ground-truth answer ("204", "080"); none when not an
// integer in [0, 999].
std::optional<int> parse_aime_answer(std::string_view text);

struct AimeBuildOptions {
  std::size_t num_samples = 5;
  // Reproducible target choice; index 0 of the batch when unset.
  std::optional<std::uint64_t> seeded_choice;
  // Ask the completer whether the solution reaches the reference answer when
  // no final answer can be extracted.
  bool judge_fallback = false;
};

struct AimeBuildResult {
  std::vector<AimeRow> rows;
  std::vector<AimeRow> review_queue;  // exactly the CandidateAccurate rows
};

// Samples each problem num_samples times, designates one sample as the
// target (llm_solution) and keeps the rest as sampled_responses, then
// attaches preliminary labels. `on_row` sees every finished row (in
// completion order). Transport failures propagate after all problems have
// been attempted.
AimeBuildResult build_aime_samples(std::vector<AimeRow> problems, Completer& client,
                                   const AimeBuildOptions& options,
                                   const std::function<void(const AimeRow&)>& on_row = {});

// Scored-run file, one JSON object per line:
//   {"type":"header","schema":"selfcheck.scores","version":1}
//   {"type":"sentence","id",...,"sentence_index","score","per_sample",...}
//   {"type":"passage","id",...,"score","gold_score","sentence_count",...}
// Sentence rows of a record precede its passage row.
inline constexpr int k_scores_schema_version = 1;

void export_scores(std::span<const PassageRecord> records, std::span<const RecordScores> scores,
                   const std::filesystem::path& path);
std::vector<RecordScores> load_scores(const std::filesystem::path& path);

struct QueryRecord {
  std::string id;
  std::string query;
};

struct SampleSet {
  std::string id;
  std::string query;
  std::vector<std::string> samples;
};

// {"id": ..., "query": ...} per line; missing ids become "q<row>".
std::vector<QueryRecord> read_queries(const std::filesystem::path& path);
void write_sample_sets(std::span<const SampleSet> sets, const std::filesystem::path& path);

}  // namespace selfcheck
