#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "selfcheck/llm_client.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/nli.hpp"
#include "selfcheck/prompts.hpp"
#include "selfcheck/semantic.hpp"

namespace selfcheck {

enum class DatasetKind { WikiBio, Aime };
enum class Method { Semantic, Nli, Consistency };
enum class NliBackendKind { Prompted, Remote };

DatasetKind parse_dataset_kind(std::string_view text);
Method parse_method(std::string_view text);
NliBackendKind parse_nli_backend(std::string_view text);
VerdictReduction parse_verdict_reduction(std::string_view text);

struct RunConfig {
  std::filesystem::path dataset;
  DatasetKind kind = DatasetKind::WikiBio;
  Method method = Method::Semantic;
  PromptMode prompt_mode = PromptMode::ZeroShot;
  GenerationConfig generation;
  // Whether num_samples was set explicitly. AIME building defaults to 5
  // samples per problem, scoring-side sampling to generation.num_samples.
  bool num_samples_explicit = false;

  // Semantic method.
  std::optional<std::filesystem::path> embeddings;
  bool no_embeddings = false;
  double theta = 0.9;
  double k = 1.0;
  TargetCounting target_counting = TargetCounting::PerOccurrence;

  // NLI method.
  NliBackendKind nli_backend = NliBackendKind::Prompted;
  std::string nli_endpoint;
  VerdictReduction nli_reduction = VerdictReduction::Argmax;

  std::filesystem::path out_dir = "selfcheck-out";
  bool verbose = false;
  std::optional<std::uint64_t> seeded_choice;
  bool judge_fallback = false;
  // Score only the first N records.
  std::optional<std::size_t> limit;
  // Evaluation threshold for per-class P/R/F1.
  double threshold = 0.5;

  // Throws ConfigError for an inconsistent scoring configuration.
  void validate_for_scoring() const;
  // Effective configuration as JSON (never includes credentials).
  std::string to_json() const;
};

// Default generation settings: 20 samples for scoring runs.
GenerationConfig default_generation_config();

// Overlays the keys present in a JSON config file onto `config`. Keys use
// the long flag names with '-' or '_' ("max-tokens", "max_tokens").
void merge_config_file(RunConfig& config, const std::filesystem::path& path);

struct ScoreSummary {
  std::size_t records = 0;
  std::size_t sentences = 0;
  std::size_t failed_samples = 0;
  std::filesystem::path scores_path;
  std::filesystem::path journal_path;
  std::vector<RecordScores> scores;
};

// Scores every record with the configured method, writing
// <out>/scores.jsonl and appending to <out>/journal.jsonl.
ScoreSummary run_score(const RunConfig& config);

struct EvalOutcome {
  EvalReport report;
  std::optional<std::filesystem::path> report_path;
};

// Aligns score rows with dataset records by id and evaluates. Writes
// <out>/report.json when `write_report` is set.
EvalOutcome run_eval(const std::filesystem::path& scores_path, const RunConfig& config,
                     bool write_report);

// Samples config.generation.num_samples completions per query into
// <out>/samples.jsonl. The file only appears once every query succeeded;
// completed sets are kept in samples.jsonl.partial otherwise.
std::filesystem::path run_sample(const RunConfig& config, const std::filesystem::path& queries);

struct BuildSummary {
  std::filesystem::path rows_path;
  std::filesystem::path review_path;
  std::size_t rows = 0;
  std::size_t review = 0;
};

// Builds AIME-style rows into <out>/aime_rows.jsonl and the human review queue
// into <out>/review_queue.jsonl. Finished rows stream to
// aime_rows.jsonl.partial, which is kept when the build fails.
BuildSummary run_build_aime(const RunConfig& config, const std::filesystem::path& problems);

// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace selfcheck
