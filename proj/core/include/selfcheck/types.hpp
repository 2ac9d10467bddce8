#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfcheck {

// Three-level gold factuality taxonomy shared by WikiBio and AIME.
enum class Label { Accurate, MinorInaccurate, MajorInaccurate };

// Accepts "accurate", "minor_inaccurate", "major_inaccurate" (any case, '_',
// '-' or ' ' as separator). Anything else throws DataError.
Label parse_label(std::string_view text);
std::string_view label_name(Label label);

// Accurate -> 0.0, MinorInaccurate -> 0.5, MajorInaccurate -> 1.0.
double label_to_score(Label label) noexcept;

// Mean of label_to_score; throws DataError on an empty list.
double passage_gold_score(std::span<const Label> labels);

enum class PositiveClass { NonFactual, Factual };

// NonFactual marks Minor and Major inaccuracies; Factual marks Accurate only.
std::vector<int> binary_targets(std::span<const Label> labels, PositiveClass positive);

enum class Granularity { Sentence, WholeSolution };

std::string_view granularity_name(Granularity granularity);
Granularity parse_granularity(std::string_view text);

struct SentenceRecord {
  std::string text;
  std::optional<Label> label;
};

// One query: the target response, its sentences, the sampled passages used
// as evidence, and gold labels when annotated.
struct PassageRecord {
  std::string id;
  std::string query;
  std::string target_text;
  std::vector<SentenceRecord> sentences;
  std::vector<std::string> samples;
  Granularity granularity = Granularity::Sentence;

  // Checks structural invariants; throws DataError naming the record id.
  void validate() const;
  // validate() plus a non-empty sample list.
  void validate_for_scoring() const;

  // Labels of all sentences; throws DataError when any sentence is unlabeled.
  std::vector<Label> labels() const;
  bool fully_labeled() const noexcept;
};

// Per-sentence hallucination score. Bounded scorers (NLI, consistency) fill
// per_sample with one entry in {0, 0.5, 1} per passage and score is their
// mean. The semantic scorer leaves per_sample empty.
struct JudgmentScore {
  std::size_t sentence_index = 0;
  double score = 0.0;
  std::vector<double> per_sample;
  // Passages whose judge call failed after retries and were recorded as 0.5.
  std::size_t failed_samples = 0;
};

double mean(std::span<const double> values);

}  // namespace selfcheck
