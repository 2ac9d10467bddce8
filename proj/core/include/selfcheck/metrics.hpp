#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfcheck/types.hpp"

namespace selfcheck {

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

// Precision/recall at every distinct score, thresholds ascending. A sample is
// predicted positive when its score is >= threshold.
std::vector<PrPoint> precision_recall_curve(std::span<const double> scores,
                                            std::span<const int> targets);

// Step-interpolated average precision: scores sorted descending, tied scores
// form one step, AP = sum_k precision_k * (recall_k - recall_{k-1}).
// Throws UndefinedMetricError without positives and DataError on a length
// mismatch or empty input.
double average_precision(std::span<const double> scores, std::span<const int> targets);

// Product-moment correlation clamped to [-1, 1]. Throws UndefinedMetricError
// when either input is constant and DataError on length mismatch or n < 2.
double pearson(std::span<const double> x, std::span<const double> y);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// Class 1 is predicted iff score >= threshold, class 0 otherwise. Empty
// denominators give 0.
struct ClassificationReport {
  ClassMetrics positive;  // class 1
  ClassMetrics negative;  // class 0
};

ClassificationReport classification_report(std::span<const double> scores,
                                           std::span<const int> targets, double threshold);

// Per-record sentence scores, in record sentence order, and the passage
// score (mean of sentence scores).
struct RecordScores {
  std::string id;
  Granularity granularity = Granularity::Sentence;
  std::vector<JudgmentScore> sentences;
  // Extra per-sentence values (e.g. "avg_nll") aligned with `sentences`.
  std::map<std::string, std::vector<double>> sentence_extras;
  // Extra passage-level values (e.g. "doc_avg_nll").
  std::map<std::string, double> passage_extras;

  double passage_score() const;
};

struct ClassEntry {
  ClassMetrics metrics;
  std::optional<double> aucpr;
};

struct EvalReport {
  std::optional<double> nonfactual_aucpr;
  std::optional<double> factual_aucpr;
  std::optional<double> ranking_pcc;
  // "NonFactual" and "Factual" entries.
  std::map<std::string, ClassEntry> per_class;
  std::map<std::string, std::size_t> counts;  // per label name
  std::size_t sentences = 0;
  std::size_t passages = 0;
  double threshold = 0.5;
  // Undefined metrics, with the reason ("metric: reason").
  std::vector<std::string> notes;
};

// NonFactual AUC-PR on sentence scores, Factual AUC-PR on negated sentence
// scores, passage-level Pearson between predicted and gold passage scores.
// Records and score rows must align by id and sentence count (DataError
// otherwise, naming the first mismatch). Metrics that are undefined for the
// input are left empty and explained in `notes`.
EvalReport evaluate_run(std::span<const PassageRecord> records,
                        std::span<const RecordScores> scores, double threshold = 0.5);

// Fixed-width table with values x100 to two decimals; "-" for undefined.
std::string format_report(const EvalReport& report);
// JSON object with raw values in [0, 1] (null for undefined).
std::string report_to_json(const EvalReport& report);

}  // namespace selfcheck
