#include "selfcheck/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "selfcheck/errors.hpp"

namespace selfcheck {

namespace {

void check_binary(std::span<const double> scores, std::span<const int> targets) {
  if (scores.size() != targets.size()) {
    throw DataError("score/target length mismatch (" + std::to_string(scores.size()) + " vs " +
                    std::to_string(targets.size()) + ")");
  }
  for (int t : targets) {
    if (t != 0 && t != 1) throw DataError("binary targets must be 0 or 1");
  }
}

std::vector<std::size_t> order_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// P/R/F1 of one class from 0/1 predictions and 0/1 memberships.
ClassMetrics tally(std::span<const int> predicted, std::span<const int> actual) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && actual[i]) ++tp;
    else if (predicted[i]) ++fp;
    else if (actual[i]) ++fn;
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  ClassMetrics m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.support = tp + fn;
  return m;
}

}  // namespace

std::vector<PrPoint> precision_recall_curve(std::span<const double> scores,
                                            std::span<const int> targets) {
  check_binary(scores, targets);
  const auto positives = static_cast<std::size_t>(std::count(targets.begin(), targets.end(), 1));
  if (positives == 0) throw UndefinedMetricError("precision_recall_curve", "no positive targets");
  const auto order = order_descending(scores);
  std::vector<PrPoint> curve;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      tp += static_cast<std::size_t>(targets[order[i]]);
      ++seen;
      ++i;
    }
    curve.push_back({threshold, static_cast<double>(tp) / static_cast<double>(seen),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  }
  std::reverse(curve.begin(), curve.end());
  return curve;
}

double average_precision(std::span<const double> scores, std::span<const int> targets) {
  if (scores.empty()) throw DataError("average_precision: empty input");
  check_binary(scores, targets);
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("average_precision: NaN score");
  }
  const auto curve = precision_recall_curve(scores, targets);
  double ap = 0.0;
  double previous_recall = 0.0;
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    ap += it->precision * (it->recall - previous_recall);
    previous_recall = it->recall;
  }
  return std::clamp(ap, 0.0, 1.0);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  if (x.size() < 2) throw DataError("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("pearson", "constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ClassificationReport classification_report(std::span<const double> scores,
                                           std::span<const int> targets, double threshold) {
  check_binary(scores, targets);
  std::vector<int> predicted(scores.size());
  std::vector<int> predicted_negative(scores.size());
  std::vector<int> negative_targets(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    predicted[i] = scores[i] >= threshold;
    predicted_negative[i] = !predicted[i];
    negative_targets[i] = 1 - targets[i];
  }
  return ClassificationReport{tally(predicted, targets), tally(predicted_negative, negative_targets)};
}

double RecordScores::passage_score() const {
  std::vector<double> values;
  values.reserve(sentences.size());
  for (const auto& s : sentences) values.push_back(s.score);
  return mean(values);
}

EvalReport evaluate_run(std::span<const PassageRecord> records,
                        std::span<const RecordScores> scores, double threshold) {
  if (records.size() != scores.size()) {
    throw DataError("evaluate_run: " + std::to_string(records.size()) + " records but " +
                    std::to_string(scores.size()) + " score rows");
  }
  EvalReport report;
  report.threshold = threshold;
  std::vector<double> sentence_scores;
  std::vector<Label> labels;
  std::vector<double> passage_pred;
  std::vector<double> passage_gold;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const PassageRecord& record = records[r];
    const RecordScores& row = scores[r];
    if (record.id != row.id) {
      throw DataError("evaluate_run: record " + std::to_string(r) + " id mismatch: dataset '" +
                      record.id + "' vs scores '" + row.id + "'");
    }
    if (record.sentences.size() != row.sentences.size()) {
      throw DataError("evaluate_run: record '" + record.id + "' has " +
                      std::to_string(record.sentences.size()) + " sentences but " +
                      std::to_string(row.sentences.size()) + " scores");
    }
    const std::vector<Label> record_labels = record.labels();
    for (std::size_t i = 0; i < record_labels.size(); ++i) {
      sentence_scores.push_back(row.sentences[i].score);
      labels.push_back(record_labels[i]);
      ++report.counts[std::string(label_name(record_labels[i]))];
    }
    passage_pred.push_back(row.passage_score());
    passage_gold.push_back(passage_gold_score(record_labels));
  }
  report.sentences = labels.size();
  report.passages = records.size();

  const auto nonfactual = binary_targets(labels, PositiveClass::NonFactual);
  const auto factual = binary_targets(labels, PositiveClass::Factual);
  std::vector<double> negated(sentence_scores.size());
  std::transform(sentence_scores.begin(), sentence_scores.end(), negated.begin(),
                 [](double s) { return -s; });

  const auto attempt = [&report](auto&& fn, const char* metric) -> std::optional<double> {
    try {
      return fn();
    } catch (const DataError& e) {
      report.notes.push_back(std::string(metric) + ": " + e.what());
      return std::nullopt;
    }
  };
  if (!labels.empty()) {
    report.nonfactual_aucpr =
        attempt([&] { return average_precision(sentence_scores, nonfactual); }, "NonFactual AUC-PR");
    report.factual_aucpr =
        attempt([&] { return average_precision(negated, factual); }, "Factual AUC-PR");
  } else {
    report.notes.push_back("AUC-PR: no labeled sentences");
  }
  report.ranking_pcc = attempt([&] { return pearson(passage_pred, passage_gold); }, "Ranking PCC");

  // Factual is predicted when the score falls below the threshold. With Minor
  // labels present it is not the complement of NonFactual, so both classes
  // are tallied against their own targets.
  std::vector<int> predicted_nonfactual(sentence_scores.size());
  std::vector<int> predicted_factual(sentence_scores.size());
  for (std::size_t i = 0; i < sentence_scores.size(); ++i) {
    predicted_nonfactual[i] = sentence_scores[i] >= threshold;
    predicted_factual[i] = !predicted_nonfactual[i];
  }
  report.per_class["NonFactual"] =
      ClassEntry{tally(predicted_nonfactual, nonfactual), report.nonfactual_aucpr};
  report.per_class["Factual"] =
      ClassEntry{tally(predicted_factual, factual), report.factual_aucpr};
  return report;
}

std::string format_report(const EvalReport& report) {
  const auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "passages: " << report.passages << "  sentences: " << report.sentences << '\n';
  for (const auto& [name, n] : report.counts) out << "  " << name << ": " << n << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-12s %-12s\n", "NonFactual", "Factual", "Ranking");
  out << line;
  std::snprintf(line, sizeof line, "%-12s %-12s %-12s\n", pct(report.nonfactual_aucpr).c_str(),
                pct(report.factual_aucpr).c_str(), pct(report.ranking_pcc).c_str());
  out << line;
  std::snprintf(line, sizeof line, "\n%-12s %9s %9s %9s %9s %9s   (threshold %g)\n", "class", "P",
                "R", "F1", "AUC-PR", "support", report.threshold);
  out << line;
  for (const auto& [name, entry] : report.per_class) {
    std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %9s %9zu\n", name.c_str(),
                  pct(entry.metrics.precision).c_str(), pct(entry.metrics.recall).c_str(),
                  pct(entry.metrics.f1).c_str(), pct(entry.aucpr).c_str(), entry.metrics.support);
    out << line;
  }
  for (const std::string& note : report.notes) out << "note: " << note << '\n';
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json doc;
  doc["nonfactual_aucpr"] = opt(report.nonfactual_aucpr);
  doc["factual_aucpr"] = opt(report.factual_aucpr);
  doc["ranking_pcc"] = opt(report.ranking_pcc);
  doc["threshold"] = report.threshold;
  doc["sentences"] = report.sentences;
  doc["passages"] = report.passages;
  doc["counts"] = report.counts;
  doc["notes"] = report.notes;
  json classes = json::object();
  for (const auto& [name, entry] : report.per_class) {
    classes[name] = {{"precision", entry.metrics.precision},
                     {"recall", entry.metrics.recall},
                     {"f1", entry.metrics.f1},
                     {"support", entry.metrics.support},
                     {"aucpr", opt(entry.aucpr)}};
  }
  doc["per_class"] = std::move(classes);
  return doc.dump(2);
}

}  // namespace selfcheck
