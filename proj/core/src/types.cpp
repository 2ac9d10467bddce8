#include "selfcheck/types.hpp"

#include <algorithm>
#include <cctype>

#include "selfcheck/errors.hpp"

namespace selfcheck {

namespace {

std::string normalize_label_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '-' || c == ' ') c = '_';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

Label parse_label(std::string_view text) {
  const std::string key = normalize_label_text(text);
  if (key == "accurate") return Label::Accurate;
  if (key == "minor_inaccurate") return Label::MinorInaccurate;
  if (key == "major_inaccurate") return Label::MajorInaccurate;
  throw DataError("unknown label '" + std::string(text) + "'");
}

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Accurate: return "accurate";
    case Label::MinorInaccurate: return "minor_inaccurate";
    case Label::MajorInaccurate: return "major_inaccurate";
  }
  return "accurate";
}

double label_to_score(Label label) noexcept {
  switch (label) {
    case Label::Accurate: return 0.0;
    case Label::MinorInaccurate: return 0.5;
    case Label::MajorInaccurate: return 1.0;
  }
  return 0.0;
}

double passage_gold_score(std::span<const Label> labels) {
  if (labels.empty()) throw DataError("passage_gold_score: empty label list");
  double total = 0.0;
  for (Label l : labels) total += label_to_score(l);
  return total / static_cast<double>(labels.size());
}

std::vector<int> binary_targets(std::span<const Label> labels, PositiveClass positive) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (Label l : labels) {
    const bool accurate = l == Label::Accurate;
    out.push_back(positive == PositiveClass::Factual ? accurate : !accurate);
  }
  return out;
}

std::string_view granularity_name(Granularity granularity) {
  return granularity == Granularity::Sentence ? "sentence" : "whole_solution";
}

Granularity parse_granularity(std::string_view text) {
  if (text == "sentence") return Granularity::Sentence;
  if (text == "whole_solution") return Granularity::WholeSolution;
  throw DataError("unknown granularity '" + std::string(text) + "'");
}

void PassageRecord::validate() const {
  const auto blank = [](const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
  };
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (blank(sentences[i].text)) {
      throw DataError("record " + id + ": sentence " + std::to_string(i) + " is empty");
    }
  }
  if (granularity == Granularity::WholeSolution &&
      (sentences.size() != 1 || sentences.front().text != target_text)) {
    throw DataError("record " + id +
                    ": whole-solution records need exactly one sentence equal to the target");
  }
}

void PassageRecord::validate_for_scoring() const {
  validate();
  if (sentences.empty()) throw DataError("record " + id + ": no sentences to score");
  if (samples.empty()) throw DataError("record " + id + ": no sampled passages");
}

std::vector<Label> PassageRecord::labels() const {
  std::vector<Label> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (!sentences[i].label) {
      throw DataError("record " + id + ": sentence " + std::to_string(i) + " has no label");
    }
    out.push_back(*sentences[i].label);
  }
  return out;
}

bool PassageRecord::fully_labeled() const noexcept {
  return std::all_of(sentences.begin(), sentences.end(),
                     [](const SentenceRecord& s) { return s.label.has_value(); });
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of an empty list");
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

}  // namespace selfcheck
