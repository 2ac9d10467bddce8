#include "selfcheck/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <mutex>
#include <random>
#include <set>

#include <json.hpp>

#include "parallel.hpp"
#include "selfcheck/consistency.hpp"
#include "selfcheck/errors.hpp"
#include "selfcheck/textproc.hpp"

namespace selfcheck {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Parsed rows paired with their 1-based row numbers.
std::vector<std::pair<std::size_t, json>> read_json_rows(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::pair<std::size_t, json>> rows;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return rows;
  if (text[first] == '[') {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
      throw DataError(path.string() + ": malformed JSON array");
    }
    for (std::size_t i = 0; i < doc.size(); ++i) rows.emplace_back(i + 1, std::move(doc[i]));
    return rows;
  }
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string_view line(text.data() + start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      throw DataError(path.string() + ": row " + std::to_string(line_no) +
                      " is not a JSON object");
    }
    rows.emplace_back(line_no, std::move(row));
  }
  return rows;
}

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
  throw DataError("row " + std::to_string(row) + ": " + what);
}

const json* find_field(const json& row, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    const auto it = row.find(name);
    if (it != row.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

const json& require(const json& row, std::size_t n, std::initializer_list<const char*> names) {
  const json* field = find_field(row, names);
  if (!field) row_error(n, std::string("missing field '") + *names.begin() + "'");
  return *field;
}

std::string as_string(const json& value, std::size_t n, const char* name) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number()) return value.dump();
  row_error(n, std::string("field '") + name + "' must be a string");
}

std::int64_t as_integer(const json& value, std::size_t n, const char* name) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) {
    const double d = value.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
  }
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size()) return out;
  }
  row_error(n, std::string("field '") + name + "' must be an integer");
}

// Accepts a JSON array of strings, a string holding such an array, or a
// single string.
std::vector<std::string> as_string_list(const json& value, std::size_t n, const char* name) {
  const json* list = &value;
  json parsed;
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (!s.empty() && s.front() == '[') {
      parsed = json::parse(s, nullptr, false);
      if (!parsed.is_discarded() && parsed.is_array()) list = &parsed;
    }
    if (list == &value) return {s};
  }
  if (!list->is_array()) row_error(n, std::string("field '") + name + "' must be a list");
  std::vector<std::string> out;
  out.reserve(list->size());
  for (const json& item : *list) {
    if (!item.is_string()) row_error(n, std::string("field '") + name + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

void write_lines(const std::vector<json>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const json& row : rows) out << row.dump() << '\n';
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::optional<int> parse_small_integer(std::string_view s) {
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) || s.front() == '$')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '$' ||
                        s.back() == '.')) {
    s.remove_suffix(1);
  }
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), is_digit)) return std::nullopt;
  int value = 0;
  std::from_chars(s.data(), s.data() + s.size(), value);
  return value;
}

// Standalone integers in [0, 999] on one line, in order of appearance.
std::vector<int> standalone_integers(std::string_view line) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (!is_digit(line[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && is_digit(line[i])) ++i;
    const bool letter_before = start > 0 && (is_alnum(line[start - 1]) || line[start - 1] == '_');
    const bool decimal_before = start > 1 && line[start - 1] == '.' && is_digit(line[start - 2]);
    const bool unary_minus = start > 0 && line[start - 1] == '-' &&
                             (start == 1 || !(is_alnum(line[start - 2]) || line[start - 2] == ')'));
    const bool letter_after = i < line.size() && (is_alnum(line[i]) || line[i] == '_');
    const bool decimal_after = i + 1 < line.size() && line[i] == '.' && is_digit(line[i + 1]);
    const bool grouped = (i + 1 < line.size() && line[i] == ',' && is_digit(line[i + 1])) ||
                         (start > 1 && line[start - 1] == ',' && is_digit(line[start - 2]));
    if (letter_before || decimal_before || unary_minus || letter_after || decimal_after || grouped) {
      continue;
    }
    if (i - start > 4) continue;
    int value = 0;
    std::from_chars(line.data() + start, line.data() + i, value);
    if (value >= 0 && value <= 999) out.push_back(value);
  }
  return out;
}

json aime_row_to_json(const AimeRow& row) {
  json out;
  out["year"] = row.year;
  out["set"] = row.set;
  out["problem_number"] = row.problem_number;
  out["url"] = row.url;
  out["problem_statement"] = row.problem_statement;
  out["exact_answer"] = row.exact_answer;
  out["human_solutions"] = row.human_solutions;
  out["llm_solution"] = row.llm_solution;
  out["llm_exact_answer"] = row.llm_exact_answer;
  out["annotation"] = row.annotation ? json(*row.annotation) : json(nullptr);
  out["sampled_responses"] = row.sampled_responses;
  if (row.preliminary_label) {
    out["preliminary_label"] = preliminary_label_name(*row.preliminary_label);
  }
  if (!row.flags.empty()) out["flags"] = row.flags;
  return out;
}

std::string aime_id(const AimeRow& row) {
  return "aime:" + std::to_string(row.year) + "-" + row.set + "-" +
         std::to_string(row.problem_number);
}

}  // namespace

std::string_view preliminary_label_name(PreliminaryLabel label) {
  return label == PreliminaryLabel::CandidateAccurate ? "candidate_accurate" : "major_inaccurate";
}

Label aime_code_to_label(int code) {
  switch (code) {
    case 0: return Label::Accurate;
    case 1: return Label::MinorInaccurate;
    case 2: return Label::MajorInaccurate;
    default:
      throw DataError("AIME annotation code " + std::to_string(code) + " is not in {0, 1, 2}");
  }
}

int label_to_aime_code(Label label) {
  switch (label) {
    case Label::Accurate: return 0;
    case Label::MinorInaccurate: return 1;
    case Label::MajorInaccurate: return 2;
  }
  return 2;
}

std::vector<WikiBioRow> read_wikibio_rows(const std::filesystem::path& path) {
  std::vector<WikiBioRow> rows;
  for (const auto& [n, doc] : read_json_rows(path)) {
    WikiBioRow row;
    row.gpt3_text = as_string(require(doc, n, {"gpt3_text"}), n, "gpt3_text");
    if (const json* f = find_field(doc, {"wiki_bio_text"})) {
      row.wiki_bio_text = as_string(*f, n, "wiki_bio_text");
    }
    if (const json* f = find_field(doc, {"gpt3_sentences"})) {
      row.gpt3_sentences = as_string_list(*f, n, "gpt3_sentences");
    }
    if (const json* f = find_field(doc, {"annotation"})) {
      for (const std::string& label : as_string_list(*f, n, "annotation")) {
        try {
          row.annotation.push_back(parse_label(label));
        } catch (const DataError& e) {
          row_error(n, e.what());
        }
      }
    }
    if (const json* f = find_field(doc, {"wiki_bio_test_idx"})) {
      row.wiki_bio_test_idx = as_integer(*f, n, "wiki_bio_test_idx");
    } else {
      row.wiki_bio_test_idx = static_cast<std::int64_t>(n - 1);
    }
    row.gpt3_text_samples =
        as_string_list(require(doc, n, {"gpt3_text_samples"}), n, "gpt3_text_samples");
    if (!row.annotation.empty() && !row.gpt3_sentences.empty() &&
        row.annotation.size() != row.gpt3_sentences.size()) {
      row_error(n, std::to_string(row.gpt3_sentences.size()) + " sentences but " +
                       std::to_string(row.annotation.size()) + " annotations");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AimeRow> read_aime_rows(const std::filesystem::path& path) {
  std::vector<AimeRow> rows;
  for (const auto& [n, doc] : read_json_rows(path)) {
    AimeRow row;
    if (const json* f = find_field(doc, {"year", "Year"})) row.year = static_cast<int>(as_integer(*f, n, "year"));
    if (const json* f = find_field(doc, {"set", "Set"})) row.set = as_string(*f, n, "set");
    if (const json* f = find_field(doc, {"problem_number", "Problem Number"})) {
      row.problem_number = static_cast<int>(as_integer(*f, n, "problem_number"));
    }
    if (const json* f = find_field(doc, {"url", "URL"})) row.url = as_string(*f, n, "url");
    row.problem_statement = as_string(
        require(doc, n, {"problem_statement", "Problem Statement"}), n, "problem_statement");
    if (const json* f = find_field(doc, {"exact_answer", "Exact Answer"})) {
      row.exact_answer = as_string(*f, n, "exact_answer");
    }
    if (const json* f = find_field(doc, {"human_solutions"})) {
      row.human_solutions = as_string_list(*f, n, "human_solutions");
    } else {
      for (int i = 1; i <= 13; ++i) {
        const std::string key = "Solution " + std::to_string(i);
        const auto it = doc.find(key);
        if (it != doc.end() && it->is_string() && !it->get<std::string>().empty()) {
          row.human_solutions.push_back(it->get<std::string>());
        }
      }
    }
    if (const json* f = find_field(doc, {"llm_solution", "LLM Solution (gpt-4o)", "LLM Solution"})) {
      row.llm_solution = as_string(*f, n, "llm_solution");
    }
    if (const json* f =
            find_field(doc, {"llm_exact_answer", "Exact Answer (gpt-4o)", "LLM Exact Answer"})) {
      row.llm_exact_answer = as_string(*f, n, "llm_exact_answer");
    }
    if (const json* f = find_field(doc, {"annotation", "Annotation"})) {
      const auto code = as_integer(*f, n, "annotation");
      if (code < 0 || code > 2) {
        row_error(n, "annotation code " + std::to_string(code) + " is not in {0, 1, 2}");
      }
      row.annotation = static_cast<int>(code);
    }
    if (const json* f = find_field(doc, {"sampled_responses", "Sampled Responses"})) {
      row.sampled_responses = as_string_list(*f, n, "sampled_responses");
    }
    if (const json* f = find_field(doc, {"preliminary_label"})) {
      const std::string s = as_string(*f, n, "preliminary_label");
      row.preliminary_label = s == "candidate_accurate" ? PreliminaryLabel::CandidateAccurate
                                                        : PreliminaryLabel::MajorInaccurate;
    }
    if (const json* f = find_field(doc, {"flags"})) row.flags = as_string_list(*f, n, "flags");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_wikibio_rows(std::span<const WikiBioRow> rows, const std::filesystem::path& path) {
  std::vector<json> out;
  out.reserve(rows.size());
  for (const WikiBioRow& row : rows) {
    json labels = json::array();
    for (Label l : row.annotation) labels.push_back(label_name(l));
    out.push_back({{"gpt3_text", row.gpt3_text},
                   {"wiki_bio_text", row.wiki_bio_text},
                   {"gpt3_sentences", row.gpt3_sentences},
                   {"annotation", std::move(labels)},
                   {"wiki_bio_test_idx", row.wiki_bio_test_idx},
                   {"gpt3_text_samples", row.gpt3_text_samples}});
  }
  write_lines(out, path);
}

void write_aime_rows(std::span<const AimeRow> rows, const std::filesystem::path& path) {
  std::vector<json> out;
  out.reserve(rows.size());
  for (const AimeRow& row : rows) out.push_back(aime_row_to_json(row));
  write_lines(out, path);
}

PassageRecord wikibio_record(const WikiBioRow& row, std::size_t row_index) {
  PassageRecord record;
  record.id = "wikibio:" + std::to_string(row.wiki_bio_test_idx);
  record.target_text = row.gpt3_text;
  record.granularity = Granularity::Sentence;
  const std::vector<std::string> sentences =
      row.gpt3_sentences.empty() ? split_sentences(row.gpt3_text) : row.gpt3_sentences;
  if (!row.annotation.empty() && row.annotation.size() != sentences.size()) {
    throw DataError("row " + std::to_string(row_index + 1) + ": " +
                    std::to_string(sentences.size()) + " sentences but " +
                    std::to_string(row.annotation.size()) + " annotations");
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    SentenceRecord s{sentences[i], std::nullopt};
    if (!row.annotation.empty()) s.label = row.annotation[i];
    record.sentences.push_back(std::move(s));
  }
  record.samples = row.gpt3_text_samples;
  return record;
}

PassageRecord aime_record(const AimeRow& row) {
  PassageRecord record;
  record.id = aime_id(row);
  record.query = row.problem_statement;
  record.target_text = row.llm_solution;
  record.granularity = Granularity::WholeSolution;
  SentenceRecord s{row.llm_solution, std::nullopt};
  if (row.annotation) s.label = aime_code_to_label(*row.annotation);
  record.sentences.push_back(std::move(s));
  record.samples = row.sampled_responses;
  return record;
}

LoadReport load_wikibio(const std::filesystem::path& path) {
  const std::vector<WikiBioRow> rows = read_wikibio_rows(path);
  LoadReport report;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    PassageRecord record = wikibio_record(rows[i], i);
    if (!seen.insert(record.id).second) {
      record.id += "#" + std::to_string(i + 1);
      seen.insert(record.id);
    }
    try {
      record.validate();
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(i + 1) + ": " + e.what());
    }
    if (rows[i].gpt3_text_samples.size() != 20) {
      report.warnings.push_back("row " + std::to_string(i + 1) + ": " +
                                std::to_string(rows[i].gpt3_text_samples.size()) +
                                " sampled passages (published data has 20)");
    }
    for (const SentenceRecord& s : record.sentences) {
      ++report.sentence_count;
      if (s.label) ++report.label_counts[*s.label];
    }
    report.records.push_back(std::move(record));
  }
  return report;
}

LoadReport load_aime(const std::filesystem::path& path) {
  const std::vector<AimeRow> rows = read_aime_rows(path);
  LoadReport report;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!parse_aime_answer(rows[i].exact_answer)) {
      report.warnings.push_back("row " + std::to_string(i + 1) + ": exact answer '" +
                                rows[i].exact_answer + "' is not an integer in [0, 999]");
    }
    PassageRecord record = aime_record(rows[i]);
    if (!seen.insert(record.id).second) {
      record.id += "#" + std::to_string(i + 1);
      seen.insert(record.id);
    }
    for (const SentenceRecord& s : record.sentences) {
      ++report.sentence_count;
      if (s.label) ++report.label_counts[*s.label];
    }
    report.records.push_back(std::move(record));
  }
  return report;
}

std::optional<int> parse_aime_answer(std::string_view text) {
  const auto value = parse_small_integer(text);
  if (!value || *value > 999) return std::nullopt;
  return value;
}

std::optional<int> extract_final_answer(std::string_view solution_text) {
  static constexpr std::string_view marker = "\\boxed{";
  const std::size_t boxed = solution_text.rfind(marker);
  if (boxed != std::string_view::npos) {
    std::size_t i = boxed + marker.size();
    int depth = 1;
    const std::size_t content_start = i;
    while (i < solution_text.size() && depth > 0) {
      if (solution_text[i] == '{') ++depth;
      if (solution_text[i] == '}') --depth;
      ++i;
    }
    if (depth == 0) {
      const auto value = parse_small_integer(solution_text.substr(content_start, i - 1 - content_start));
      if (value) return value;
    }
  }

  std::size_t end = solution_text.size();
  while (end > 0) {
    std::size_t start = solution_text.rfind('\n', end - 1);
    start = start == std::string_view::npos ? 0 : start + 1;
    const auto values = standalone_integers(solution_text.substr(start, end - start));
    if (!values.empty()) return values.back();
    if (start == 0) break;
    end = start - 1;
  }
  return std::nullopt;
}

PreliminaryLabel preliminary_label(std::optional<int> llm_answer, int ground_truth) {
  if (ground_truth < 0 || ground_truth > 999) {
    throw DataError("ground truth " + std::to_string(ground_truth) + " is outside [0, 999]");
  }
  return llm_answer && *llm_answer == ground_truth ? PreliminaryLabel::CandidateAccurate
                                                   : PreliminaryLabel::MajorInaccurate;
}

AimeBuildResult build_aime_samples(std::vector<AimeRow> problems, Completer& client,
                                   const AimeBuildOptions& options,
                                   const std::function<void(const AimeRow&)>& on_row) {
  if (options.num_samples < 1) throw ConfigError("num_samples must be >= 1");
  AimeBuildResult result;
  std::vector<char> done(problems.size(), 0);
  std::mutex mutex;

  detail::parallel_for(problems.size(), client.max_in_flight(), [&](std::size_t p) {
    AimeRow& row = problems[p];
    std::vector<std::string> samples =
        client.sample_n(ChatRequest{std::nullopt, row.problem_statement}, options.num_samples);

    std::size_t target = 0;
    if (options.seeded_choice) {
      std::mt19937_64 rng(*options.seeded_choice + p);
      target = static_cast<std::size_t>(rng() % samples.size());
    }
    row.llm_solution = samples[target];
    row.sampled_responses.clear();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (i != target) row.sampled_responses.push_back(std::move(samples[i]));
    }
    row.annotation.reset();
    row.flags.clear();

    const std::optional<int> answer = extract_final_answer(row.llm_solution);
    row.llm_exact_answer = answer ? std::to_string(*answer) : "";
    const std::optional<int> truth = parse_aime_answer(row.exact_answer);
    if (!truth) {
      row.preliminary_label.reset();
      row.flags.push_back("invalid_ground_truth");
    } else if (answer) {
      row.preliminary_label = preliminary_label(answer, *truth);
    } else {
      row.flags.push_back("no_final_answer");
      row.preliminary_label = PreliminaryLabel::MajorInaccurate;
      if (options.judge_fallback) {
        const JudgePrompt prompt = render_prompt(
            PromptMode::ZeroShot, "The correct final answer is " + std::to_string(*truth) + ".",
            row.llm_solution);
        const double verdict =
            parse_judgment(client.complete(ChatRequest{std::nullopt, prompt.rendered}).text);
        if (verdict == 0.0) {
          row.preliminary_label = PreliminaryLabel::CandidateAccurate;
          row.flags.push_back("judge_matched_answer");
        }
      }
    }

    std::lock_guard lock(mutex);
    done[p] = 1;
    if (on_row) on_row(row);
  });

  for (std::size_t p = 0; p < problems.size(); ++p) {
    if (!done[p]) continue;
    if (problems[p].preliminary_label == PreliminaryLabel::CandidateAccurate) {
      result.review_queue.push_back(problems[p]);
    }
    result.rows.push_back(std::move(problems[p]));
  }
  return result;
}

void export_scores(std::span<const PassageRecord> records, std::span<const RecordScores> scores,
                   const std::filesystem::path& path) {
  if (records.size() != scores.size()) {
    throw DataError("export_scores: " + std::to_string(records.size()) + " records but " +
                    std::to_string(scores.size()) + " score rows");
  }
  std::vector<json> lines;
  lines.push_back({{"type", "header"},
                   {"schema", "selfcheck.scores"},
                   {"version", k_scores_schema_version}});
  for (std::size_t r = 0; r < records.size(); ++r) {
    const PassageRecord& record = records[r];
    const RecordScores& row = scores[r];
    if (record.id != row.id || record.sentences.size() != row.sentences.size()) {
      throw DataError("export_scores: score row " + std::to_string(r) + " ('" + row.id +
                      "') does not align with record '" + record.id + "'");
    }
    for (std::size_t i = 0; i < row.sentences.size(); ++i) {
      const JudgmentScore& s = row.sentences[i];
      json line{{"type", "sentence"},
                {"id", row.id},
                {"granularity", granularity_name(row.granularity)},
                {"sentence_index", s.sentence_index},
                {"score", s.score},
                {"per_sample", s.per_sample},
                {"failed_samples", s.failed_samples}};
      const auto& label = record.sentences[i].label;
      line["label"] = label ? json(label_name(*label)) : json(nullptr);
      json extras = json::object();
      for (const auto& [name, values] : row.sentence_extras) {
        if (i < values.size()) extras[name] = values[i];
      }
      if (!extras.empty()) line["extras"] = std::move(extras);
      lines.push_back(std::move(line));
    }
    json passage{{"type", "passage"},
                 {"id", row.id},
                 {"granularity", granularity_name(row.granularity)},
                 {"score", row.sentences.empty() ? 0.0 : row.passage_score()},
                 {"sentence_count", row.sentences.size()}};
    passage["gold_score"] =
        record.fully_labeled() && !record.sentences.empty()
            ? json(passage_gold_score(record.labels()))
            : json(nullptr);
    if (!row.passage_extras.empty()) passage["extras"] = row.passage_extras;
    lines.push_back(std::move(passage));
  }
  write_lines(lines, path);
}

std::vector<RecordScores> load_scores(const std::filesystem::path& path) {
  const auto rows = read_json_rows(path);
  if (rows.empty()) throw DataError(path.string() + ": empty score file");
  const json& header = rows.front().second;
  if (header.value("type", "") != "header" || header.value("schema", "") != "selfcheck.scores") {
    throw DataError(path.string() + ": missing selfcheck.scores header");
  }
  if (header.value("version", 0) != k_scores_schema_version) {
    throw DataError(path.string() + ": unsupported schema version");
  }
  std::vector<RecordScores> out;
  std::optional<RecordScores> current;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& [n, doc] = rows[k];
    const std::string type = doc.value("type", "");
    const std::string id = as_string(require(doc, n, {"id"}), n, "id");
    const Granularity granularity =
        parse_granularity(as_string(require(doc, n, {"granularity"}), n, "granularity"));
    if (type == "sentence") {
      if (!current) {
        current.emplace();
        current->id = id;
        current->granularity = granularity;
      } else if (current->id != id) {
        row_error(n, "sentence row for '" + id + "' before the passage row of '" + current->id + "'");
      }
      JudgmentScore s;
      s.sentence_index = static_cast<std::size_t>(as_integer(require(doc, n, {"sentence_index"}), n, "sentence_index"));
      if (s.sentence_index != current->sentences.size()) row_error(n, "sentence_index out of order");
      s.score = require(doc, n, {"score"}).get<double>();
      if (const json* f = find_field(doc, {"per_sample"})) s.per_sample = f->get<std::vector<double>>();
      if (const json* f = find_field(doc, {"failed_samples"})) s.failed_samples = f->get<std::size_t>();
      if (const json* f = find_field(doc, {"extras"})) {
        for (const auto& [name, value] : f->items()) {
          auto& column = current->sentence_extras[name];
          column.resize(current->sentences.size());
          column.push_back(value.get<double>());
        }
      }
      current->sentences.push_back(std::move(s));
    } else if (type == "passage") {
      if (!current || current->id != id) row_error(n, "passage row for '" + id + "' without sentences");
      const auto count = as_integer(require(doc, n, {"sentence_count"}), n, "sentence_count");
      if (static_cast<std::size_t>(count) != current->sentences.size()) {
        row_error(n, "sentence_count does not match the sentence rows of '" + id + "'");
      }
      if (const json* f = find_field(doc, {"extras"})) {
        current->passage_extras = f->get<std::map<std::string, double>>();
      }
      out.push_back(std::move(*current));
      current.reset();
    } else {
      row_error(n, "unknown row type '" + type + "'");
    }
  }
  if (current) throw DataError(path.string() + ": record '" + current->id + "' has no passage row");
  return out;
}

std::vector<QueryRecord> read_queries(const std::filesystem::path& path) {
  std::vector<QueryRecord> out;
  for (const auto& [n, doc] : read_json_rows(path)) {
    QueryRecord q;
    q.query = as_string(require(doc, n, {"query", "prompt"}), n, "query");
    if (const json* f = find_field(doc, {"id"})) {
      q.id = as_string(*f, n, "id");
    } else {
      q.id = "q" + std::to_string(n);
    }
    out.push_back(std::move(q));
  }
  return out;
}

void write_sample_sets(std::span<const SampleSet> sets, const std::filesystem::path& path) {
  std::vector<json> out;
  out.reserve(sets.size());
  for (const SampleSet& s : sets) {
    out.push_back({{"id", s.id}, {"query", s.query}, {"samples", s.samples}});
  }
  write_lines(out, path);
}

}  // namespace selfcheck
