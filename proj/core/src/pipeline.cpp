#include "selfcheck/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <unordered_map>

#include <json.hpp>
#include <openssl/evp.h>

#include "selfcheck/consistency.hpp"
#include "selfcheck/datasets.hpp"
#include "selfcheck/journal.hpp"

namespace selfcheck {

using nlohmann::json;

namespace {

std::string key_of(std::string name) {
  for (char& c : name) {
    if (c == '_') c = '-';
  }
  return name;
}

LoadReport load_dataset(const RunConfig& config) {
  return config.kind == DatasetKind::WikiBio ? load_wikibio(config.dataset)
                                             : load_aime(config.dataset);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

RecordScores score_semantic(const PassageRecord& record, const RunConfig& config,
                            const EmbeddingTable* table) {
  const FrequencyModel model =
      FrequencyModel::build(record.samples, record.target_text, config.k, config.target_counting);
  SemanticScorer scorer(model, table, config.theta);
  std::vector<std::string> sentences;
  for (const SentenceRecord& s : record.sentences) sentences.push_back(s.text);
  const DocumentNll doc = scorer.score_document(sentences);

  RecordScores out;
  out.id = record.id;
  out.granularity = record.granularity;
  auto& avg = out.sentence_extras["avg_nll"];
  for (std::size_t i = 0; i < doc.per_sentence.size(); ++i) {
    JudgmentScore score;
    score.sentence_index = i;
    score.score = doc.per_sentence[i].max_nll;
    out.sentences.push_back(std::move(score));
    avg.push_back(doc.per_sentence[i].avg_nll);
  }
  out.passage_extras["doc_avg_nll"] = doc.doc_avg_nll;
  out.passage_extras["doc_max_avg_nll"] = doc.doc_max_avg_nll;
  return out;
}

void write_atomically(const std::filesystem::path& partial, const std::filesystem::path& final_path) {
  std::filesystem::rename(partial, final_path);
}

}  // namespace

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "wikibio") return DatasetKind::WikiBio;
  if (text == "aime") return DatasetKind::Aime;
  throw ConfigError("unknown dataset kind '" + std::string(text) + "' (expected wikibio or aime)");
}

Method parse_method(std::string_view text) {
  if (text == "semantic") return Method::Semantic;
  if (text == "nli") return Method::Nli;
  if (text == "consistency") return Method::Consistency;
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected semantic, nli or consistency)");
}

NliBackendKind parse_nli_backend(std::string_view text) {
  if (text == "prompted") return NliBackendKind::Prompted;
  if (text == "remote") return NliBackendKind::Remote;
  throw ConfigError("unknown NLI backend '" + std::string(text) + "' (expected prompted or remote)");
}

VerdictReduction parse_verdict_reduction(std::string_view text) {
  if (text == "argmax") return VerdictReduction::Argmax;
  if (text == "expected") return VerdictReduction::ExpectedScore;
  throw ConfigError("unknown NLI reduction '" + std::string(text) + "' (expected argmax or expected)");
}

GenerationConfig default_generation_config() { return GenerationConfig{}; }

void RunConfig::validate_for_scoring() const {
  if (dataset.empty()) throw ConfigError("--dataset is required");
  if (method == Method::Semantic) {
    if (!embeddings && !no_embeddings) {
      throw ConfigError("method semantic needs --embeddings, or --no-embeddings for the unigram baseline");
    }
    if (embeddings && no_embeddings) {
      throw ConfigError("--embeddings and --no-embeddings are mutually exclusive");
    }
    if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("--theta must lie in (0, 1]");
    if (!(k > 0.0)) throw ConfigError("--k must be positive");
  } else if (method == Method::Nli && nli_backend == NliBackendKind::Remote) {
    if (nli_endpoint.empty()) throw ConfigError("--nli-backend remote needs --nli-endpoint");
  } else {
    generation.validate();
  }
}

std::string RunConfig::to_json() const {
  json doc;
  doc["dataset"] = dataset.string();
  doc["kind"] = kind == DatasetKind::WikiBio ? "wikibio" : "aime";
  doc["method"] = method == Method::Semantic ? "semantic"
                  : method == Method::Nli    ? "nli"
                                             : "consistency";
  doc["prompt_mode"] = prompt_mode_name(prompt_mode);
  doc["prompt_template_version"] = prompt_template_version();
  doc["endpoint"] = generation.endpoint_url;
  doc["model"] = generation.model_name;
  doc["temperature"] = generation.temperature;
  doc["max_tokens"] = generation.max_tokens;
  doc["num_samples"] = generation.num_samples;
  doc["timeout_ms"] = generation.timeout.count();
  doc["max_retries"] = generation.max_retries;
  doc["max_in_flight"] = generation.max_in_flight;
  doc["api_key_env"] = generation.api_key_env;
  doc["cache"] = generation.cache_path ? json(generation.cache_path->string()) : json(nullptr);
  doc["embeddings"] = embeddings ? json(embeddings->string()) : json(nullptr);
  doc["no_embeddings"] = no_embeddings;
  doc["theta"] = theta;
  doc["k"] = k;
  doc["target_counting"] =
      target_counting == TargetCounting::PerOccurrence ? "per_occurrence" : "per_type";
  doc["nli_backend"] = nli_backend == NliBackendKind::Prompted ? "prompted" : "remote";
  doc["nli_endpoint"] = nli_endpoint;
  doc["nli_reduction"] = nli_reduction == VerdictReduction::Argmax ? "argmax" : "expected";
  doc["out"] = out_dir.string();
  doc["verbose"] = verbose;
  doc["seeded_choice"] = seeded_choice ? json(*seeded_choice) : json(nullptr);
  doc["judge_fallback"] = judge_fallback;
  doc["limit"] = limit ? json(*limit) : json(nullptr);
  doc["threshold"] = threshold;
  return doc.dump();
}

void merge_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ConfigError("config file " + path.string() + " is not a JSON object");
  }
  for (const auto& [raw_key, value] : doc.items()) {
    const std::string key = key_of(raw_key);
    try {
      if (key == "dataset") config.dataset = value.get<std::string>();
      else if (key == "kind") config.kind = parse_dataset_kind(value.get<std::string>());
      else if (key == "method") config.method = parse_method(value.get<std::string>());
      else if (key == "prompt-mode") config.prompt_mode = parse_prompt_mode(value.get<std::string>());
      else if (key == "endpoint") config.generation.endpoint_url = value.get<std::string>();
      else if (key == "model") config.generation.model_name = value.get<std::string>();
      else if (key == "temperature") config.generation.temperature = value.get<double>();
      else if (key == "max-tokens") config.generation.max_tokens = value.get<int>();
      else if (key == "num-samples") {
        config.generation.num_samples = value.get<int>();
        config.num_samples_explicit = true;
      }
      else if (key == "timeout-ms") config.generation.timeout = std::chrono::milliseconds(value.get<long long>());
      else if (key == "max-retries") config.generation.max_retries = value.get<int>();
      else if (key == "max-in-flight") config.generation.max_in_flight = value.get<int>();
      else if (key == "api-key-env") config.generation.api_key_env = value.get<std::string>();
      else if (key == "cache") config.generation.cache_path = value.get<std::string>();
      else if (key == "embeddings") config.embeddings = value.get<std::string>();
      else if (key == "no-embeddings") config.no_embeddings = value.get<bool>();
      else if (key == "theta") config.theta = value.get<double>();
      else if (key == "k") config.k = value.get<double>();
      else if (key == "target-counting") {
        const std::string v = value.get<std::string>();
        if (v == "per-occurrence" || v == "per_occurrence") config.target_counting = TargetCounting::PerOccurrence;
        else if (v == "per-type" || v == "per_type") config.target_counting = TargetCounting::PerType;
        else throw ConfigError("unknown target counting '" + v + "'");
      }
      else if (key == "nli-backend") config.nli_backend = parse_nli_backend(value.get<std::string>());
      else if (key == "nli-endpoint") config.nli_endpoint = value.get<std::string>();
      else if (key == "nli-reduction") config.nli_reduction = parse_verdict_reduction(value.get<std::string>());
      else if (key == "out") config.out_dir = value.get<std::string>();
      else if (key == "verbose") config.verbose = value.get<bool>();
      else if (key == "seeded-choice") config.seeded_choice = value.get<std::uint64_t>();
      else if (key == "judge-fallback") config.judge_fallback = value.get<bool>();
      else if (key == "limit") config.limit = value.get<std::size_t>();
      else if (key == "threshold") config.threshold = value.get<double>();
      else throw ConfigError("unknown config key '" + raw_key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + raw_key + "': " + e.what());
    }
  }
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof buffer);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

ScoreSummary run_score(const RunConfig& config) {
  config.validate_for_scoring();
  std::filesystem::create_directories(config.out_dir);
  ScoreSummary summary;
  summary.scores_path = config.out_dir / "scores.jsonl";
  summary.journal_path = config.out_dir / "journal.jsonl";
  RunJournal journal(summary.journal_path);

  const auto started = std::chrono::steady_clock::now();
  journal.record("run_start", json{{"command", "score"},
                                   {"config", json::parse(config.to_json())},
                                   {"dataset_sha256", file_sha256(config.dataset)}}
                                  .dump());

  LoadReport loaded = load_dataset(config);
  for (const std::string& w : loaded.warnings) journal.record("dataset_warning", json(w).dump());
  std::vector<PassageRecord> records = std::move(loaded.records);
  if (config.limit && *config.limit < records.size()) records.resize(*config.limit);
  journal.record("dataset_loaded", json{{"records", records.size()},
                                        {"load_ms", elapsed_ms(started)}}
                                       .dump());

  std::optional<EmbeddingTable> table;
  std::unique_ptr<LlmClient> client;
  std::unique_ptr<NliBackend> nli;
  if (config.method == Method::Semantic) {
    if (config.embeddings) {
      const auto t0 = std::chrono::steady_clock::now();
      table.emplace(load_embeddings(*config.embeddings));
      journal.record("embeddings_loaded", json{{"tokens", table->size()},
                                               {"dimension", table->dimension()},
                                               {"load_ms", elapsed_ms(t0)}}
                                              .dump());
    }
  } else if (config.method == Method::Nli && config.nli_backend == NliBackendKind::Remote) {
    GenerationConfig remote = config.generation;
    remote.endpoint_url = config.nli_endpoint;
    remote.verbose = config.verbose;
    nli = std::make_unique<RemoteClassifier>(remote, &journal);
  } else {
    GenerationConfig gen = config.generation;
    gen.verbose = config.verbose;
    client = std::make_unique<LlmClient>(gen, &journal);
    if (config.method == Method::Nli) {
      nli = std::make_unique<PromptedLlm>(*client, config.prompt_mode);
    }
  }

  const auto scoring_start = std::chrono::steady_clock::now();
  std::size_t judge_calls = 0;
  for (const PassageRecord& record : records) {
    record.validate_for_scoring();
    RecordScores row;
    if (config.method == Method::Semantic) {
      row = score_semantic(record, config, table ? &*table : nullptr);
    } else {
      row.id = record.id;
      row.granularity = record.granularity;
      for (std::size_t i = 0; i < record.sentences.size(); ++i) {
        JudgmentScore s =
            config.method == Method::Consistency
                ? score_sentence_consistency(record.sentences[i].text, record.samples, *client,
                                             config.prompt_mode, &journal)
                : score_sentence_nli(record.sentences[i].text, record.samples, *nli,
                                     config.nli_reduction, &journal);
        s.sentence_index = i;
        summary.failed_samples += s.failed_samples;
        judge_calls += record.samples.size();
        row.sentences.push_back(std::move(s));
      }
    }
    summary.sentences += row.sentences.size();
    summary.scores.push_back(std::move(row));
  }
  summary.records = records.size();

  export_scores(records, summary.scores, summary.scores_path);
  journal.record("run_end", json{{"records", summary.records},
                                 {"sentences", summary.sentences},
                                 {"failed_samples", summary.failed_samples},
                                 {"scoring_ms", elapsed_ms(scoring_start)},
                                 {"total_ms", elapsed_ms(started)},
                                 {"scores", summary.scores_path.string()},
                                 {"scores_sha256", file_sha256(summary.scores_path)}}
                                .dump());
  // A run in which no judge call succeeded carries no signal; the scores are
  // kept for inspection but the run fails.
  if (judge_calls > 0 && summary.failed_samples == judge_calls) {
    throw TransportError(0, "all " + std::to_string(judge_calls) +
                                " judge calls failed; scores written to " +
                                summary.scores_path.string() + " are placeholders");
  }
  return summary;
}

EvalOutcome run_eval(const std::filesystem::path& scores_path, const RunConfig& config,
                     bool write_report) {
  if (config.dataset.empty()) throw ConfigError("--dataset is required");
  const std::vector<RecordScores> scores = load_scores(scores_path);
  if (scores.empty()) throw DataError(scores_path.string() + ": no scored records");
  LoadReport loaded = load_dataset(config);

  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < loaded.records.size(); ++i) by_id.emplace(loaded.records[i].id, i);
  std::vector<PassageRecord> aligned;
  aligned.reserve(scores.size());
  for (const RecordScores& row : scores) {
    const auto it = by_id.find(row.id);
    if (it == by_id.end()) {
      throw DataError("score row '" + row.id + "' has no matching dataset record");
    }
    const PassageRecord& record = loaded.records[it->second];
    if (record.sentences.size() != row.sentences.size()) {
      throw DataError("score row '" + row.id + "' has " + std::to_string(row.sentences.size()) +
                      " sentences, dataset has " + std::to_string(record.sentences.size()));
    }
    aligned.push_back(record);
  }

  EvalOutcome outcome;
  outcome.report = evaluate_run(aligned, scores, config.threshold);
  if (write_report) {
    std::filesystem::create_directories(config.out_dir);
    outcome.report_path = config.out_dir / "report.json";
    std::ofstream out(*outcome.report_path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + outcome.report_path->string());
    out << report_to_json(outcome.report) << '\n';
  }
  return outcome;
}

std::filesystem::path run_sample(const RunConfig& config, const std::filesystem::path& queries) {
  config.generation.validate();
  const std::vector<QueryRecord> rows = read_queries(queries);
  std::filesystem::create_directories(config.out_dir);
  RunJournal journal(config.out_dir / "journal.jsonl");
  journal.record("run_start", json{{"command", "sample"},
                                   {"config", json::parse(config.to_json())},
                                   {"queries_sha256", file_sha256(queries)}}
                                  .dump());
  GenerationConfig gen = config.generation;
  gen.verbose = config.verbose;
  LlmClient client(gen, &journal);

  const auto final_path = config.out_dir / "samples.jsonl";
  const auto partial_path = config.out_dir / "samples.jsonl.partial";
  std::vector<SampleSet> sets;
  std::ofstream partial(partial_path, std::ios::trunc);
  for (const QueryRecord& q : rows) {
    SampleSet set{q.id, q.query, {}};
    set.samples = client.sample_n(ChatRequest{std::nullopt, q.query},
                                  static_cast<std::size_t>(gen.num_samples));
    partial << json{{"id", set.id}, {"query", set.query}, {"samples", set.samples}}.dump() << '\n';
    partial.flush();
    sets.push_back(std::move(set));
  }
  partial.close();
  write_sample_sets(sets, partial_path);
  write_atomically(partial_path, final_path);
  journal.record("run_end", json{{"sets", sets.size()}, {"output", final_path.string()}}.dump());
  return final_path;
}

BuildSummary run_build_aime(const RunConfig& config, const std::filesystem::path& problems) {
  GenerationConfig gen = config.generation;
  gen.verbose = config.verbose;
  gen.validate();
  std::vector<AimeRow> rows = read_aime_rows(problems);
  std::filesystem::create_directories(config.out_dir);
  RunJournal journal(config.out_dir / "journal.jsonl");
  journal.record("run_start", json{{"command", "build-aime"},
                                   {"config", json::parse(config.to_json())},
                                   {"problems_sha256", file_sha256(problems)}}
                                  .dump());
  LlmClient client(gen, &journal);

  AimeBuildOptions options;
  options.num_samples = config.num_samples_explicit ? static_cast<std::size_t>(gen.num_samples) : 5;
  options.seeded_choice = config.seeded_choice;
  options.judge_fallback = config.judge_fallback;

  BuildSummary summary;
  summary.rows_path = config.out_dir / "aime_rows.jsonl";
  summary.review_path = config.out_dir / "review_queue.jsonl";
  const auto partial_path = config.out_dir / "aime_rows.jsonl.partial";
  std::ofstream partial(partial_path, std::ios::trunc);
  std::mutex partial_mutex;
  const auto on_row = [&](const AimeRow& row) {
    std::lock_guard lock(partial_mutex);
    const AimeRow one[] = {row};
    const auto tmp = partial_path.string() + ".row";
    write_aime_rows(one, tmp);
    std::ifstream in(tmp);
    partial << in.rdbuf();
    partial.flush();
    std::filesystem::remove(tmp);
  };

  AimeBuildResult result;
  try {
    result = build_aime_samples(std::move(rows), client, options, on_row);
  } catch (const Error& e) {
    journal.record("run_failed", json{{"error", e.what()}, {"partial", partial_path.string()}}.dump());
    throw;
  }
  partial.close();
  write_aime_rows(result.rows, partial_path);
  write_atomically(partial_path, summary.rows_path);
  write_aime_rows(result.review_queue, summary.review_path);
  summary.rows = result.rows.size();
  summary.review = result.review_queue.size();
  journal.record("run_end", json{{"rows", summary.rows}, {"review_queue", summary.review}}.dump());
  return summary;
}

}  // namespace selfcheck
