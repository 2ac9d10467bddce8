#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "selfcheck/errors.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/pipeline.hpp"

namespace {

using selfcheck::RunConfig;

constexpr int k_exit_ok = 0;
constexpr int k_exit_config = 1;
constexpr int k_exit_data = 2;
constexpr int k_exit_transport = 3;

// Raw flag values. Only flags the user actually passed override the
// config file, which in turn overrides built-in defaults.
struct Flags {
  std::string config_file;
  std::string dataset;
  std::string kind;
  std::string method;
  std::string prompt_mode;
  std::string endpoint;
  std::string model;
  double temperature = 0;
  int max_tokens = 0;
  int num_samples = 0;
  int max_in_flight = 0;
  int max_retries = 0;
  std::string cache;
  std::string embeddings;
  bool no_embeddings = false;
  double theta = 0;
  double k = 0;
  std::string target_counting;
  std::string nli_backend;
  std::string nli_endpoint;
  std::string nli_reduction;
  std::string out;
  std::uint64_t seeded_choice = 0;
  bool judge_fallback = false;
  bool verbose = false;
  std::size_t limit = 0;
  double threshold = 0;
  std::string scores;
  std::string queries;
  std::string problems;
};

struct Options {
  CLI::Option* config_file = nullptr;
  CLI::Option* dataset = nullptr;
  CLI::Option* kind = nullptr;
  CLI::Option* method = nullptr;
  CLI::Option* prompt_mode = nullptr;
  CLI::Option* endpoint = nullptr;
  CLI::Option* model = nullptr;
  CLI::Option* temperature = nullptr;
  CLI::Option* max_tokens = nullptr;
  CLI::Option* num_samples = nullptr;
  CLI::Option* max_in_flight = nullptr;
  CLI::Option* max_retries = nullptr;
  CLI::Option* cache = nullptr;
  CLI::Option* embeddings = nullptr;
  CLI::Option* no_embeddings = nullptr;
  CLI::Option* theta = nullptr;
  CLI::Option* k = nullptr;
  CLI::Option* target_counting = nullptr;
  CLI::Option* nli_backend = nullptr;
  CLI::Option* nli_endpoint = nullptr;
  CLI::Option* nli_reduction = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* seeded_choice = nullptr;
  CLI::Option* judge_fallback = nullptr;
  CLI::Option* verbose = nullptr;
  CLI::Option* limit = nullptr;
  CLI::Option* threshold = nullptr;
};

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

void add_common(CLI::App& cmd, Flags& f, Options& o) {
  o.config_file = cmd.add_option("--config", f.config_file, "JSON config file");
  o.out = cmd.add_option("--out", f.out, "Output directory (default selfcheck-out)");
  o.verbose = cmd.add_flag("--verbose", f.verbose, "Journal request and response bodies");
}

void add_dataset(CLI::App& cmd, Flags& f, Options& o) {
  o.dataset = cmd.add_option("--dataset", f.dataset, "Dataset JSONL file");
  o.kind = cmd.add_option("--kind", f.kind, "Dataset kind: wikibio or aime");
}

void add_generation(CLI::App& cmd, Flags& f, Options& o) {
  o.endpoint = cmd.add_option("--endpoint", f.endpoint, "Chat-completions endpoint URL");
  o.model = cmd.add_option("--model", f.model, "Model name");
  o.temperature = cmd.add_option("--temperature", f.temperature, "Sampling temperature (default 0.6)");
  o.max_tokens = cmd.add_option("--max-tokens", f.max_tokens, "Completion token limit (default 2048)");
  o.num_samples = cmd.add_option("--num-samples", f.num_samples, "Samples per query");
  o.max_in_flight = cmd.add_option("--max-in-flight", f.max_in_flight, "Concurrent request bound (default 4)");
  o.max_retries = cmd.add_option("--max-retries", f.max_retries, "Retries per request (default 3)");
  o.cache = cmd.add_option("--cache", f.cache, "Response cache file");
}

RunConfig resolve(const Flags& f, const Options& o) {
  RunConfig c;
  if (given(o.config_file)) selfcheck::merge_config_file(c, f.config_file);

  if (given(o.dataset)) c.dataset = f.dataset;
  if (given(o.kind)) c.kind = selfcheck::parse_dataset_kind(f.kind);
  if (given(o.method)) c.method = selfcheck::parse_method(f.method);
  if (given(o.prompt_mode)) c.prompt_mode = selfcheck::parse_prompt_mode(f.prompt_mode);
  if (given(o.endpoint)) c.generation.endpoint_url = f.endpoint;
  if (given(o.model)) c.generation.model_name = f.model;
  if (given(o.temperature)) c.generation.temperature = f.temperature;
  if (given(o.max_tokens)) c.generation.max_tokens = f.max_tokens;
  if (given(o.num_samples)) {
    c.generation.num_samples = f.num_samples;
    c.num_samples_explicit = true;
  }
  if (given(o.max_in_flight)) c.generation.max_in_flight = f.max_in_flight;
  if (given(o.max_retries)) c.generation.max_retries = f.max_retries;
  if (given(o.cache)) c.generation.cache_path = f.cache;
  if (given(o.embeddings)) c.embeddings = f.embeddings;
  if (given(o.no_embeddings)) c.no_embeddings = f.no_embeddings;
  if (given(o.theta)) c.theta = f.theta;
  if (given(o.k)) c.k = f.k;
  if (given(o.target_counting)) {
    if (f.target_counting == "per-occurrence") {
      c.target_counting = selfcheck::TargetCounting::PerOccurrence;
    } else if (f.target_counting == "per-type") {
      c.target_counting = selfcheck::TargetCounting::PerType;
    } else {
      throw selfcheck::ConfigError("unknown --target-counting '" + f.target_counting +
                                   "' (expected per-occurrence or per-type)");
    }
  }
  if (given(o.nli_backend)) c.nli_backend = selfcheck::parse_nli_backend(f.nli_backend);
  if (given(o.nli_endpoint)) c.nli_endpoint = f.nli_endpoint;
  if (given(o.nli_reduction)) c.nli_reduction = selfcheck::parse_verdict_reduction(f.nli_reduction);
  if (given(o.out)) c.out_dir = f.out;
  if (given(o.seeded_choice)) c.seeded_choice = f.seeded_choice;
  if (given(o.judge_fallback)) c.judge_fallback = f.judge_fallback;
  if (given(o.verbose)) c.verbose = f.verbose;
  if (given(o.limit)) c.limit = f.limit;
  if (given(o.threshold)) c.threshold = f.threshold;
  return c;
}

int exit_code_for(const selfcheck::Error& e) {
  switch (e.category()) {
    case selfcheck::Error::Category::Config:
      return k_exit_config;
    case selfcheck::Error::Category::Data:
      return k_exit_data;
    case selfcheck::Error::Category::Transport:
      return k_exit_transport;
  }
  return k_exit_data;
}

const char* category_name(const selfcheck::Error& e) {
  switch (e.category()) {
    case selfcheck::Error::Category::Config:
      return "config";
    case selfcheck::Error::Category::Data:
      return "data";
    case selfcheck::Error::Category::Transport:
      return "transport";
  }
  return "data";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based hallucination detection: score, evaluate, sample, build AIME rows"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "selfcheck 0.1.0");

  Flags f;
  Options score_o, eval_o, sample_o, build_o;

  CLI::App* score = app.add_subcommand("score", "Score every record of a dataset");
  add_common(*score, f, score_o);
  add_dataset(*score, f, score_o);
  add_generation(*score, f, score_o);
  score_o.method = score->add_option("--method", f.method, "semantic, nli or consistency");
  score_o.prompt_mode = score->add_option("--prompt-mode", f.prompt_mode, "zs or cot");
  score_o.embeddings = score->add_option("--embeddings", f.embeddings, "word2vec table (.bin binary, else text)");
  score_o.no_embeddings = score->add_flag("--no-embeddings", f.no_embeddings, "Unigram baseline: singleton neighborhoods");
  score_o.theta = score->add_option("--theta", f.theta, "Neighborhood cosine threshold (default 0.9)");
  score_o.k = score->add_option("--k", f.k, "Smoothing constant (default 1)");
  score_o.target_counting = score->add_option("--target-counting", f.target_counting, "per-occurrence or per-type");
  score_o.nli_backend = score->add_option("--nli-backend", f.nli_backend, "prompted or remote");
  score_o.nli_endpoint = score->add_option("--nli-endpoint", f.nli_endpoint, "Remote classifier URL");
  score_o.nli_reduction = score->add_option("--nli-reduction", f.nli_reduction, "argmax or expected");
  score_o.limit = score->add_option("--limit", f.limit, "Score only the first N records");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a score file against its dataset");
  add_common(*eval, f, eval_o);
  add_dataset(*eval, f, eval_o);
  eval->add_option("--scores", f.scores, "Score file written by 'score'")->required();
  eval_o.threshold = eval->add_option("--threshold", f.threshold, "Decision threshold for P/R/F1 (default 0.5)");

  CLI::App* sample = app.add_subcommand("sample", "Draw sampled completions for a query file");
  add_common(*sample, f, sample_o);
  add_generation(*sample, f, sample_o);
  sample->add_option("--queries", f.queries, "JSONL with {id?, query}")->required();

  CLI::App* build = app.add_subcommand("build-aime", "Generate AIME rows with preliminary labels");
  add_common(*build, f, build_o);
  add_generation(*build, f, build_o);
  build->add_option("--problems", f.problems, "AIME problem JSONL")->required();
  build_o.seeded_choice = build->add_option("--seeded-choice", f.seeded_choice, "Seed for choosing the target solution");
  build_o.judge_fallback = build->add_flag("--judge-fallback", f.judge_fallback, "Ask the model when no final answer parses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? k_exit_ok : k_exit_config;
  }

  try {
    if (score->parsed()) {
      const RunConfig config = resolve(f, score_o);
      const selfcheck::ScoreSummary s = selfcheck::run_score(config);
      std::cout << "scored " << s.records << " records, " << s.sentences << " sentences";
      if (s.failed_samples > 0) std::cout << ", " << s.failed_samples << " failed judge calls";
      std::cout << "\nscores: " << s.scores_path.string() << "\njournal: " << s.journal_path.string()
                << '\n';
    } else if (eval->parsed()) {
      const RunConfig config = resolve(f, eval_o);
      const selfcheck::EvalOutcome outcome = selfcheck::run_eval(f.scores, config, true);
      std::cout << selfcheck::format_report(outcome.report);
      if (outcome.report_path) std::cout << "report: " << outcome.report_path->string() << '\n';
    } else if (sample->parsed()) {
      const RunConfig config = resolve(f, sample_o);
      std::cout << "samples: " << selfcheck::run_sample(config, f.queries).string() << '\n';
    } else if (build->parsed()) {
      const RunConfig config = resolve(f, build_o);
      const selfcheck::BuildSummary s = selfcheck::run_build_aime(config, f.problems);
      std::cout << "built " << s.rows << " rows, " << s.review << " queued for review\nrows: "
                << s.rows_path.string() << "\nreview queue: " << s.review_path.string() << '\n';
    }
  } catch (const selfcheck::Error& e) {
    std::cerr << "selfcheck: " << category_name(e) << " error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "selfcheck: data error: " << e.what() << '\n';
    return k_exit_data;
  } catch (const std::exception& e) {
    std::cerr << "selfcheck: data error: " << e.what() << '\n';
    return k_exit_data;
  }
  return k_exit_ok;
}
