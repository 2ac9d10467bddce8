#include "selfcheck/nli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <selfcheck/prompt_assets.hpp>

#include "parallel.hpp"
#include "selfcheck/journal.hpp"

namespace selfcheck {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

NliPrediction parse_classifier_body(const std::string& body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ProtocolError("NLI classifier response is not a JSON object");
  }
  if (const auto probs = doc.find("probabilities"); probs != doc.end()) {
    VerdictDistribution dist{};
    if (probs->is_array() && probs->size() == 3) {
      for (std::size_t i = 0; i < 3; ++i) {
        if (!(*probs)[i].is_number()) throw ProtocolError("NLI probabilities must be numbers");
        dist[i] = (*probs)[i].get<double>();
      }
    } else if (probs->is_object()) {
      const char* keys[3] = {"entailment", "neutral", "contradiction"};
      for (std::size_t i = 0; i < 3; ++i) {
        const auto it = probs->find(keys[i]);
        if (it == probs->end() || !it->is_number()) {
          throw ProtocolError(std::string("NLI probabilities missing '") + keys[i] + "'");
        }
        dist[i] = it->get<double>();
      }
    } else {
      throw ProtocolError("NLI probabilities must be an object or a 3-element array");
    }
    return prediction_from_distribution(dist);
  }
  if (const auto label = doc.find("label"); label != doc.end() && label->is_string()) {
    return NliPrediction{parse_verdict_name(label->get<std::string>()), std::nullopt};
  }
  throw ProtocolError("NLI classifier response has neither 'label' nor 'probabilities'");
}

}  // namespace

std::string_view verdict_name(NliVerdict verdict) {
  switch (verdict) {
    case NliVerdict::Entailment: return "entailment";
    case NliVerdict::Neutral: return "neutral";
    case NliVerdict::Contradiction: return "contradiction";
  }
  return "neutral";
}

NliVerdict parse_verdict_name(std::string_view text) {
  const std::string key = lower(text);
  if (key == "entailment") return NliVerdict::Entailment;
  if (key == "neutral") return NliVerdict::Neutral;
  if (key == "contradiction") return NliVerdict::Contradiction;
  throw ProtocolError("unknown NLI verdict '" + std::string(text) + "'");
}

double map_verdict_score(NliVerdict verdict) noexcept {
  switch (verdict) {
    case NliVerdict::Entailment: return 0.0;
    case NliVerdict::Neutral: return 0.5;
    case NliVerdict::Contradiction: return 1.0;
  }
  return 0.5;
}

NliPrediction prediction_from_distribution(const VerdictDistribution& distribution) {
  double total = 0.0;
  for (double p : distribution) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ProtocolError("NLI probability out of range");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ProtocolError("NLI probabilities sum to " + std::to_string(total) + ", expected 1");
  }
  const auto best = std::max_element(distribution.begin(), distribution.end());
  const auto index = static_cast<int>(best - distribution.begin());
  return NliPrediction{static_cast<NliVerdict>(index), distribution};
}

struct RemoteClassifier::Impl {
  GenerationConfig config;
  RunJournal* journal;
  std::string scheme_host_port;
  std::string path;
  std::string api_key;
  std::counting_semaphore<> in_flight;

  Impl(GenerationConfig c, RunJournal* j)
      : config(std::move(c)), journal(j), in_flight(std::max(1, config.max_in_flight)) {}
};

RemoteClassifier::RemoteClassifier(GenerationConfig config, RunJournal* journal)
    : impl_(std::make_unique<Impl>(std::move(config), journal)) {
  const std::string& url = impl_->config.endpoint_url;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("NLI classifier URL needs a scheme: '" + url + "'");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  impl_->scheme_host_port = url.substr(0, path_start);
  impl_->path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (!impl_->config.api_key_env.empty()) {
    if (const char* key = std::getenv(impl_->config.api_key_env.c_str())) impl_->api_key = key;
  }
  if (journal) journal->add_secret(impl_->api_key);
}

RemoteClassifier::~RemoteClassifier() = default;

std::size_t RemoteClassifier::max_in_flight() const {
  return static_cast<std::size_t>(std::max(1, impl_->config.max_in_flight));
}

NliPrediction RemoteClassifier::classify(const std::string& premise, const std::string& hypothesis) {
  const std::string body = json{{"premise", premise}, {"hypothesis", hypothesis}}.dump();
  httplib::Headers headers;
  if (!impl_->api_key.empty()) headers.emplace("Authorization", "Bearer " + impl_->api_key);

  int last_status = 0;
  std::string last_error;
  const int attempts = impl_->config.max_retries + 1;
  auto delay = impl_->config.initial_backoff;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Result result{nullptr, httplib::Error::Unknown};
    impl_->in_flight.acquire();
    try {
      httplib::Client http(impl_->scheme_host_port);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(impl_->config.timeout);
      http.set_connection_timeout(secs.count() > 0 ? secs.count() : 1, 0);
      http.set_read_timeout(secs.count() > 0 ? secs.count() : 1, 0);
      result = http.Post(impl_->path, headers, body, "application/json");
    } catch (...) {
      impl_->in_flight.release();
      throw;
    }
    impl_->in_flight.release();

    if (result && result->status == 200) {
      if (impl_->journal && impl_->config.verbose) {
        impl_->journal->record("nli_response", json{{"body", result->body}}.dump());
      }
      return parse_classifier_body(result->body);
    }
    last_status = result ? result->status : 0;
    last_error = result ? "HTTP " + std::to_string(last_status) : httplib::to_string(result.error());
    const bool retry = last_status == 0 || last_status == 429 || last_status >= 500;
    if (!retry || attempt == attempts) break;
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, impl_->config.max_backoff);
  }
  throw TransportError(last_status, "NLI classifier request failed: " + last_error);
}

std::string render_nli_prompt(PromptMode mode, std::string_view sentence, std::string_view sample) {
  const std::string_view tmpl =
      mode == PromptMode::ZeroShot ? assets::k_nli_zero_shot : assets::k_nli_chain_of_thought;
  return render_template(tmpl, {{"sentence", sentence}, {"sample", sample}});
}

NliVerdict parse_nli_reply(std::string_view reply) {
  const std::string text = lower(reply);
  if (text.find("contradict") != std::string::npos || text.find("disagree") != std::string::npos) {
    return NliVerdict::Contradiction;
  }
  if (text.find("agree") != std::string::npos || text.find("entail") != std::string::npos) {
    return NliVerdict::Entailment;
  }
  return NliVerdict::Neutral;
}

NliPrediction PromptedLlm::classify(const std::string& premise, const std::string& hypothesis) {
  const std::string prompt = render_nli_prompt(mode_, hypothesis, premise);
  const ChatReply reply = completer_.complete(ChatRequest{std::nullopt, prompt});
  return NliPrediction{parse_nli_reply(reply.text), std::nullopt};
}

JudgmentScore score_sentence_nli(const std::string& sentence, std::span<const std::string> passages,
                                 NliBackend& backend, VerdictReduction reduction,
                                 RunJournal* journal) {
  if (passages.empty()) throw DataError("NLI scoring needs at least one passage");
  JudgmentScore out;
  out.per_sample.assign(passages.size(), 0.5);
  std::vector<char> failed(passages.size(), 0);
  detail::parallel_for(passages.size(), backend.max_in_flight(), [&](std::size_t j) {
    try {
      const NliPrediction prediction = backend.classify(passages[j], sentence);
      if (reduction == VerdictReduction::ExpectedScore && prediction.distribution) {
        const auto& d = *prediction.distribution;
        out.per_sample[j] = 0.0 * d[0] + 0.5 * d[1] + 1.0 * d[2];
      } else {
        out.per_sample[j] = map_verdict_score(prediction.verdict);
      }
    } catch (const Error& e) {
      if (e.category() != Error::Category::Transport) throw;
      failed[j] = 1;
      if (journal) {
        journal->record("nli_failure", json{{"passage", j}, {"error", e.what()}}.dump());
      }
    }
  });
  out.failed_samples = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  out.score = mean(out.per_sample);
  return out;
}

}  // namespace selfcheck
