#include "selfcheck/llm_client.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "parallel.hpp"
#include "selfcheck/journal.hpp"

namespace selfcheck {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_endpoint(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL needs a scheme: '" + url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  const std::string suffix = "/chat/completions";
  if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0) {
    path += suffix;
  }
  out.path = path;
  return out;
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

// FNV-1a, stable across platforms and runs.
std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

ChatReply parse_reply(const std::string& body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ProtocolError("chat completion response is not a JSON object");
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw ProtocolError("chat completion response has no choices");
  }
  const json& first = (*choices)[0];
  ChatReply reply;
  const auto message = first.find("message");
  if (message == first.end() || !message->is_object()) {
    throw ProtocolError("chat completion choice has no message");
  }
  const auto content = message->find("content");
  if (content != message->end() && content->is_string()) {
    reply.text = content->get<std::string>();
  } else if (content != message->end() && !content->is_null()) {
    throw ProtocolError("chat completion message content is not a string");
  }
  reply.empty_content = reply.text.empty();
  if (const auto fr = first.find("finish_reason"); fr != first.end() && fr->is_string()) {
    reply.finish_reason = fr->get<std::string>();
  }
  if (const auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
    reply.prompt_tokens = usage->value("prompt_tokens", 0);
    reply.completion_tokens = usage->value("completion_tokens", 0);
  }
  return reply;
}

}  // namespace

void GenerationConfig::validate() const {
  if (endpoint_url.empty()) throw ConfigError("endpoint URL is required");
  parse_endpoint(endpoint_url);
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (num_samples < 1) throw ConfigError("num_samples must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
}

std::vector<std::string> Completer::sample_n(const ChatRequest& request, std::size_t n) {
  if (n == 0) throw ConfigError("sample_n: n must be >= 1");
  std::vector<std::optional<std::string>> results(n);
  std::mutex mutex;
  std::optional<TransportError> failure;
  detail::parallel_for(n, max_in_flight(), [&](std::size_t i) {
    try {
      results[i] = complete(request).text;
    } catch (const TransportError& e) {
      std::lock_guard lock(mutex);
      if (!failure) failure.emplace(e);
    } catch (const ProtocolError& e) {
      std::lock_guard lock(mutex);
      if (!failure) failure.emplace(0, e.what());
    }
  });
  if (failure) {
    throw SampleBatchError(failure->last_status(),
                           std::string("sample batch failed: ") + failure->what(),
                           std::move(results));
  }
  std::vector<std::string> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::string chat_request_body(const GenerationConfig& config, const ChatRequest& request) {
  json messages = json::array();
  if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  json body;
  body["model"] = config.model_name;
  body["messages"] = std::move(messages);
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_tokens;
  return body.dump();
}

// Append-only file of {"key", "text"} lines.
struct LlmClient::Cache {
  std::filesystem::path path;
  std::map<std::string, std::string> entries;
  std::mutex mutex;

  explicit Cache(std::filesystem::path p) : path(std::move(p)) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      const json row = json::parse(line, nullptr, false);
      if (row.is_object() && row.contains("key") && row.contains("text")) {
        entries[row["key"].get<std::string>()] = row["text"].get<std::string>();
      }
    }
  }

  std::optional<std::string> get(const std::string& key) {
    std::lock_guard lock(mutex);
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const std::string& text) {
    std::lock_guard lock(mutex);
    if (!entries.emplace(key, text).second) return;
    std::ofstream out(path, std::ios::app);
    out << json{{"key", key}, {"text", text}}.dump() << '\n';
  }
};

LlmClient::LlmClient(GenerationConfig config, RunJournal* journal)
    : config_(std::move(config)),
      journal_(journal),
      in_flight_(std::max(1, config_.max_in_flight)) {
  config_.validate();
  const ParsedUrl url = parse_endpoint(config_.endpoint_url);
  scheme_host_port_ = url.scheme_host_port;
  path_ = url.path;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
  if (journal_) journal_->add_secret(api_key_);
  if (config_.cache_path) cache_ = std::make_unique<Cache>(*config_.cache_path);
}

LlmClient::~LlmClient() = default;

std::size_t LlmClient::max_in_flight() const {
  return static_cast<std::size_t>(config_.max_in_flight);
}

std::chrono::milliseconds LlmClient::backoff_delay(int retry) const {
  auto delay = config_.initial_backoff;
  for (int i = 1; i < retry && delay < config_.max_backoff; ++i) delay *= 2;
  return std::min(delay, config_.max_backoff);
}

void LlmClient::set_retry_observer(std::function<void(const RetryEvent&)> observer) {
  retry_observer_ = std::move(observer);
}

ChatReply LlmClient::complete(const ChatRequest& request) { return complete_uncached(request); }

ChatReply LlmClient::complete_uncached(const ChatRequest& request) {
  const std::string body = chat_request_body(config_, request);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  if (journal_ && config_.verbose) {
    journal_->record("llm_request",
                     json{{"url", scheme_host_port_ + path_},
                          {"authorization", api_key_.empty() ? "none" : "Bearer ***"},
                          {"body", json::parse(body)}}
                         .dump());
  }

  int last_status = 0;
  std::string last_error;
  const int attempts = config_.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Result result{nullptr, httplib::Error::Unknown};
    {
      in_flight_.acquire();
      try {
        httplib::Client http(scheme_host_port_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs =
            std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        http.set_connection_timeout(secs.count(), usecs.count());
        http.set_read_timeout(secs.count(), usecs.count());
        http.set_write_timeout(secs.count(), usecs.count());
        result = http.Post(path_, headers, body, "application/json");
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
    }

    if (result) {
      last_status = result->status;
      if (last_status == 200) {
        if (journal_ && config_.verbose) {
          journal_->record("llm_response",
                           json{{"status", last_status}, {"attempt", attempt},
                                {"body", result->body}}
                               .dump());
        }
        ChatReply reply = parse_reply(result->body);
        reply.attempts = attempt;
        if (reply.empty_content && journal_) {
          journal_->record("llm_anomaly", json{{"kind", "empty_content"}}.dump());
        }
        return reply;
      }
      last_error = "HTTP " + std::to_string(last_status);
    } else {
      last_status = 0;
      last_error = httplib::to_string(result.error());
    }

    if (!retryable(last_status) || attempt == attempts) break;
    const auto delay = backoff_delay(attempt);
    if (retry_observer_) retry_observer_(RetryEvent{attempt, last_status, delay});
    if (journal_) {
      journal_->record("llm_retry", json{{"attempt", attempt},
                                         {"status", last_status},
                                         {"error", last_error},
                                         {"delay_ms", delay.count()}}
                                        .dump());
    }
    std::this_thread::sleep_for(delay);
  }
  throw TransportError(last_status, "chat completion failed at " + scheme_host_port_ + path_ +
                                        ": " + last_error);
}

std::vector<std::string> LlmClient::sample_n(const ChatRequest& request, std::size_t n) {
  if (n == 0) throw ConfigError("sample_n: n must be >= 1");
  const std::string body = chat_request_body(config_, request);
  const std::string base = config_.endpoint_url + '\n' + config_.model_name + '\n' + hex64(fnv1a(body));
  std::vector<std::optional<std::string>> results(n);
  std::mutex mutex;
  std::optional<TransportError> failure;
  detail::parallel_for(n, max_in_flight(), [&](std::size_t i) {
    const std::string key = hex64(fnv1a(base + '\n' + std::to_string(i)));
    if (cache_) {
      if (auto hit = cache_->get(key)) {
        results[i] = std::move(*hit);
        return;
      }
    }
    try {
      ChatReply reply = complete_uncached(request);
      if (cache_) cache_->put(key, reply.text);
      results[i] = std::move(reply.text);
    } catch (const TransportError& e) {
      std::lock_guard lock(mutex);
      if (!failure) failure.emplace(e);
    } catch (const ProtocolError& e) {
      std::lock_guard lock(mutex);
      if (!failure) failure.emplace(0, e.what());
    }
  });
  if (failure) {
    throw SampleBatchError(failure->last_status(),
                           std::string("sample batch failed: ") + failure->what(),
                           std::move(results));
  }
  std::vector<std::string> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace selfcheck
