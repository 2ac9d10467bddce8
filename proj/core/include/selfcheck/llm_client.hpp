#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "selfcheck/errors.hpp"

namespace selfcheck {

class RunJournal;

struct GenerationConfig {
  std::string endpoint_url;  // base URL ("http://host:8000/v1") or full chat-completions URL
  std::string model_name;
  double temperature = 0.6;
  int max_tokens = 2048;
  int num_samples = 20;
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  int max_in_flight = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{16000};
  std::string api_key_env = "SELF_CHECK_API_KEY";
  // Opt-in append-only response cache.
  std::optional<std::filesystem::path> cache_path;
  // Log request and response bodies to the journal.
  bool verbose = false;

  // Throws ConfigError.
  void validate() const;
};

struct ChatRequest {
  std::optional<std::string> system;
  std::string user;
};

struct ChatReply {
  std::string text;
  std::string finish_reason;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int attempts = 1;
  // The endpoint returned an empty or null message content.
  bool empty_content = false;
  bool from_cache = false;
};

// A sample batch in which at least one request failed terminally. Successful
// completions stay available in `partial`, in issuance order.
class SampleBatchError : public TransportError {
 public:
  SampleBatchError(int last_status, const std::string& what,
                   std::vector<std::optional<std::string>> partial)
      : TransportError(last_status, what), partial_(std::move(partial)) {}

  const std::vector<std::optional<std::string>>& partial() const noexcept { return partial_; }

 private:
  std::vector<std::optional<std::string>> partial_;
};

// Anything that turns a chat request into a reply: the HTTP client, or an
// in-process fake in tests.
class Completer {
 public:
  virtual ~Completer() = default;

  virtual ChatReply complete(const ChatRequest& request) = 0;

  // n independent completions of the same request, in issuance order.
  // Throws SampleBatchError when any of them fails.
  virtual std::vector<std::string> sample_n(const ChatRequest& request, std::size_t n);

  // Upper bound on useful caller-side fan-out.
  virtual std::size_t max_in_flight() const { return 1; }
};

struct RetryEvent {
  int attempt;  // attempt that failed, 1-based
  int status;   // HTTP status, 0 for transport failures
  std::chrono::milliseconds delay;
};

// OpenAI-compatible chat-completions client. Shareable across threads; at
// most config.max_in_flight requests are outstanding at any instant.
class LlmClient : public Completer {
 public:
  explicit LlmClient(GenerationConfig config, RunJournal* journal = nullptr);
  ~LlmClient() override;

  ChatReply complete(const ChatRequest& request) override;
  std::vector<std::string> sample_n(const ChatRequest& request, std::size_t n) override;
  std::size_t max_in_flight() const override;

  // Delay before retry number `retry` (1-based): initial * 2^(retry-1),
  // capped at max_backoff.
  std::chrono::milliseconds backoff_delay(int retry) const;

  void set_retry_observer(std::function<void(const RetryEvent&)> observer);

  const GenerationConfig& config() const noexcept { return config_; }

 private:
  struct Cache;

  ChatReply complete_uncached(const ChatRequest& request);

  GenerationConfig config_;
  RunJournal* journal_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_;
  std::counting_semaphore<> in_flight_;
  std::function<void(const RetryEvent&)> retry_observer_;
  std::unique_ptr<Cache> cache_;
};

// Chat-completions request body for a request under a configuration.
std::string chat_request_body(const GenerationConfig& config, const ChatRequest& request);

}  // namespace selfcheck
