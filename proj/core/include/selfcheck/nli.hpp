#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "selfcheck/llm_client.hpp"
#include "selfcheck/prompts.hpp"
#include "selfcheck/types.hpp"

namespace selfcheck {

class RunJournal;

enum class NliVerdict { Entailment, Neutral, Contradiction };

std::string_view verdict_name(NliVerdict verdict);
// "entailment", "neutral", "contradiction" (case-insensitive); throws ProtocolError.
NliVerdict parse_verdict_name(std::string_view text);

// Entailment -> 0.0, Neutral -> 0.5, Contradiction -> 1.0.
double map_verdict_score(NliVerdict verdict) noexcept;

// Probabilities in {entailment, neutral, contradiction} order.
using VerdictDistribution = std::array<double, 3>;

// A classifier answer: a hard verdict, optionally with the distribution it
// came from.
struct NliPrediction {
  NliVerdict verdict = NliVerdict::Neutral;
  std::optional<VerdictDistribution> distribution;
};

// Throws ProtocolError unless entries are non-negative and sum to 1 within 1e-6.
NliPrediction prediction_from_distribution(const VerdictDistribution& distribution);

enum class VerdictReduction {
  Argmax,         // map the most probable verdict
  ExpectedScore,  // probability-weighted verdict score
};

class NliBackend {
 public:
  virtual ~NliBackend() = default;
  virtual NliPrediction classify(const std::string& premise, const std::string& hypothesis) = 0;
  virtual std::size_t max_in_flight() const { return 1; }
};

// POSTs {"premise": ..., "hypothesis": ...} as JSON and accepts either
// {"label": "entailment"|"neutral"|"contradiction"} or
// {"probabilities": {"entailment": p, "neutral": p, "contradiction": p}}
// (a three-element array in the same order is also accepted).
class RemoteClassifier : public NliBackend {
 public:
  // Transport settings (timeout, retries, in-flight bound, credential) come
  // from `config`; its endpoint_url is the classifier URL used verbatim.
  explicit RemoteClassifier(GenerationConfig config, RunJournal* journal = nullptr);
  ~RemoteClassifier() override;

  NliPrediction classify(const std::string& premise, const std::string& hypothesis) override;
  std::size_t max_in_flight() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Asks a chat model with the bundled NLI prompts and parses its reply.
class PromptedLlm : public NliBackend {
 public:
  PromptedLlm(Completer& completer, PromptMode mode) : completer_(completer), mode_(mode) {}

  NliPrediction classify(const std::string& premise, const std::string& hypothesis) override;
  std::size_t max_in_flight() const override { return completer_.max_in_flight(); }

 private:
  Completer& completer_;
  PromptMode mode_;
};

// Statement 1 is the evaluated sentence, statement 2 the sampled passage.
std::string render_nli_prompt(PromptMode mode, std::string_view sentence, std::string_view sample);

// "contradict" (or "disagree") -> Contradiction; otherwise "agree" or
// "entail" -> Entailment; otherwise Neutral. Case-insensitive.
NliVerdict parse_nli_reply(std::string_view reply);

// Per passage P_j: backend(premise = P_j, hypothesis = sentence) mapped to a
// score, then averaged. Failed calls contribute 0.5 and are counted.
JudgmentScore score_sentence_nli(const std::string& sentence, std::span<const std::string> passages,
                                 NliBackend& backend,
                                 VerdictReduction reduction = VerdictReduction::Argmax,
                                 RunJournal* journal = nullptr);

}  // namespace selfcheck
