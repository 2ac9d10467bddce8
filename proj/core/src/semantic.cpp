#include "selfcheck/semantic.hpp"

#include <algorithm>
#include <cmath>

#include "selfcheck/errors.hpp"
#include "selfcheck/textproc.hpp"

namespace selfcheck {

FrequencyModel FrequencyModel::build(std::span<const std::string> samples,
                                     const std::string& target, double k,
                                     TargetCounting counting) {
  if (samples.empty()) throw DataError("frequency model needs at least one sample");
  if (!(k > 0.0)) throw DataError("smoothing constant k must be positive");

  FrequencyModel model;
  model.k_ = k;
  for (const std::string& sample : samples) {
    for (std::string& token : tokenize(sample).tokens) ++model.counts_[std::move(token)];
  }
  auto target_tokens = tokenize(target).tokens;
  if (counting == TargetCounting::PerType) {
    std::sort(target_tokens.begin(), target_tokens.end());
    target_tokens.erase(std::unique(target_tokens.begin(), target_tokens.end()),
                        target_tokens.end());
  }
  for (std::string& token : target_tokens) ++model.counts_[std::move(token)];

  for (const auto& [token, n] : model.counts_) {
    model.vocab_.insert(token);
    model.token_count_ += n;
  }
  return model;
}

std::uint64_t FrequencyModel::count(const std::string& token) const {
  const auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second;
}

double FrequencyModel::smoothed_prob(const std::string& token) const {
  if (vocab_.empty()) throw DataError("smoothed_prob: empty vocabulary");
  const double denom =
      static_cast<double>(token_count_) + k_ * static_cast<double>(vocab_.size());
  return (static_cast<double>(count(token)) + k_) / denom;
}

double token_nll(double p) {
  if (!(p > 0.0)) throw DataError("token_nll: probability must be positive");
  return -std::log(p);
}

SemanticScorer::SemanticScorer(const FrequencyModel& model, const EmbeddingTable* table,
                               double theta)
    : model_(model), table_(table), theta_(theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in (0, 1]");
}

const std::set<std::string>& SemanticScorer::neighborhood_of(const std::string& token) {
  auto it = cache_.find(token);
  if (it == cache_.end()) {
    std::set<std::string> members =
        table_ ? neighborhood(token, model_.vocab(), *table_, theta_) : std::set<std::string>{token};
    it = cache_.emplace(token, std::move(members)).first;
  }
  return it->second;
}

double SemanticScorer::semantic_prob(const std::string& token) {
  double total = 0.0;
  for (const std::string& member : neighborhood_of(token)) total += model_.smoothed_prob(member);
  return total;
}

SentenceNll SemanticScorer::score_sentence(const std::string& sentence) {
  const TokenStream stream = tokenize(sentence);
  if (stream.empty()) throw DataError("cannot score a sentence without tokens: '" + sentence + "'");
  SentenceNll out;
  out.token_nlls.reserve(stream.size());
  double total = 0.0;
  for (const std::string& token : stream.tokens) {
    const double nll = token_nll(semantic_prob(token));
    out.token_nlls.push_back(nll);
    total += nll;
    out.max_nll = std::max(out.max_nll, nll);
  }
  out.avg_nll = total / static_cast<double>(stream.size());
  // Rounding in the mean must not break MaxNLL >= AvgNLL.
  out.avg_nll = std::min(out.avg_nll, out.max_nll);
  return out;
}

DocumentNll SemanticScorer::score_document(std::span<const std::string> sentences) {
  if (sentences.empty()) throw DataError("cannot score a document without sentences");
  DocumentNll out;
  double avg_total = 0.0;
  double max_total = 0.0;
  for (const std::string& sentence : sentences) {
    SentenceNll s = score_sentence(sentence);
    avg_total += s.avg_nll;
    max_total += s.max_nll;
    out.per_sentence.push_back(std::move(s));
  }
  const double m = static_cast<double>(sentences.size());
  out.doc_avg_nll = avg_total / m;
  out.doc_max_avg_nll = max_total / m;
  return out;
}

double semantic_prob(const FrequencyModel& model, const std::string& token,
                     const EmbeddingTable* table, double theta) {
  return SemanticScorer(model, table, theta).semantic_prob(token);
}

SentenceNll score_sentence(const FrequencyModel& model, const std::string& sentence,
                           const EmbeddingTable* table, double theta) {
  return SemanticScorer(model, table, theta).score_sentence(sentence);
}

DocumentNll score_document(const FrequencyModel& model, std::span<const std::string> sentences,
                           const EmbeddingTable* table, double theta) {
  return SemanticScorer(model, table, theta).score_document(sentences);
}

}  // namespace selfcheck
