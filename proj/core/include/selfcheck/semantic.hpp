#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "selfcheck/embeddings.hpp"

namespace selfcheck {

// How the target response contributes to the unigram counts.
enum class TargetCounting {
  PerOccurrence,  // every occurrence of a token in the target adds one count
  PerType,        // each distinct target token adds exactly one count
};

// Laplace-smoothed unigram model over one passage's sampled generations plus
// its target response.
class FrequencyModel {
 public:
  // Throws DataError on an empty sample list or k <= 0.
  static FrequencyModel build(std::span<const std::string> samples, const std::string& target,
                              double k = 1.0,
                              TargetCounting counting = TargetCounting::PerOccurrence);

  std::uint64_t count(const std::string& token) const;
  std::uint64_t token_count() const noexcept { return token_count_; }
  const std::set<std::string>& vocab() const noexcept { return vocab_; }
  const std::map<std::string, std::uint64_t>& counts() const noexcept { return counts_; }
  double k() const noexcept { return k_; }

  // (count(t) + k) / (token_count + k|V|). Unseen tokens have count 0.
  // Throws DataError when the vocabulary is empty.
  double smoothed_prob(const std::string& token) const;

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::set<std::string> vocab_;
  std::uint64_t token_count_ = 0;
  double k_ = 1.0;
};

struct SentenceNll {
  double avg_nll = 0.0;
  double max_nll = 0.0;
  std::vector<double> token_nlls;
};

struct DocumentNll {
  double doc_avg_nll = 0.0;      // mean of sentence AvgNLL
  double doc_max_avg_nll = 0.0;  // mean of sentence MaxNLL
  std::vector<SentenceNll> per_sentence;
};

// -ln(p). Throws DataError for p <= 0.
double token_nll(double p);

// Similarity-aggregated scorer bound to one model. Passing no table gives
// singleton neighborhoods, i.e. the plain unigram baseline. Neighborhoods are
// memoized per token for the lifetime of the scorer; it is not thread-safe,
// use one scorer per thread.
class SemanticScorer {
 public:
  SemanticScorer(const FrequencyModel& model, const EmbeddingTable* table, double theta = 0.9);

  const std::set<std::string>& neighborhood_of(const std::string& token);

  // Sum of smoothed probabilities over the token's neighborhood.
  double semantic_prob(const std::string& token);

  // Throws DataError when the sentence has no tokens.
  SentenceNll score_sentence(const std::string& sentence);
  // Throws DataError on an empty sentence list.
  DocumentNll score_document(std::span<const std::string> sentences);

 private:
  const FrequencyModel& model_;
  const EmbeddingTable* table_;
  double theta_;
  std::map<std::string, std::set<std::string>> cache_;
};

double semantic_prob(const FrequencyModel& model, const std::string& token,
                     const EmbeddingTable* table, double theta);
SentenceNll score_sentence(const FrequencyModel& model, const std::string& sentence,
                           const EmbeddingTable* table, double theta);
DocumentNll score_document(const FrequencyModel& model, std::span<const std::string> sentences,
                           const EmbeddingTable* table, double theta);

}  // namespace selfcheck
