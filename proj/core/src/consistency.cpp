#include "selfcheck/consistency.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>
#include <selfcheck/prompt_assets.hpp>

#include "parallel.hpp"
#include "selfcheck/journal.hpp"

namespace selfcheck {

namespace {

std::vector<std::string> lower_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

}  // namespace

JudgePrompt render_prompt(PromptMode mode, std::string_view context, std::string_view sentence) {
  if (sentence.empty()) throw DataError("judge prompt needs a non-empty sentence");
  const std::string_view tmpl = mode == PromptMode::ZeroShot
                                    ? assets::k_consistency_zero_shot
                                    : assets::k_consistency_chain_of_thought;
  JudgePrompt prompt{mode, std::string(context), std::string(sentence), {}};
  prompt.rendered = render_template(tmpl, {{"context", context}, {"sentence", sentence}});
  return prompt;
}

double parse_judgment(std::string_view reply) {
  const std::vector<std::string> words = lower_words(reply);
  auto begin = words.begin();
  const auto anchor = std::find(words.rbegin(), words.rend(), "answer");
  if (anchor != words.rend()) begin = anchor.base();
  const bool yes = std::find(begin, words.end(), "yes") != words.end();
  const bool no = std::find(begin, words.end(), "no") != words.end();
  if (yes && !no) return 0.0;
  if (no && !yes) return 1.0;
  return 0.5;
}

JudgmentScore score_sentence_consistency(const std::string& sentence,
                                         std::span<const std::string> passages, Completer& judge,
                                         PromptMode mode, RunJournal* journal) {
  if (passages.empty()) throw DataError("consistency scoring needs at least one passage");
  JudgmentScore out;
  out.per_sample.assign(passages.size(), 0.5);
  std::vector<char> failed(passages.size(), 0);
  detail::parallel_for(passages.size(), judge.max_in_flight(), [&](std::size_t j) {
    const JudgePrompt prompt = render_prompt(mode, passages[j], sentence);
    try {
      out.per_sample[j] = parse_judgment(judge.complete(ChatRequest{std::nullopt, prompt.rendered}).text);
    } catch (const Error& e) {
      if (e.category() != Error::Category::Transport) throw;
      failed[j] = 1;
      if (journal) {
        journal->record("judge_failure",
                        nlohmann::json{{"passage", j}, {"error", e.what()}}.dump());
      }
    }
  });
  out.failed_samples = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  out.score = mean(out.per_sample);
  return out;
}

}  // namespace selfcheck
