#pragma once

#include <span>
#include <string>
#include <string_view>

#include "selfcheck/llm_client.hpp"
#include "selfcheck/prompts.hpp"
#include "selfcheck/types.hpp"

namespace selfcheck {

class RunJournal;

struct JudgePrompt {
  PromptMode mode;
  std::string context;
  std::string sentence;
  std::string rendered;
};

// Renders the "is the sentence supported by the context" judge prompt.
// Throws DataError for an empty sentence.
JudgePrompt render_prompt(PromptMode mode, std::string_view context, std::string_view sentence);

// Maps a judge reply to a hallucination score: yes -> 0.0, no -> 1.0, both or
// neither -> 0.5. Only the text after the last "answer" word is inspected
// when that word occurs, so chain-of-thought reasoning does not leak in.
double parse_judgment(std::string_view reply);

// S = mean over passages of parse_judgment(judge(prompt(passage, sentence))).
// A judge call that fails after retries contributes 0.5 and is counted in
// failed_samples (and journaled when a journal is given).
JudgmentScore score_sentence_consistency(const std::string& sentence,
                                         std::span<const std::string> passages, Completer& judge,
                                         PromptMode mode, RunJournal* journal = nullptr);

}  // namespace selfcheck
