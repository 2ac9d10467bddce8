#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace selfcheck {

enum class PromptMode { ZeroShot, ChainOfThought };

std::string_view prompt_mode_name(PromptMode mode);
// Accepts "zs"/"zero-shot" and "cot"/"chain-of-thought"; throws ConfigError.
PromptMode parse_prompt_mode(std::string_view text);

// Version of the bundled prompt template set.
int prompt_template_version() noexcept;

// Single-pass placeholder substitution: "{name}" occurrences in the template
// are replaced by their values; text inserted by a value is never rescanned.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string_view, std::string_view>>& values);

}  // namespace selfcheck
