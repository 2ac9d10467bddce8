#include "selfcheck/prompts.hpp"

#include <selfcheck/prompt_assets.hpp>

#include "selfcheck/errors.hpp"

namespace selfcheck {

std::string_view prompt_mode_name(PromptMode mode) {
  return mode == PromptMode::ZeroShot ? "zs" : "cot";
}

PromptMode parse_prompt_mode(std::string_view text) {
  if (text == "zs" || text == "zero-shot" || text == "zero_shot") return PromptMode::ZeroShot;
  if (text == "cot" || text == "chain-of-thought" || text == "chain_of_thought") {
    return PromptMode::ChainOfThought;
  }
  throw ConfigError("unknown prompt mode '" + std::string(text) + "' (expected zs or cot)");
}

int prompt_template_version() noexcept { return assets::k_prompt_template_version; }

std::string render_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [key, value] : values) {
          if (key == name) {
            out.append(value);
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

}  // namespace selfcheck
