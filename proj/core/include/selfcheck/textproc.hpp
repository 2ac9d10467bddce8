#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace selfcheck {

// Lowercased whitespace tokens with surrounding punctuation removed.
// Interior characters are kept, so "2x+1." yields "2x+1". Symbols such as
// '=' or '+' are not treated as punctuation and survive as tokens.
struct TokenStream {
  std::vector<std::string> tokens;

  bool empty() const noexcept { return tokens.empty(); }
  std::size_t size() const noexcept { return tokens.size(); }
};

TokenStream tokenize(std::string_view text);

// Abbreviations that never end a sentence.
std::vector<std::string> default_abbreviations();

// Splits after '.', '!' or '?' when followed by whitespace and an uppercase
// letter, or by end of text. A terminator that closes a listed abbreviation
// (compared case-insensitively against the whitespace-delimited word it ends)
// never splits. Returned segments are trimmed and non-empty.
std::vector<std::string> split_sentences(std::string_view text,
                                         const std::vector<std::string>& abbreviations);
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace selfcheck
