#include "selfcheck/textproc.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace selfcheck {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// ASCII punctuation stripped from token edges.
bool is_edge_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '"': case '\'': case '`': case '(': case ')': case '[':
    case ']': case '{': case '}':
      return true;
    default:
      return false;
  }
}

// UTF-8 quotes and dashes commonly found in generated prose.
constexpr std::array<std::string_view, 6> k_utf8_edge_punct = {
    "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99",
    "\xE2\x80\x94", "\xE2\x80\xA6"};

std::string_view strip_edges(std::string_view token) {
  bool changed = true;
  while (changed && !token.empty()) {
    changed = false;
    if (is_edge_punct(token.front())) {
      token.remove_prefix(1);
      changed = true;
    }
    if (!token.empty() && is_edge_punct(token.back())) {
      token.remove_suffix(1);
      changed = true;
    }
    for (std::string_view p : k_utf8_edge_punct) {
      if (token.starts_with(p)) {
        token.remove_prefix(p.size());
        changed = true;
      }
      if (token.ends_with(p)) {
        token.remove_suffix(p.size());
        changed = true;
      }
    }
  }
  return token;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

TokenStream tokenize(std::string_view text) {
  TokenStream out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (start == i) break;
    std::string_view word = strip_edges(text.substr(start, i - start));
    if (word.empty()) continue;
    std::string token(word);
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.tokens.push_back(std::move(token));
  }
  return out;
}

std::vector<std::string> default_abbreviations() {
  return {"Dr.", "Mr.", "Mrs.", "Ms.", "St.", "vs.", "e.g.", "i.e.", "No."};
}

std::vector<std::string> split_sentences(std::string_view text) {
  static const std::vector<std::string> abbreviations = default_abbreviations();
  return split_sentences(text, abbreviations);
}

std::vector<std::string> split_sentences(std::string_view text,
                                         const std::vector<std::string>& abbreviations) {
  std::vector<std::string> out;
  const auto emit = [&out](std::string_view segment) {
    segment = trim(segment);
    if (!segment.empty()) out.emplace_back(segment);
  };

  std::size_t segment_start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;

    std::size_t next = i + 1;
    bool boundary = false;
    if (next == text.size()) {
      boundary = true;
    } else if (is_space(text[next])) {
      while (next < text.size() && is_space(text[next])) ++next;
      boundary = next == text.size() ||
                 std::isupper(static_cast<unsigned char>(text[next])) != 0;
    }
    if (!boundary) continue;

    std::size_t word_start = i;
    while (word_start > segment_start && !is_space(text[word_start - 1])) --word_start;
    const std::string_view word = text.substr(word_start, i + 1 - word_start);
    const bool guarded = std::any_of(abbreviations.begin(), abbreviations.end(),
                                     [&](const std::string& a) { return iequals(a, word); });
    if (guarded) continue;

    emit(text.substr(segment_start, i + 1 - segment_start));
    segment_start = i + 1;
  }
  emit(text.substr(segment_start));
  return out;
}

}  // namespace selfcheck
