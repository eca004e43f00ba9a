#include "devrec/text.hpp"

#include <algorithm>
#include <array>

namespace devrec {

namespace {

// Sorted for binary search. Versioned with the repo; changing it changes
// every index built from now on.
constexpr std::array<std::string_view, 52> kStopWords = {
    "about", "after", "all",  "also", "an",    "and",   "any",  "are",  "as",    "at",   "be",
    "been",  "but",   "by",   "can",  "do",    "for",   "from", "had",  "has",   "have", "he",
    "her",   "his",   "how",  "if",   "in",    "into",  "is",   "it",   "its",   "more", "my",
    "no",    "not",   "of",   "on",   "or",    "our",   "she",  "so",   "than",  "that", "the",
    "their", "this",  "to",   "was",  "we",    "what",  "with", "you",
};

static_assert(std::is_sorted(kStopWords.begin(), kStopWords.end()));

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

bool is_stop_word(std::string_view token) {
  return std::binary_search(kStopWords.begin(), kStopWords.end(), token);
}

std::span<const std::string_view> stop_words() { return kStopWords; }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2 && !is_stop_word(current)) tokens.push_back(current);
    current.clear();
  };
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (!is_token_byte(c)) {
      flush();
      continue;
    }
    current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
  }
  flush();
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

}  // namespace devrec
