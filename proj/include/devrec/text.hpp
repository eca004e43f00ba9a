#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace devrec {

/// The analyzer shared by indexing, query expansion and ontology matching.
///
/// ASCII letters are lowercased; any byte that is not an ASCII letter or
/// digit separates tokens, except bytes >= 0x80 which are kept so UTF-8 words
/// stay intact. Tokens shorter than two bytes and stop words are dropped.
std::vector<std::string> tokenize(std::string_view text);

bool is_stop_word(std::string_view token);

std::span<const std::string_view> stop_words();

/// Tokens joined by single spaces; the canonical key for a phrase.
std::string join_tokens(std::span<const std::string> tokens);

/// Trims ASCII whitespace at both ends.
std::string_view trim(std::string_view text);

}  // namespace devrec
