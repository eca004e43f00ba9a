#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace devrec {

class Ontology;

struct Synset {
  std::string id;
  std::vector<std::string> terms;
  std::vector<std::vector<std::string>> term_tokens;  ///< tokenize(terms[i])
};

struct SynsetLexicon {
  std::vector<Synset> synsets;
  /// Duplicate or token-less terms dropped while loading.
  std::size_t warnings = 0;
};

/// `synset_id<TAB>term|term|...` per line; `#` starts a comment line.
/// Throws `ParseError` (with line number) or `EmptySynset`.
SynsetLexicon parse_lexicon(std::string_view text);
SynsetLexicon load_lexicon(const std::string& path);

/// Weighted query terms. Originals weigh 1.0; expansion terms weigh alpha.
struct ExpandedQuery {
  std::map<std::string, double> terms;
  std::set<std::string> original_terms;

  bool operator==(const ExpandedQuery&) const = default;

  /// Terms that were added by expansion, sorted.
  std::vector<std::string> expansion_terms() const;
};

struct ExpansionOptions {
  double alpha = 0.5;
  std::size_t max_per_term = 5;
};

/// The query's own tokens at weight 1.0. Throws `EmptyQuery`.
ExpandedQuery original_query(std::string_view query);

/// Hybrid automatic expansion: synset siblings of every matched lexicon term
/// plus class labels and alternate surface forms of matched ontology
/// instances. Throws `EmptyQuery`.
ExpandedQuery expand(std::string_view query, const SynsetLexicon& lexicon, const Ontology& ontology,
                     const ExpansionOptions& options = {});

}  // namespace devrec
