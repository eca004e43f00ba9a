#include "devrec/query_expansion.hpp"

#include <algorithm>

#include "devrec/error.hpp"
#include "devrec/ingest.hpp"
#include "devrec/ontology.hpp"
#include "devrec/text.hpp"

namespace devrec {

namespace {

void add_term(ExpandedQuery& q, const std::string& token, double weight) {
  auto [it, inserted] = q.terms.emplace(token, weight);
  if (!inserted) it->second = std::max(it->second, weight);
}

bool occurs_covering(const std::vector<std::string>& query, const std::vector<std::string>& phrase,
                     std::size_t position) {
  const auto n = phrase.size();
  if (n == 0 || n > query.size()) return false;
  const auto first = position + 1 >= n ? position + 1 - n : 0;
  for (std::size_t start = first; start <= position && start + n <= query.size(); ++start) {
    if (std::equal(phrase.begin(), phrase.end(), query.begin() + start)) return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> ExpandedQuery::expansion_terms() const {
  std::vector<std::string> out;
  for (const auto& [t, w] : terms) {
    if (!original_terms.contains(t)) out.push_back(t);
  }
  return out;
}

SynsetLexicon parse_lexicon(std::string_view text) {
  SynsetLexicon lexicon;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "lexicon line " + std::to_string(line_no) + ": expected id<TAB>terms");
    }
    Synset synset;
    synset.id = std::string(trim(line.substr(0, tab)));
    if (synset.id.empty()) {
      throw Error(ErrorCode::ParseError, "lexicon line " + std::to_string(line_no) + ": empty synset id");
    }
    std::set<std::string> keys;
    std::string_view rest = line.substr(tab + 1);
    while (true) {
      const auto bar = rest.find('|');
      const auto term = trim(rest.substr(0, bar));
      if (!term.empty()) {
        auto tokens = tokenize(term);
        if (tokens.empty() || !keys.insert(join_tokens(tokens)).second) {
          ++lexicon.warnings;
        } else {
          synset.terms.emplace_back(term);
          synset.term_tokens.push_back(std::move(tokens));
        }
      }
      if (bar == std::string_view::npos) break;
      rest.remove_prefix(bar + 1);
    }
    if (synset.terms.empty()) {
      throw Error(ErrorCode::EmptySynset, "lexicon line " + std::to_string(line_no) + ": synset '" + synset.id +
                                              "' has no usable terms");
    }
    lexicon.synsets.push_back(std::move(synset));
  }
  return lexicon;
}

SynsetLexicon load_lexicon(const std::string& path) { return parse_lexicon(read_file(path)); }

ExpandedQuery original_query(std::string_view query) {
  const auto tokens = tokenize(query);
  if (tokens.empty()) throw Error(ErrorCode::EmptyQuery, "query has no indexable tokens");
  ExpandedQuery q;
  for (const auto& t : tokens) {
    q.terms[t] = 1.0;
    q.original_terms.insert(t);
  }
  return q;
}

ExpandedQuery expand(std::string_view query, const SynsetLexicon& lexicon, const Ontology& ontology,
                     const ExpansionOptions& options) {
  ExpandedQuery q = original_query(query);
  const auto tokens = tokenize(query);
  const double alpha = options.alpha;

  // Synsets: per distinct original token, up to max_per_term new tokens in
  // lexicon order.
  std::set<std::string> done;
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    if (!done.insert(tokens[pos]).second) continue;
    std::vector<std::string> picked;
    for (const auto& synset : lexicon.synsets) {
      if (picked.size() >= options.max_per_term) break;
      bool hit = false;
      for (std::size_t p = 0; p < tokens.size() && !hit; ++p) {
        if (tokens[p] != tokens[pos]) continue;
        for (const auto& phrase : synset.term_tokens) {
          if (occurs_covering(tokens, phrase, p)) {
            hit = true;
            break;
          }
        }
      }
      if (!hit) continue;
      for (const auto& phrase : synset.term_tokens) {
        for (const auto& t : phrase) {
          if (picked.size() >= options.max_per_term) break;
          if (q.original_terms.contains(t) || std::find(picked.begin(), picked.end(), t) != picked.end()) continue;
          picked.push_back(t);
        }
      }
    }
    for (const auto& t : picked) add_term(q, t, alpha);
  }

  // Ontology: class label and alternate surface forms of matched instances.
  for (const auto& match : ontology.match_instances(tokens)) {
    for (const auto& t : tokenize(ontology.get_class(match.class_id).label)) {
      if (!q.original_terms.contains(t)) add_term(q, t, alpha);
    }
    for (const auto& form : ontology.surface_tokens(match.instance_id)) {
      for (const auto& t : form) {
        if (!q.original_terms.contains(t)) add_term(q, t, alpha);
      }
    }
  }
  return q;
}

}  // namespace devrec
