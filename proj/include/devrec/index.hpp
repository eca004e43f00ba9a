#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "devrec/ingest.hpp"
#include "devrec/ontology.hpp"
#include "devrec/query_expansion.hpp"
#include "devrec/vector_space.hpp"

namespace devrec {

struct UserProfile;

struct IndexConfig {
  /// Title tokens count twice toward tf.
  bool double_title = true;

  bool operator==(const IndexConfig&) const = default;
};

/// Postings, document frequencies and cached TF-IDF norms over an
/// annotated corpus. The ontology used for annotation travels with the index.
///
/// Not synchronized: readers may share a const index, writers need exclusive
/// access.
class InvertedIndex {
 public:
  using DocId = std::uint32_t;

  struct Posting {
    DocId doc = 0;
    std::uint32_t tf = 0;
  };

  InvertedIndex() = default;
  explicit InvertedIndex(Ontology ontology, IndexConfig config = {});

  /// Throws `DuplicateArtifactId`. Artifacts without tokens are skipped and
  /// counted in `excluded_count()`.
  static InvertedIndex build(std::vector<Artifact> corpus, Ontology ontology, IndexConfig config = {});

  /// Same counting as `build`, one artifact at a time. Returns false when the
  /// artifact has no tokens. Throws `DuplicateArtifactId`.
  bool add_document(Artifact artifact);

  std::size_t size() const noexcept { return docs_.size(); }
  std::size_t excluded_count() const noexcept { return excluded_; }
  std::size_t vocabulary_size() const noexcept { return terms_.size(); }
  const IndexConfig& config() const noexcept { return config_; }
  const Ontology& ontology() const noexcept { return ontology_; }

  std::optional<TermId> term_id(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_[static_cast<std::size_t>(id)]; }

  /// 0 for unknown terms.
  std::size_t df(std::string_view term) const;
  /// (artifact id, tf) sorted by artifact id.
  std::vector<std::pair<std::string, std::uint32_t>> postings(std::string_view term) const;
  const std::vector<Posting>& raw_postings(TermId term) const { return postings_[static_cast<std::size_t>(term)]; }

  /// ln(1 + N / df(term)); the term must be indexed.
  double idf(TermId term) const;

  std::optional<DocId> find(std::string_view artifact_id) const;
  const Artifact& artifact(DocId doc) const { return docs_[doc].artifact; }
  const Artifact* find_artifact(std::string_view artifact_id) const;
  const ConceptSet* doc_concepts(std::string_view artifact_id) const;
  double doc_norm(DocId doc) const { return docs_[doc].norm; }
  /// (term, tf) sorted by term id.
  const std::vector<std::pair<TermId, std::uint32_t>>& term_counts(DocId doc) const { return docs_[doc].counts; }

  /// Document TF-IDF vector under the current corpus statistics.
  TermVectord document_vector(DocId doc) const;
  /// Query-term weight times idf; terms absent from the index are dropped.
  TermVectord query_vector(const ExpandedQuery& query) const;
  /// TF-IDF vector of an arbitrary artifact using this index's statistics.
  TermVectord vectorize(const Artifact& artifact) const;

  std::string serialize() const;
  static InvertedIndex deserialize(std::string_view bytes);
  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

 private:
  struct Document {
    Artifact artifact;
    std::vector<std::pair<TermId, std::uint32_t>> counts;
    double norm = 0.0;
  };

  std::vector<std::pair<std::string, std::uint32_t>> count_terms(const Artifact& artifact) const;
  TermId intern(const std::string& term);
  void insert_document(Artifact artifact, const std::vector<std::pair<std::string, std::uint32_t>>& counts,
                       bool keep_postings_sorted);
  void recompute_norms();

  Ontology ontology_;
  IndexConfig config_;
  std::vector<Document> docs_;
  std::unordered_map<std::string, DocId> doc_by_id_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> term_by_name_;
  std::vector<std::vector<Posting>> postings_;
  std::size_t excluded_ = 0;

  friend struct IndexCodec;
};

struct RankedResult {
  std::string artifact_id;
  double cosine = 0.0;
  double interest_overlap = 0.0;
  double final_score = 0.0;
  std::set<std::string> matched_terms;

  bool operator==(const RankedResult&) const = default;
};

struct SearchOptions {
  std::size_t k = 10;
  double beta = 0.5;
  bool strict = false;
  double tau = 0.25;
  /// How many top interests take part in boosting and filtering.
  std::size_t interest_k = 10;
};

using WeightedInterests = std::vector<std::pair<ConceptId, double>>;

/// sum_i w_i * max_c sim(interest_i, c). Interests unknown to the ontology
/// contribute nothing.
double interest_overlap(const ConceptSet& doc_concepts, const WeightedInterests& interests,
                        const Ontology& ontology);

/// Best similarity between any interest and any document concept; 0 when
/// either side is empty.
double max_interest_similarity(const ConceptSet& doc_concepts, const WeightedInterests& interests,
                               const Ontology& ontology);

/// Cosine-ranks every document sharing a term with the query, optionally
/// filters by interest similarity (strict), boosts by interest overlap, and
/// returns the top k by final score (ties by artifact id).
std::vector<RankedResult> search(const InvertedIndex& index, const ExpandedQuery& query,
                                 const UserProfile* profile, const SearchOptions& options = {});

}  // namespace devrec
