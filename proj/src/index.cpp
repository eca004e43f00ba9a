#include "devrec/index.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "devrec/error.hpp"
#include "devrec/profile.hpp"
#include "devrec/text.hpp"

namespace devrec {

InvertedIndex::InvertedIndex(Ontology ontology, IndexConfig config)
    : ontology_(std::move(ontology)), config_(config) {}

std::vector<std::pair<std::string, std::uint32_t>> InvertedIndex::count_terms(const Artifact& artifact) const {
  std::map<std::string, std::uint32_t> counts;
  const std::uint32_t title_weight = config_.double_title ? 2 : 1;
  for (auto& t : tokenize(artifact.title)) counts[std::move(t)] += title_weight;
  for (auto& t : tokenize(artifact.body)) counts[std::move(t)] += 1;
  return {counts.begin(), counts.end()};
}

TermId InvertedIndex::intern(const std::string& term) {
  auto [it, inserted] = term_by_name_.emplace(term, static_cast<TermId>(terms_.size()));
  if (inserted) {
    terms_.push_back(term);
    postings_.emplace_back();
  }
  return it->second;
}

void InvertedIndex::insert_document(Artifact artifact,
                                    const std::vector<std::pair<std::string, std::uint32_t>>& counts,
                                    bool keep_postings_sorted) {
  const auto doc = static_cast<DocId>(docs_.size());
  Document d;
  d.counts.reserve(counts.size());
  for (const auto& [term, tf] : counts) {
    const auto id = intern(term);
    d.counts.emplace_back(id, tf);
    auto& list = postings_[static_cast<std::size_t>(id)];
    if (keep_postings_sorted) {
      auto pos = std::lower_bound(list.begin(), list.end(), artifact.id, [&](const Posting& p, const std::string& key) {
        return docs_[p.doc].artifact.id < key;
      });
      list.insert(pos, Posting{doc, tf});
    } else {
      list.push_back(Posting{doc, tf});
    }
  }
  std::sort(d.counts.begin(), d.counts.end());
  doc_by_id_.emplace(artifact.id, doc);
  d.artifact = std::move(artifact);
  docs_.push_back(std::move(d));
}

void InvertedIndex::recompute_norms() {
  const auto n = docs_.size();
  for (auto& d : docs_) {
    double sum = 0.0;
    for (const auto& [term, tf] : d.counts) {
      const double w = tf_idf<double>(tf, n, postings_[static_cast<std::size_t>(term)].size());
      sum += w * w;
    }
    d.norm = std::sqrt(sum);
  }
}

InvertedIndex InvertedIndex::build(std::vector<Artifact> corpus, Ontology ontology, IndexConfig config) {
  std::sort(corpus.begin(), corpus.end(), [](const Artifact& a, const Artifact& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < corpus.size(); ++i) {
    if (corpus[i].id == corpus[i - 1].id) {
      throw Error(ErrorCode::DuplicateArtifactId, "artifact id '" + corpus[i].id + "' appears twice");
    }
  }
  InvertedIndex index(std::move(ontology), config);
  index.docs_.reserve(corpus.size());
  for (auto& artifact : corpus) {
    auto counts = index.count_terms(artifact);
    if (counts.empty()) {
      ++index.excluded_;
      continue;
    }
    // Ids arrive sorted, so appending keeps every postings list sorted.
    index.insert_document(std::move(artifact), counts, false);
  }
  index.recompute_norms();
  return index;
}

bool InvertedIndex::add_document(Artifact artifact) {
  if (doc_by_id_.contains(artifact.id)) {
    throw Error(ErrorCode::DuplicateArtifactId, "artifact id '" + artifact.id + "' already indexed");
  }
  auto counts = count_terms(artifact);
  if (counts.empty()) {
    ++excluded_;
    return false;
  }
  insert_document(std::move(artifact), counts, true);
  recompute_norms();
  return true;
}

std::optional<TermId> InvertedIndex::term_id(std::string_view term) const {
  auto it = term_by_name_.find(std::string(term));
  if (it == term_by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t InvertedIndex::df(std::string_view term) const {
  const auto id = term_id(term);
  return id ? postings_[static_cast<std::size_t>(*id)].size() : 0;
}

std::vector<std::pair<std::string, std::uint32_t>> InvertedIndex::postings(std::string_view term) const {
  std::vector<std::pair<std::string, std::uint32_t>> out;
  if (const auto id = term_id(term)) {
    for (const auto& p : postings_[static_cast<std::size_t>(*id)]) out.emplace_back(docs_[p.doc].artifact.id, p.tf);
  }
  return out;
}

double InvertedIndex::idf(TermId term) const {
  return std::log1p(static_cast<double>(docs_.size()) /
                    static_cast<double>(postings_[static_cast<std::size_t>(term)].size()));
}

std::optional<InvertedIndex::DocId> InvertedIndex::find(std::string_view artifact_id) const {
  auto it = doc_by_id_.find(std::string(artifact_id));
  if (it == doc_by_id_.end()) return std::nullopt;
  return it->second;
}

const Artifact* InvertedIndex::find_artifact(std::string_view artifact_id) const {
  const auto doc = find(artifact_id);
  return doc ? &docs_[*doc].artifact : nullptr;
}

const ConceptSet* InvertedIndex::doc_concepts(std::string_view artifact_id) const {
  const auto* a = find_artifact(artifact_id);
  return a ? &a->concepts : nullptr;
}

TermVectord InvertedIndex::document_vector(DocId doc) const {
  std::vector<std::pair<TermId, double>> entries;
  entries.reserve(docs_[doc].counts.size());
  for (const auto& [term, tf] : docs_[doc].counts) {
    entries.emplace_back(term, tf_idf<double>(tf, docs_.size(), postings_[static_cast<std::size_t>(term)].size()));
  }
  return make_term_vector(static_cast<TermId>(terms_.size()), std::move(entries));
}

TermVectord InvertedIndex::query_vector(const ExpandedQuery& query) const {
  std::vector<std::pair<TermId, double>> entries;
  for (const auto& [term, weight] : query.terms) {
    if (const auto id = term_id(term)) entries.emplace_back(*id, weight * idf(*id));
  }
  return make_term_vector(static_cast<TermId>(terms_.size()), std::move(entries));
}

TermVectord InvertedIndex::vectorize(const Artifact& artifact) const {
  std::vector<std::pair<TermId, double>> entries;
  for (const auto& [term, tf] : count_terms(artifact)) {
    if (const auto id = term_id(term)) {
      entries.emplace_back(*id, tf_idf<double>(tf, docs_.size(), postings_[static_cast<std::size_t>(*id)].size()));
    }
  }
  return make_term_vector(static_cast<TermId>(terms_.size()), std::move(entries));
}

double interest_overlap(const ConceptSet& doc_concepts, const WeightedInterests& interests,
                        const Ontology& ontology) {
  if (doc_concepts.empty() || interests.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [interest, weight] : interests) {
    if (!ontology.contains(interest)) continue;
    double best = 0.0;
    for (const auto& c : doc_concepts) {
      if (ontology.contains(c)) best = std::max(best, ontology.concept_similarity(interest, c));
    }
    total += weight * best;
  }
  return std::clamp(total, 0.0, 1.0);
}

double max_interest_similarity(const ConceptSet& doc_concepts, const WeightedInterests& interests,
                               const Ontology& ontology) {
  double best = 0.0;
  for (const auto& [interest, weight] : interests) {
    if (!ontology.contains(interest)) continue;
    for (const auto& c : doc_concepts) {
      if (ontology.contains(c)) best = std::max(best, ontology.concept_similarity(interest, c));
    }
  }
  return best;
}

std::vector<RankedResult> search(const InvertedIndex& index, const ExpandedQuery& query,
                                 const UserProfile* profile, const SearchOptions& options) {
  if (index.size() == 0 || options.k == 0) return {};
  const auto q = index.query_vector(query);
  if (q.nonZeros() == 0) return {};
  const double q_norm = q.norm();

  // Term-at-a-time accumulation of the numerator over the candidates.
  std::vector<double> dot(index.size(), 0.0);
  std::vector<char> touched(index.size(), 0);
  std::vector<InvertedIndex::DocId> candidates;
  const auto n = index.size();
  for (TermVectord::InnerIterator it(q); it; ++it) {
    const auto& list = index.raw_postings(it.index());
    for (const auto& p : list) {
      dot[p.doc] += it.value() * tf_idf<double>(p.tf, n, list.size());
      if (!touched[p.doc]) {
        touched[p.doc] = 1;
        candidates.push_back(p.doc);
      }
    }
  }

  WeightedInterests interests;
  if (profile) interests = top_interests(*profile, options.interest_k);
  const auto& ontology = index.ontology();

  std::vector<std::pair<InvertedIndex::DocId, RankedResult>> scored;
  scored.reserve(candidates.size());
  for (const auto doc : candidates) {
    const auto& concepts = index.artifact(doc).concepts;
    if (options.strict && !interests.empty() &&
        max_interest_similarity(concepts, interests, ontology) < options.tau) {
      continue;
    }
    RankedResult r;
    r.artifact_id = index.artifact(doc).id;
    r.cosine = detail::cosine_from_parts(dot[doc], q_norm, index.doc_norm(doc));
    r.interest_overlap = interests.empty() ? 0.0 : interest_overlap(concepts, interests, ontology);
    r.final_score = r.cosine * (1.0 + options.beta * r.interest_overlap);
    scored.emplace_back(doc, std::move(r));
  }

  auto by_score = [](const auto& a, const auto& b) {
    if (a.second.final_score != b.second.final_score) return a.second.final_score > b.second.final_score;
    return a.second.artifact_id < b.second.artifact_id;
  };
  const auto keep = std::min(options.k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), by_score);
  scored.resize(keep);

  std::vector<RankedResult> results;
  results.reserve(keep);
  for (auto& [doc, r] : scored) {
    const auto& counts = index.term_counts(doc);
    for (TermVectord::InnerIterator it(q); it; ++it) {
      auto pos = std::lower_bound(counts.begin(), counts.end(), it.index(),
                                  [](const auto& entry, TermId id) { return entry.first < id; });
      if (pos != counts.end() && pos->first == it.index()) r.matched_terms.insert(index.term(it.index()));
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace devrec
