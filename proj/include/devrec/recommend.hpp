#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "devrec/index.hpp"
#include "devrec/profile.hpp"

namespace devrec {

struct RecommendOptions {
  std::size_t k = 10;
  std::size_t interest_k = 10;
};

/// Query-less browsing feed. With interests, documents are scored by
/// interest overlap (ties: newer first, then id); without interests every
/// document is ranked by recency. Artifacts the user already gave feedback
/// on are left out. `cosine` is always 0 and `final_score` is the overlap.
std::vector<RankedResult> recommend(const UserProfile& profile, const InvertedIndex& index,
                                    const Ontology& ontology, const RecommendOptions& options = {});

struct LabeledExample {
  std::string artifact_id;
  std::string label;
};

struct Classification {
  std::string label;
  double confidence = 0.0;
};

/// Nearest-centroid classifier over TF-IDF vectors. Repeated (id, label)
/// pairs count once. Throws `NoTrainingData` or `UnknownLabeledId`.
Classification classify_artifact(const Artifact& artifact, const InvertedIndex& index,
                                  const std::vector<LabeledExample>& labeled);

/// `artifact_id<TAB>label` per line.
std::vector<LabeledExample> parse_labels(std::string_view tsv);

}  // namespace devrec
