#include "devrec/recommend.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "devrec/error.hpp"
#include "devrec/text.hpp"

namespace devrec {

std::vector<RankedResult> recommend(const UserProfile& profile, const InvertedIndex& index,
                                    const Ontology& ontology, const RecommendOptions& options) {
  std::set<std::string, std::less<>> seen;
  for (const auto& e : profile.feedback) seen.insert(e.artifact_id);
  const auto interests = top_interests(profile, options.interest_k);

  struct Scored {
    const Artifact* artifact;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(index.size());
  for (InvertedIndex::DocId d = 0; d < index.size(); ++d) {
    const auto& a = index.artifact(d);
    if (seen.contains(a.id)) continue;
    scored.push_back({&a, interests.empty() ? 0.0 : interest_overlap(a.concepts, interests, ontology)});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& x, const Scored& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.artifact->created_at != y.artifact->created_at) return x.artifact->created_at > y.artifact->created_at;
    return x.artifact->id < y.artifact->id;
  });
  if (scored.size() > options.k) scored.resize(options.k);

  std::vector<RankedResult> out;
  out.reserve(scored.size());
  for (const auto& s : scored) {
    RankedResult r;
    r.artifact_id = s.artifact->id;
    r.interest_overlap = s.score;
    r.final_score = s.score;
    out.push_back(std::move(r));
  }
  return out;
}

Classification classify_artifact(const Artifact& artifact, const InvertedIndex& index,
                                  const std::vector<LabeledExample>& labeled) {
  if (labeled.empty()) throw Error(ErrorCode::NoTrainingData, "no labeled examples");
  std::map<std::string, std::set<InvertedIndex::DocId>> members;
  for (const auto& ex : labeled) {
    const auto doc = index.find(ex.artifact_id);
    if (!doc) throw Error(ErrorCode::UnknownLabeledId, "labeled artifact '" + ex.artifact_id + "' is not indexed");
    members[ex.label].insert(*doc);
  }

  const auto dims = static_cast<TermId>(index.vocabulary_size());
  TermVectord target(dims);
  if (const auto doc = index.find(artifact.id)) {
    target = index.document_vector(*doc);
  } else {
    target = index.vectorize(artifact);
  }

  Classification best{members.begin()->first, 0.0};
  for (const auto& [label, docs] : members) {
    std::vector<TermVectord> vectors;
    vectors.reserve(docs.size());
    for (const auto d : docs) vectors.push_back(index.document_vector(d));
    const auto center = centroid(vectors, dims);
    const double score = (target.nonZeros() == 0 || center.nonZeros() == 0) ? 0.0 : cosine(target, center);
    // Strict improvement only: labels are visited in lexicographic order.
    if (score > best.confidence) best = {label, score};
  }
  return best;
}

std::vector<LabeledExample> parse_labels(std::string_view tsv) {
  std::vector<LabeledExample> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < tsv.size()) {
    auto end = tsv.find('\n', start);
    if (end == std::string_view::npos) end = tsv.size();
    auto line = tsv.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "labels line " + std::to_string(line_no) + ": expected id<TAB>label");
    }
    LabeledExample ex{std::string(trim(line.substr(0, tab))), std::string(trim(line.substr(tab + 1)))};
    if (ex.artifact_id.empty() || ex.label.empty()) {
      throw Error(ErrorCode::ParseError, "labels line " + std::to_string(line_no) + ": empty field");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace devrec
