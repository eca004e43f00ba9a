#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace devrec {

/// Graded relevance in [0, 3] per (query id, artifact id).
struct Judgments {
  std::map<std::pair<std::string, std::string>, int> entries;

  int grade(const std::string& query_id, const std::string& artifact_id) const;
  /// Judged grades for one query, artifact id -> grade.
  std::map<std::string, int> for_query(const std::string& query_id) const;
};

/// Ordered artifact ids per query id.
using Run = std::map<std::string, std::vector<std::string>>;

/// `query_id<TAB>artifact_id<TAB>grade`. Throws `ParseError`, `InvalidField`
/// (grade out of range) or `DuplicateId`.
Judgments parse_qrels(std::string_view tsv);

/// `query_id<TAB>query text`, file order preserved.
std::vector<std::pair<std::string, std::string>> parse_queries(std::string_view tsv);

/// Gains 2^g - 1 discounted by log2(rank + 1), rank starting at 1.
template <typename Derived>
typename Derived::Scalar dcg(const Eigen::ArrayBase<Derived>& grades) {
  using Scalar = typename Derived::Scalar;
  const auto n = grades.size();
  if (n == 0) return Scalar{0};
  const auto ranks = Eigen::Array<Scalar, Eigen::Dynamic, 1>::LinSpaced(n, Scalar{2}, static_cast<Scalar>(n + 1));
  return ((Eigen::pow(Scalar{2}, grades) - Scalar{1}) / ranks.log() * std::log(Scalar{2})).sum();
}

double precision_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                      std::size_t k);
double recall_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                   std::size_t k);
/// Reciprocal rank of the first relevant document within the top k.
double reciprocal_rank(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                       std::size_t k);
double ndcg_at_k(const std::vector<std::string>& ranked, const std::map<std::string, int>& judged,
                 std::size_t k);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::size_t k = 10;
  std::map<std::string, Metrics> per_query;
  Metrics macro;
  std::size_t evaluated = 0;
  /// Queries with no relevant judgment; excluded from the averages.
  std::size_t skipped = 0;

  /// metric name -> macro value, keyed like `P@10`.
  std::map<std::string, double> summary() const;
};

/// Relevance means grade >= 1. Throws `EmptyRun` for a run without queries
/// and `InvalidField` for duplicate ids inside one ranking.
EvalReport evaluate(const Run& run, const Judgments& judgments, std::size_t k);

}  // namespace devrec
