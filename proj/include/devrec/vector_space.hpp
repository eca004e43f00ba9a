#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "devrec/error.hpp"

namespace devrec {

using TermId = std::int32_t;

/// Sparse weighted term vector over an index vocabulary.
template <typename Scalar>
using TermVector = Eigen::SparseVector<Scalar, Eigen::ColMajor, TermId>;

using TermVectord = TermVector<double>;

/// Document-side TF-IDF weight: tf * ln(1 + N / df). Strictly positive for
/// tf > 0 and 1 <= df <= N.
template <typename Scalar>
Scalar tf_idf(Scalar tf, std::size_t corpus_size, std::size_t document_frequency) {
  return tf * std::log1p(static_cast<Scalar>(corpus_size) / static_cast<Scalar>(document_frequency));
}

/// Builds a vector of dimension `size` from (term, weight) pairs. Zero
/// weights are dropped; duplicate terms are summed.
template <typename Scalar>
TermVector<Scalar> make_term_vector(TermId size, std::vector<std::pair<TermId, Scalar>> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  TermVector<Scalar> v(size);
  v.reserve(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size();) {
    const TermId term = entries[i].first;
    Scalar w{0};
    for (; i < entries.size() && entries[i].first == term; ++i) w += entries[i].second;
    if (w != Scalar{0}) v.insertBack(term) = w;
  }
  return v;
}

namespace detail {

template <typename Scalar>
Scalar cosine_from_parts(Scalar dot, Scalar norm_a, Scalar norm_b) {
  if (!(norm_a > Scalar{0}) || !(norm_b > Scalar{0})) {
    throw Error(ErrorCode::ZeroVector, "cosine of a zero vector is undefined");
  }
  return std::clamp(dot / (norm_a * norm_b), Scalar{-1}, Scalar{1});
}

}  // namespace detail

/// sum(a_i b_i) / (|a| |b|), clamped to [-1, 1] against rounding. Throws
/// `ZeroVector`.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::SparseMatrixBase<DerivedA>& a,
                                 const Eigen::SparseMatrixBase<DerivedB>& b) {
  return detail::cosine_from_parts(a.derived().dot(b.derived()), a.norm(), b.norm());
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return detail::cosine_from_parts(a.dot(b), a.norm(), b.norm());
}

/// Mean of a set of term vectors; empty input yields the zero vector.
template <typename Scalar>
TermVector<Scalar> centroid(const std::vector<TermVector<Scalar>>& vectors, TermId size) {
  TermVector<Scalar> sum(size);
  for (const auto& v : vectors) sum += v;
  if (!vectors.empty()) sum /= static_cast<Scalar>(vectors.size());
  sum.prune(Scalar{0});
  return sum;
}

}  // namespace devrec
