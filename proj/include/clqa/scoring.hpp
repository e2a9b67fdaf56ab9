// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "clqa/distribution.hpp"
#include "clqa/embedding.hpp"

namespace clqa {

// Ranked or unranked passage scores; lengths always match.
struct ScoreList {
  std::vector<std::string> ids;
  Eigen::VectorXd scores;

  std::size_t size() const { return ids.size(); }
};

// Sum over query token rows of the max dot product against passage token
// rows. Both matrices are token_count x dim with no padding.
template <typename DerivedQ, typename DerivedK>
double sum_of_max_kernel(const Eigen::MatrixBase<DerivedQ>& query_tokens,
                         const Eigen::MatrixBase<DerivedK>& passage_tokens) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < query_tokens.rows(); ++i) {
    total += static_cast<double>(
        (passage_tokens * query_tokens.row(i).transpose()).maxCoeff());
  }
  return total;
}

template <typename Scalar>
RowMatrix<Scalar> unmasked_rows(const RowMatrix<Scalar>& tokens,
                                const BoolArray& pad_mask) {
  Eigen::Index n = 0;
  for (Eigen::Index t = 0; t < pad_mask.size(); ++t) {
    if (pad_mask[t]) ++n;
  }
  RowMatrix<Scalar> out(n, tokens.cols());
  Eigen::Index r = 0;
  for (Eigen::Index t = 0; t < pad_mask.size(); ++t) {
    if (pad_mask[t]) out.row(r++) = tokens.row(t);
  }
  return out;
}

// Late-interaction score for one attention head: masked passage tokens are
// excluded from the inner max, masked query tokens from the outer sum.
template <typename Scalar>
double multi_vector_score(const MultiVectorEmbedding<Scalar>& query,
                          const MultiVectorEmbedding<Scalar>& passage,
                          Eigen::Index head_index) {
  if (query.dim() != passage.dim()) {
    throw std::invalid_argument("multi_vector_score: dimension mismatch");
  }
  if (head_index < 0 || head_index >= query.head_count() ||
      head_index >= passage.head_count()) {
    throw std::invalid_argument("multi_vector_score: head index out of range");
  }
  const RowMatrix<Scalar> q =
      unmasked_rows(query.heads[static_cast<std::size_t>(head_index)],
                    query.pad_mask);
  const RowMatrix<Scalar> k =
      unmasked_rows(passage.heads[static_cast<std::size_t>(head_index)],
                    passage.pad_mask);
  if (q.rows() == 0 || k.rows() == 0) {
    throw std::invalid_argument("multi_vector_score: all tokens masked");
  }
  return sum_of_max_kernel(q, k);
}

// Mean over unmasked token rows followed by layer normalization without
// affine parameters: (v - mean) / (population_std + epsilon).
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> dense_embed(
    const Eigen::MatrixBase<Derived>& tokens, const BoolArray& pad_mask,
    double epsilon = 1e-6) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Vector<Scalar, Eigen::Dynamic>;
  if (tokens.rows() != pad_mask.size()) {
    throw std::invalid_argument("dense_embed: pad_mask length mismatch");
  }
  Vector mean = Vector::Zero(tokens.cols());
  Eigen::Index n = 0;
  for (Eigen::Index t = 0; t < tokens.rows(); ++t) {
    if (!pad_mask[t]) continue;
    mean += tokens.row(t).transpose();
    ++n;
  }
  if (n == 0) {
    throw std::invalid_argument("dense_embed: all tokens masked");
  }
  mean /= static_cast<Scalar>(n);
  if (!mean.allFinite()) {
    throw std::invalid_argument("dense_embed: non-finite values");
  }
  const Scalar mu = mean.mean();
  const Scalar var =
      (mean.array() - mu).matrix().squaredNorm() / static_cast<Scalar>(mean.size());
  const Scalar denom = std::sqrt(var) + static_cast<Scalar>(epsilon);
  return (mean.array() - mu).matrix() / denom;
}

template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> dense_embed(
    const Eigen::MatrixBase<Derived>& tokens, double epsilon = 1e-6) {
  return dense_embed(tokens, BoolArray::Constant(tokens.rows(), true), epsilon);
}

template <typename DerivedA, typename DerivedB>
double dense_score(const Eigen::MatrixBase<DerivedA>& q,
                   const Eigen::MatrixBase<DerivedB>& d) {
  if (q.size() != d.size()) {
    throw std::invalid_argument("dense_score: dimension mismatch");
  }
  return static_cast<double>(q.dot(d));
}

// softmax(scores / temperature) with max-subtraction stabilization.
Distribution retrieval_distribution(const ScoreList& scores,
                                    double temperature = 1.0);

}  // namespace clqa
