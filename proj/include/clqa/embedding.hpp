// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace clqa {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixF = RowMatrix<float>;
using RowMatrixD = RowMatrix<double>;

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Per-head token matrices for one text: each head holds a
// token_count x dim matrix; pad_mask marks real tokens.
template <typename Scalar>
struct MultiVectorEmbedding {
  using Matrix = RowMatrix<Scalar>;

  std::vector<Matrix> heads;
  BoolArray pad_mask;

  Eigen::Index head_count() const {
    return static_cast<Eigen::Index>(heads.size());
  }
  Eigen::Index token_count() const {
    return heads.empty() ? 0 : heads.front().rows();
  }
  Eigen::Index dim() const { return heads.empty() ? 0 : heads.front().cols(); }

  Eigen::Index unmasked_count() const {
    Eigen::Index n = 0;
    for (Eigen::Index t = 0; t < pad_mask.size(); ++t) {
      if (pad_mask[t]) ++n;
    }
    return n;
  }

  void validate() const {
    if (heads.empty()) {
      throw std::invalid_argument("embedding has no heads");
    }
    const Eigen::Index rows = heads.front().rows();
    const Eigen::Index cols = heads.front().cols();
    if (rows <= 0 || cols <= 0) {
      throw std::invalid_argument("embedding head matrices must be non-empty");
    }
    for (const Matrix& h : heads) {
      if (h.rows() != rows || h.cols() != cols) {
        throw std::invalid_argument("embedding heads disagree on shape");
      }
      if (!h.allFinite()) {
        throw std::invalid_argument("embedding contains non-finite values");
      }
    }
    if (pad_mask.size() != rows) {
      throw std::invalid_argument("pad_mask length does not match token count");
    }
    if (unmasked_count() == 0) {
      throw std::invalid_argument("embedding has no unmasked tokens");
    }
  }
};

using MultiVectorEmbeddingF = MultiVectorEmbedding<float>;
using MultiVectorEmbeddingD = MultiVectorEmbedding<double>;

template <typename Scalar>
MultiVectorEmbedding<Scalar> make_embedding(
    std::vector<RowMatrix<Scalar>> heads) {
  MultiVectorEmbedding<Scalar> e;
  e.heads = std::move(heads);
  e.pad_mask = BoolArray::Constant(e.token_count(), true);
  e.validate();
  return e;
}

}  // namespace clqa
