// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "clqa/embedding.hpp"

namespace clqa {

// One named row-major little-endian f32 array plus its declared shape.
struct TensorArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::string role;
  std::vector<float> data;

  std::size_t elem_count() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  Eigen::Map<const RowMatrixF> as_matrix(Eigen::Index rows,
                                         Eigen::Index cols) const {
    return Eigen::Map<const RowMatrixF>(data.data(), rows, cols);
  }

  Eigen::Map<const Eigen::VectorXf> as_vector() const {
    return Eigen::Map<const Eigen::VectorXf>(
        data.data(), static_cast<Eigen::Index>(data.size()));
  }
};

// Named arrays in manifest order.
class TensorBundle {
 public:
  void add(TensorArray array);

  bool contains(const std::string& name) const {
    return by_name_.count(name) != 0;
  }
  const TensorArray& at(const std::string& name) const;
  const std::vector<TensorArray>& arrays() const { return arrays_; }

 private:
  std::vector<TensorArray> arrays_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

// Directory layout: manifest.json (list of {name, shape, role, dtype})
// plus one raw <name>.f32 file per array. Rejects shape/size mismatches
// and non-finite values.
TensorBundle load_tensor_bundle(const std::filesystem::path& dir);
void save_tensor_bundle(const TensorBundle& bundle,
                        const std::filesystem::path& dir);

// Interprets a [H, T, e] array as a multi-vector embedding (all tokens
// unmasked) or a [d] / [1, d] array as a dense vector.
MultiVectorEmbeddingF embedding_from_array(const TensorArray& array);
Eigen::VectorXf dense_from_array(const TensorArray& array);

}  // namespace clqa
