// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace clqa {

// Normalized probabilities over candidate passage ids.
struct Distribution {
  std::vector<std::string> ids;
  Eigen::VectorXd probs;

  std::size_t size() const { return ids.size(); }
};

// probs = weights / sum(weights). Throws on negative, non-finite or
// all-zero weights and on id/weight length mismatch or duplicate ids.
Distribution make_distribution(std::vector<std::string> ids,
                               const Eigen::VectorXd& weights);

// Checks the Distribution invariants (non-negative, sums to 1 within
// 1e-9, unique ids); used when distributions arrive from files.
void validate_distribution(const Distribution& d);

}  // namespace clqa
