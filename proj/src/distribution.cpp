// SPDX-License-Identifier: Apache-2.0
#include "clqa/distribution.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace clqa {

Distribution make_distribution(std::vector<std::string> ids,
                               const Eigen::VectorXd& weights) {
  if (static_cast<Eigen::Index>(ids.size()) != weights.size()) {
    throw std::invalid_argument("make_distribution: ids/weights length mismatch");
  }
  if (ids.empty()) {
    throw std::invalid_argument("make_distribution: empty input");
  }
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("make_distribution: duplicate id: " + id);
    }
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!std::isfinite(w)) {
      throw std::invalid_argument("make_distribution: non-finite weight");
    }
    if (w < 0.0) {
      throw std::invalid_argument("make_distribution: negative weight");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw std::invalid_argument("make_distribution: all weights are zero");
  }
  Distribution d;
  d.ids = std::move(ids);
  d.probs = weights / total;
  return d;
}

void validate_distribution(const Distribution& d) {
  if (d.ids.empty() ||
      static_cast<Eigen::Index>(d.ids.size()) != d.probs.size()) {
    throw std::invalid_argument("distribution: ids/probs length mismatch");
  }
  std::unordered_set<std::string> seen;
  for (const std::string& id : d.ids) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("distribution: duplicate id: " + id);
    }
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.probs.size(); ++i) {
    if (!(d.probs[i] >= 0.0) || !std::isfinite(d.probs[i])) {
      throw std::invalid_argument("distribution: invalid probability");
    }
    total += d.probs[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("distribution: probabilities do not sum to 1");
  }
}

}  // namespace clqa
