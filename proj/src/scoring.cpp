// SPDX-License-Identifier: Apache-2.0
#include "clqa/scoring.hpp"

namespace clqa {

Distribution retrieval_distribution(const ScoreList& scores,
                                    double temperature) {
  if (scores.ids.empty()) {
    throw std::invalid_argument("retrieval_distribution: empty score list");
  }
  if (static_cast<Eigen::Index>(scores.ids.size()) != scores.scores.size()) {
    throw std::invalid_argument("retrieval_distribution: length mismatch");
  }
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("retrieval_distribution: temperature must be positive");
  }
  if (!scores.scores.allFinite()) {
    throw std::invalid_argument("retrieval_distribution: non-finite score");
  }
  const Eigen::VectorXd scaled = scores.scores / temperature;
  const double peak = scaled.maxCoeff();
  const Eigen::VectorXd weights = (scaled.array() - peak).exp();
  return make_distribution(scores.ids, weights);
}

}  // namespace clqa
