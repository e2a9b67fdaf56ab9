// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "clqa/distribution.hpp"
#include "clqa/embedding.hpp"

namespace clqa {

// Per-token log-probabilities of a gold answer under a decoder; all <= 0.
struct AnswerLogProbs {
  Eigen::VectorXd values;
};

// Cross-attention mass for the first output token: per passage an
// H x token_count matrix of non-negative scores.
struct CrossAttentionBundle {
  Eigen::Index head_count = 0;
  std::vector<std::string> ids;
  std::vector<RowMatrixD> scores;
};

enum class LossKind { kStage1, kEndToEnd };

struct LossReport {
  LossKind kind = LossKind::kStage1;
  double alpha = 0.0;
  double kl = 0.0;
  double reader = 0.0;
  double align = 0.0;
  double total = 0.0;
};

// The documented combination for the report's kind, recomputed from the
// stored components.
double recompute_total(const LossReport& report);

// sum_i p_i * ln(p_i / q_i) with 0 * ln 0 = 0 and an epsilon floor of
// 1e-12 on q. Requires identical id lists in identical order.
double kl_divergence(const Distribution& p, const Distribution& q);

double answer_log_likelihood(const AnswerLogProbs& lp);

// kl    = KL(student_l || teacher) + KL(student_en || teacher)
// reader = -sum(lp_en) - sum(lp_l)
// align = KL(student_l || student_en)
//         + mean over steps of KL(answer_tok_l || answer_tok_en)
// total = reader + alpha * (kl + align)
LossReport stage1_losses(const Distribution& student_l,
                         const Distribution& student_en,
                         const Distribution& teacher,
                         const AnswerLogProbs& answer_lp_en,
                         const AnswerLogProbs& answer_lp_l,
                         const std::vector<Distribution>& answer_token_dists_en,
                         const std::vector<Distribution>& answer_token_dists_l,
                         double alpha);

// Per-passage cross-attention mass summed over heads and tokens, divided
// by the head count, then normalized. The result is a plain constant: no
// gradient contract attaches to it.
Distribution cross_attention_target(const CrossAttentionBundle& ca);

// kl = KL(retrieval_dist || ca_target); reader = -sum(lp);
// total = alpha * kl + reader.
LossReport stage2_loss(const Distribution& retrieval_dist,
                       const Distribution& ca_target,
                       const AnswerLogProbs& answer_lp, double alpha);

}  // namespace clqa
