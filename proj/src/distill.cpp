// SPDX-License-Identifier: Apache-2.0
#include "clqa/distill.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace clqa {
namespace {

constexpr double kEpsilonFloor = 1e-12;

void check_log_probs(const AnswerLogProbs& lp) {
  if (lp.values.size() == 0) {
    throw std::invalid_argument("answer log-probs must be non-empty");
  }
  for (Eigen::Index i = 0; i < lp.values.size(); ++i) {
    const double v = lp.values[i];
    if (!std::isfinite(v)) {
      throw std::invalid_argument("answer log-probs must be finite");
    }
    if (v > 0.0) {
      throw std::invalid_argument("answer log-prob above 0");
    }
  }
}

double mean_step_kl(const std::vector<Distribution>& p_steps,
                    const std::vector<Distribution>& q_steps) {
  if (p_steps.size() != q_steps.size()) {
    throw std::invalid_argument(
        "answer token distributions: step length mismatch");
  }
  if (p_steps.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < p_steps.size(); ++t) {
    total += kl_divergence(p_steps[t], q_steps[t]);
  }
  return total / static_cast<double>(p_steps.size());
}

}  // namespace

double recompute_total(const LossReport& r) {
  if (r.kind == LossKind::kStage1) {
    return r.reader + r.alpha * (r.kl + r.align);
  }
  return r.alpha * r.kl + r.reader;
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.ids != q.ids) {
    throw std::invalid_argument("kl_divergence: id mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.probs.size(); ++i) {
    const double pi = p.probs[i];
    if (pi == 0.0) continue;
    const double qi = std::max(q.probs[i], kEpsilonFloor);
    total += pi * std::log(pi / qi);
  }
  // Gibbs' inequality: negatives can only come from rounding.
  return std::max(total, 0.0);
}

double answer_log_likelihood(const AnswerLogProbs& lp) {
  check_log_probs(lp);
  return lp.values.sum();
}

LossReport stage1_losses(const Distribution& student_l,
                         const Distribution& student_en,
                         const Distribution& teacher,
                         const AnswerLogProbs& answer_lp_en,
                         const AnswerLogProbs& answer_lp_l,
                         const std::vector<Distribution>& answer_token_dists_en,
                         const std::vector<Distribution>& answer_token_dists_l,
                         double alpha) {
  LossReport report;
  report.kind = LossKind::kStage1;
  report.alpha = alpha;
  report.kl =
      kl_divergence(student_l, teacher) + kl_divergence(student_en, teacher);
  report.reader =
      -answer_log_likelihood(answer_lp_en) - answer_log_likelihood(answer_lp_l);
  report.align = kl_divergence(student_l, student_en) +
                 mean_step_kl(answer_token_dists_l, answer_token_dists_en);
  report.total = report.reader + alpha * (report.kl + report.align);
  return report;
}

Distribution cross_attention_target(const CrossAttentionBundle& ca) {
  if (ca.ids.empty() || ca.ids.size() != ca.scores.size()) {
    throw std::invalid_argument(
        "cross_attention_target: ids/scores length mismatch");
  }
  if (ca.head_count <= 0) {
    throw std::invalid_argument("cross_attention_target: head count must be positive");
  }
  std::unordered_set<std::string> seen;
  Eigen::VectorXd raw(static_cast<Eigen::Index>(ca.scores.size()));
  for (std::size_t i = 0; i < ca.scores.size(); ++i) {
    if (!seen.insert(ca.ids[i]).second) {
      throw std::invalid_argument("cross_attention_target: duplicate id: " +
                                  ca.ids[i]);
    }
    const RowMatrixD& m = ca.scores[i];
    if (m.rows() != ca.head_count) {
      throw std::invalid_argument(
          "cross_attention_target: head count mismatch for " + ca.ids[i]);
    }
    if (!m.allFinite() || (m.array() < 0.0).any()) {
      throw std::invalid_argument(
          "cross_attention_target: scores must be finite and non-negative");
    }
    raw[static_cast<Eigen::Index>(i)] =
        m.sum() / static_cast<double>(ca.head_count);
  }
  try {
    return make_distribution(ca.ids, raw);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("cross_attention_target: all scores are zero");
  }
}

LossReport stage2_loss(const Distribution& retrieval_dist,
                       const Distribution& ca_target,
                       const AnswerLogProbs& answer_lp, double alpha) {
  LossReport report;
  report.kind = LossKind::kEndToEnd;
  report.alpha = alpha;
  report.kl = kl_divergence(retrieval_dist, ca_target);
  report.reader = -answer_log_likelihood(answer_lp);
  report.align = 0.0;
  report.total = alpha * report.kl + report.reader;
  return report;
}

}  // namespace clqa
