// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "clqa/distill.hpp"
#include "doctest.h"

using namespace clqa;

namespace {

Distribution dist(std::vector<std::string> ids, std::vector<double> probs) {
  Distribution d;
  d.ids = std::move(ids);
  d.probs = Eigen::Map<const Eigen::VectorXd>(probs.data(),
                                              static_cast<Eigen::Index>(probs.size()));
  return d;
}

// Straight-line evaluation of the definition, independent of the library.
double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) total += p[i] * std::log(p[i] / q[i]);
  }
  return total;
}

Distribution random_dist(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> value(0.01, 1.0);
  Eigen::VectorXd w(n);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    w[i] = value(rng);
    ids.push_back("p" + std::to_string(i));
  }
  return make_distribution(ids, w);
}

AnswerLogProbs lp(std::vector<double> values) {
  AnswerLogProbs out;
  out.values = Eigen::Map<const Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));
  return out;
}

}  // namespace

TEST_CASE("kl_divergence worked examples") {
  const Distribution even = dist({"a", "b"}, {0.5, 0.5});
  const Distribution skew = dist({"a", "b"}, {0.25, 0.75});
  CHECK(kl_divergence(even, even) == 0.0);
  CHECK(kl_divergence(even, skew) ==
        doctest::Approx(kl_oracle({0.5, 0.5}, {0.25, 0.75})).epsilon(1e-12));
  CHECK(kl_divergence(even, skew) == doctest::Approx(0.14384).epsilon(1e-4));

  const Distribution point = dist({"a", "b"}, {1.0, 0.0});
  CHECK(kl_divergence(point, even) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const Distribution other = dist({"a", "c"}, {0.5, 0.5});
  CHECK_THROWS_AS(kl_divergence(even, other), std::invalid_argument);
}

TEST_CASE("kl_divergence asymmetry and properties") {
  const Distribution even = dist({"a", "b"}, {0.5, 0.5});
  const Distribution skew = dist({"a", "b"}, {0.25, 0.75});
  CHECK(kl_divergence(skew, even) ==
        doctest::Approx(kl_oracle({0.25, 0.75}, {0.5, 0.5})).epsilon(1e-12));
  CHECK(kl_divergence(skew, even) != kl_divergence(even, skew));

  std::mt19937 rng(47);
  std::uniform_int_distribution<int> length(1, 10);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = length(rng);
    const Distribution p = random_dist(rng, n);
    const Distribution q = random_dist(rng, n);
    const double kl = kl_divergence(p, q);
    CHECK(kl >= 0.0);
    if ((p.probs - q.probs).cwiseAbs().maxCoeff() <= 1e-12) {
      CHECK(kl <= 1e-9);
    }
    CHECK(kl_divergence(p, p) == 0.0);
  }
}

TEST_CASE("answer_log_likelihood sums per-token values") {
  CHECK(answer_log_likelihood(lp({-0.5, -1.0})) == doctest::Approx(-1.5));
  CHECK(answer_log_likelihood(lp({0.0})) == 0.0);
  CHECK(answer_log_likelihood(lp(std::vector<double>(10, -0.1))) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(answer_log_likelihood(lp({0.1})), std::invalid_argument);
  CHECK_THROWS_AS(answer_log_likelihood(lp({})), std::invalid_argument);
}

TEST_CASE("stage1_losses collapses to the reader term at the fixed point") {
  const Distribution teacher = dist({"a", "b"}, {0.5, 0.5});
  const std::vector<Distribution> steps{dist({"t0", "t1"}, {0.4, 0.6})};
  const LossReport report = stage1_losses(teacher, teacher, teacher,
                                          lp({-1.0}), lp({-2.0}), steps, steps,
                                          8.0);
  CHECK(report.kl == 0.0);
  CHECK(report.align == 0.0);
  CHECK(report.reader == doctest::Approx(3.0));
  CHECK(report.total == doctest::Approx(3.0));
}

TEST_CASE("stage1_losses documented fixture") {
  const Distribution teacher = dist({"a", "b"}, {0.5, 0.5});
  const Distribution student_l = dist({"a", "b"}, {0.25, 0.75});
  const Distribution student_en = teacher;
  const std::vector<Distribution> steps{dist({"t0", "t1"}, {0.4, 0.6})};
  const LossReport report = stage1_losses(student_l, student_en, teacher,
                                          lp({-1.0}), lp({-2.0}), steps, steps,
                                          1.0);
  // both terms follow KL(student_l || .) with the skewed student first
  const double kl_expected = kl_oracle({0.25, 0.75}, {0.5, 0.5});
  CHECK(report.kl == doctest::Approx(kl_expected).epsilon(1e-12));
  CHECK(report.kl == doctest::Approx(0.13081).epsilon(1e-4));
  CHECK(report.align == doctest::Approx(kl_expected).epsilon(1e-12));
  CHECK(report.reader == doctest::Approx(3.0));
  CHECK(report.total ==
        doctest::Approx(3.0 + 2.0 * kl_expected).epsilon(1e-12));
}

TEST_CASE("stage1_losses step distributions feed the align term") {
  const Distribution teacher = dist({"a", "b"}, {0.5, 0.5});
  const std::vector<Distribution> en_steps{dist({"t0", "t1"}, {0.5, 0.5}),
                                           dist({"t0", "t1"}, {0.5, 0.5})};
  const std::vector<Distribution> l_steps{dist({"t0", "t1"}, {0.25, 0.75}),
                                          dist({"t0", "t1"}, {0.5, 0.5})};
  const LossReport report = stage1_losses(teacher, teacher, teacher,
                                          lp({-1.0}), lp({-1.0}), en_steps,
                                          l_steps, 1.0);
  const double expected = kl_oracle({0.25, 0.75}, {0.5, 0.5}) / 2.0;
  CHECK(report.align == doctest::Approx(expected).epsilon(1e-12));

  const std::vector<Distribution> short_steps{en_steps[0]};
  CHECK_THROWS_AS(stage1_losses(teacher, teacher, teacher, lp({-1.0}),
                                lp({-1.0}), en_steps, short_steps, 1.0),
                  std::invalid_argument);
}

TEST_CASE("stage1_losses total is affine in alpha") {
  std::mt19937 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const Distribution teacher = random_dist(rng, 4);
    const Distribution student_l = random_dist(rng, 4);
    const Distribution student_en = random_dist(rng, 4);
    const std::vector<Distribution> steps_en{random_dist(rng, 3)};
    const std::vector<Distribution> steps_l{random_dist(rng, 3)};
    const double a1 = 1.0, a2 = 8.0;
    const LossReport r1 = stage1_losses(student_l, student_en, teacher,
                                        lp({-0.5}), lp({-1.5}), steps_en,
                                        steps_l, a1);
    const LossReport r2 = stage1_losses(student_l, student_en, teacher,
                                        lp({-0.5}), lp({-1.5}), steps_en,
                                        steps_l, a2);
    // components do not depend on alpha
    CHECK(r1.kl == r2.kl);
    CHECK(r1.align == r2.align);
    CHECK(r1.reader == r2.reader);
    // totals recompute exactly from the affine formula
    CHECK(r1.total == r1.reader + a1 * (r1.kl + r1.align));
    CHECK(r2.total == r2.reader + a2 * (r2.kl + r2.align));
    const double slope = (r2.total - r1.total) / (a2 - a1);
    CHECK(slope == doctest::Approx(r1.kl + r1.align).epsilon(1e-12));
  }
}

TEST_CASE("cross_attention_target worked examples") {
  CrossAttentionBundle ca;
  ca.head_count = 2;
  ca.ids = {"p1", "p2"};
  RowMatrixD p1(2, 2);
  p1 << 0.2, 0.1, 0.3, 0.0;
  RowMatrixD p2(2, 1);
  p2 << 0.4, 0.1;
  ca.scores = {p1, p2};
  const Distribution target = cross_attention_target(ca);
  // raw mass (0.3, 0.25) normalized
  CHECK(target.probs[0] == doctest::Approx(0.3 / 0.55).epsilon(1e-12));
  CHECK(target.probs[1] == doctest::Approx(0.25 / 0.55).epsilon(1e-12));

  CrossAttentionBundle single;
  single.head_count = 1;
  single.ids = {"p1"};
  single.scores = {RowMatrixD::Constant(1, 3, 0.2)};
  CHECK(cross_attention_target(single).probs[0] == doctest::Approx(1.0));

  CrossAttentionBundle uniform;
  uniform.head_count = 2;
  uniform.ids = {"p1", "p2"};
  uniform.scores = {RowMatrixD::Constant(2, 4, 0.25),
                    RowMatrixD::Constant(2, 4, 0.25)};
  const Distribution even = cross_attention_target(uniform);
  CHECK(even.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cross_attention_target validation and scale invariance") {
  CrossAttentionBundle zero;
  zero.head_count = 1;
  zero.ids = {"p1"};
  zero.scores = {RowMatrixD::Zero(1, 2)};
  CHECK_THROWS_AS(cross_attention_target(zero), std::invalid_argument);

  CrossAttentionBundle negative;
  negative.head_count = 1;
  negative.ids = {"p1"};
  negative.scores = {RowMatrixD::Constant(1, 2, -0.1)};
  CHECK_THROWS_AS(cross_attention_target(negative), std::invalid_argument);

  std::mt19937 rng(59);
  std::uniform_real_distribution<double> value(0.0, 1.0), scale(0.01, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    CrossAttentionBundle ca;
    ca.head_count = 3;
    for (int p = 0; p < 4; ++p) {
      ca.ids.push_back("p" + std::to_string(p));
      RowMatrixD m(3, 2 + p);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = value(rng);
      ca.scores.push_back(std::move(m));
    }
    const Distribution base = cross_attention_target(ca);
    const double c = scale(rng);
    CrossAttentionBundle scaled = ca;
    for (RowMatrixD& m : scaled.scores) m *= c;
    const Distribution moved = cross_attention_target(scaled);
    CHECK((moved.probs - base.probs).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("stage2_loss worked examples") {
  const Distribution retrieval = dist({"a", "b"}, {0.5, 0.5});
  const Distribution target = dist({"a", "b"}, {0.25, 0.75});

  const LossReport identity = stage2_loss(retrieval, retrieval, lp({-2.0}), 8.0);
  CHECK(identity.total == doctest::Approx(2.0));

  const LossReport fixture = stage2_loss(retrieval, target, lp({-2.0}), 8.0);
  const double expected = 8.0 * kl_oracle({0.5, 0.5}, {0.25, 0.75}) + 2.0;
  CHECK(fixture.total == doctest::Approx(expected).epsilon(1e-12));
  CHECK(fixture.total == doctest::Approx(3.150728).epsilon(1e-5));

  const LossReport off = stage2_loss(retrieval, target, lp({-2.0}), 0.0);
  CHECK(off.total == doctest::Approx(2.0));
}

TEST_CASE("loss reports recompute their totals") {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const Distribution p = random_dist(rng, 5);
    const Distribution q = random_dist(rng, 5);
    const LossReport e2e = stage2_loss(p, q, lp({-0.3, -0.7}), 8.0);
    CHECK(std::abs(e2e.total - recompute_total(e2e)) <= 1e-12);
    const LossReport s1 = stage1_losses(p, q, q, lp({-0.3}), lp({-0.7}), {}, {},
                                        8.0);
    CHECK(std::abs(s1.total - recompute_total(s1)) <= 1e-12);
  }
}
