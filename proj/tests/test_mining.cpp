// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "clqa/mining.hpp"
#include "doctest.h"

using namespace clqa;

namespace {

SentencePool pool_from(const std::string& lang,
                       const std::vector<std::vector<float>>& vectors) {
  SentencePool pool;
  pool.lang = lang;
  pool.embeddings.resize(static_cast<Eigen::Index>(vectors.size()),
                         static_cast<Eigen::Index>(vectors[0].size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    SentenceRecord record;
    record.text = lang + " sentence " + std::to_string(i);
    pool.sentences.push_back(record);
    for (std::size_t c = 0; c < vectors[i].size(); ++c) {
      pool.embeddings(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(c)) = vectors[i][c];
    }
  }
  return pool;
}

}  // namespace

TEST_CASE("cosine_knn basic geometry") {
  const SentencePool a = pool_from("en", {{1.f, 0.f}});
  const SentencePool b = pool_from("xx", {{1.f, 0.f}, {0.f, 1.f}});
  const KnnResult knn = cosine_knn(a, b, 1);
  REQUIRE(knn.forward[0].size() == 1);
  CHECK(knn.forward[0][0].index == 0);
  CHECK(knn.forward[0][0].cosine == doctest::Approx(1.0).epsilon(1e-6));

  // identical unit vectors: every neighbour cosine is 1
  const SentencePool same = pool_from("xx", {{0.f, 1.f}, {0.f, 1.f}});
  const KnnResult ones = cosine_knn(same, same, 2);
  for (const auto& list : ones.forward) {
    for (const Neighbor& n : list) CHECK(n.cosine == doctest::Approx(1.0));
  }

  // k larger than the pool returns the whole pool
  const KnnResult wide = cosine_knn(a, b, 10);
  CHECK(wide.forward[0].size() == 2);

  const SentencePool bad = pool_from("xx", {{1.f, 0.f, 0.f}});
  CHECK_THROWS_AS(cosine_knn(a, bad, 1), std::invalid_argument);
}

TEST_CASE("cosine of the zero vector is zero") {
  const SentencePool a = pool_from("en", {{0.f, 0.f}});
  const SentencePool b = pool_from("xx", {{1.f, 0.f}});
  const KnnResult knn = cosine_knn(a, b, 1);
  CHECK(knn.forward[0][0].cosine == 0.0);
}

TEST_CASE("margin_score worked examples") {
  // uniform neighbourhoods: each side contributes c/2
  const std::vector<double> uniform{0.7, 0.7, 0.7};
  CHECK(margin_score(0.7, uniform, uniform, 3) ==
        doctest::Approx(1.0).epsilon(1e-9));

  const std::vector<double> ni{0.9, 0.5}, nj{0.9, 0.7};
  CHECK(margin_score(0.9, ni, nj, 2) == doctest::Approx(1.2).epsilon(1e-12));

  CHECK(margin_score(0.0, ni, nj, 2) == 0.0);

  const std::vector<double> zeros{0.0, 0.0};
  CHECK_THROWS_AS(margin_score(0.5, zeros, zeros, 2), std::invalid_argument);
  CHECK_THROWS_AS(margin_score(0.5, ni, nj, 0), std::invalid_argument);
  CHECK_THROWS_AS(margin_score(0.5, {}, nj, 2), std::invalid_argument);
}

TEST_CASE("margin_score is invariant to cosine rescaling") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> value(0.01, 1.0), scale(0.1, 10.0);
  std::uniform_int_distribution<int> length(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = length(rng);
    std::vector<double> ni, nj;
    for (int i = 0; i < k; ++i) {
      ni.push_back(value(rng));
      nj.push_back(value(rng));
    }
    const double cos_ij = value(rng);
    const double c = scale(rng);
    std::vector<double> ni_scaled = ni, nj_scaled = nj;
    for (double& x : ni_scaled) x *= c;
    for (double& x : nj_scaled) x *= c;
    const double base = margin_score(cos_ij, ni, nj, k);
    const double scaled = margin_score(cos_ij * c, ni_scaled, nj_scaled, k);
    CHECK(std::abs(base - scaled) <= 1e-12 * std::max(1.0, std::abs(base)));
  }
}

TEST_CASE("make_cloze masks the answer span") {
  const std::string sentence = "His father sent him in 1945";
  const auto cloze =
      make_cloze(sentence, 23, 27, std::nullopt, false, "<mask>");
  CHECK(cloze.en_cloze == "His father sent him in <mask>");
  CHECK(cloze.answer == "1945");
  CHECK_FALSE(cloze.l_cloze.has_value());

  const auto latin = make_cloze(sentence, 23, 27,
                                std::string("Su padre lo envió en 1945"), true,
                                "<mask>");
  CHECK(*latin.l_cloze == "Su padre lo envió en <mask>");

  // non-Latin script: the L sentence stays unchanged
  const std::string ja = "父は1945年に彼を送った";
  const auto unchanged = make_cloze(sentence, 23, 27, ja, false, "<mask>");
  CHECK(*unchanged.l_cloze == ja);

  // case-insensitive fallback for Latin scripts
  const auto ci = make_cloze("met NATO officials", 4, 8,
                             std::string("spotkanie z nato"), true, "<mask>");
  CHECK(*ci.l_cloze == "spotkanie z <mask>");

  CHECK_THROWS_AS(make_cloze(sentence, 23, 99, std::nullopt, false, "<mask>"),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_cloze(sentence, 5, 5, std::nullopt, false, "<mask>"),
                  std::invalid_argument);
}

TEST_CASE("mine_parallel_pairs recovers planted pairs only") {
  // planted pairs share a basis direction; distractors sit on other axes
  // with a small shared component so margins stay defined.
  const std::size_t planted = 3, distractors = 4, dim = 11;
  std::vector<std::vector<float>> en_vecs, l_vecs;
  const auto basis = [&](std::size_t axis, float common) {
    std::vector<float> v(dim, 0.f);
    v[axis] = 1.f;
    for (std::size_t c = 0; c < dim; ++c) v[c] += common;
    return v;
  };
  for (std::size_t i = 0; i < planted; ++i) {
    en_vecs.push_back(basis(i, 0.05f));
    l_vecs.push_back(basis(i, 0.05f));
  }
  for (std::size_t i = 0; i < distractors; ++i) {
    en_vecs.push_back(basis(planted + i, 0.05f));
    l_vecs.push_back(basis(planted + distractors + i, 0.05f));
  }
  SentencePool en = pool_from("en", en_vecs);
  SentencePool l = pool_from("de", l_vecs);
  for (std::size_t i = 0; i < en.sentences.size(); ++i) {
    en.sentences[i].text = "entity" + std::to_string(i) + " acted";
    en.sentences[i].spans = {
        {0, std::string("entity" + std::to_string(i)).size(), "PERSON"}};
  }
  MiningConfig config;
  config.knn_k = 2;
  config.threshold = 1.5;
  config.l_is_latin = true;
  const std::vector<ParallelPair> pairs = mine_parallel_pairs(en, l, config);
  REQUIRE(pairs.size() == planted);
  for (std::size_t i = 0; i < planted; ++i) {
    CHECK(pairs[i].en_text == en.sentences[i].text);
    CHECK(pairs[i].l_text == l.sentences[i].text);
    CHECK(pairs[i].margin >= 1.5);
    CHECK(pairs[i].answer == "entity" + std::to_string(i));
    CHECK(pairs[i].en_cloze == "<mask> acted");
  }
}

TEST_CASE("mine_parallel_pairs boundary and determinism") {
  SentencePool en = pool_from("en", {{1.f, 0.f}});
  en.sentences[0].spans = {{0, 2, "ORG"}};
  SentencePool empty;
  empty.lang = "de";
  CHECK(mine_parallel_pairs(en, empty, {}).empty());

  // two English sentences claiming the same L sentence: higher margin wins
  SentencePool both = pool_from("en", {{1.f, 0.f}, {0.9f, 0.1f}});
  both.sentences[0].text = "alpha won";
  both.sentences[0].spans = {{0, 5, "PERSON"}};
  both.sentences[1].text = "beta won";
  both.sentences[1].spans = {{0, 4, "PERSON"}};
  SentencePool solo = pool_from("de", {{1.f, 0.f}});
  MiningConfig config;
  config.knn_k = 1;
  config.threshold = 0.0;
  const auto once = mine_parallel_pairs(both, solo, config);
  REQUIRE(once.size() == 1);
  CHECK(once[0].en_text == "alpha won");
  const auto again = mine_parallel_pairs(both, solo, config);
  CHECK(once[0].margin == again[0].margin);

  SentencePool bad = pool_from("en", {{1.f, 0.f}});
  bad.sentences[0].text = "oh";
  bad.sentences[0].spans = {{0, 10, "ORG"}};
  CHECK_THROWS_AS(mine_parallel_pairs(bad, solo, config), std::invalid_argument);
}

TEST_CASE("balanced sampling probabilities") {
  LanguageStats stats;
  stats.counts = {{"a", 100}, {"b", 400}};
  const auto half = balanced_sample_probs(stats, 0.5);
  CHECK(half.at("a") == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(half.at("b") == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

  const auto raw = balanced_sample_probs(stats, 1.0);
  CHECK(raw.at("a") == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(raw.at("b") == doctest::Approx(0.8).epsilon(1e-12));

  LanguageStats solo;
  solo.counts = {{"x", 7}};
  CHECK(balanced_sample_probs(solo, 0.25).at("x") == doctest::Approx(1.0));

  CHECK_THROWS_AS(balanced_sample_probs(stats, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(balanced_sample_probs(stats, 1.5), std::invalid_argument);
}

TEST_CASE("balanced sampling quotas") {
  LanguageStats stats;
  stats.counts = {{"a", 100}, {"b", 400}};
  const auto quotas = balanced_sample_counts(stats, 0.5, 300);
  CHECK(quotas.at("a") + quotas.at("b") == 300);
  CHECK(quotas.at("a") == 100);  // 1/3 of 300

  // quota capped by availability, overflow redistributed
  LanguageStats skewed;
  skewed.counts = {{"a", 10}, {"b", 1000}};
  const auto capped = balanced_sample_counts(skewed, 0.5, 600);
  CHECK(capped.at("a") == 10);
  CHECK(capped.at("b") == 590);

  CHECK_THROWS_AS(balanced_sample_counts(stats, 0.5, 501), std::invalid_argument);
  CHECK_THROWS_AS(balanced_sample_counts(stats, 0.5, 0), std::invalid_argument);
}

TEST_CASE("balanced sampling flattens as alpha decreases") {
  std::mt19937 rng(43);
  std::uniform_int_distribution<int> langs(2, 6);
  std::uniform_int_distribution<int> count(1, 10000);
  for (int trial = 0; trial < 100; ++trial) {
    LanguageStats stats;
    const int n = langs(rng);
    for (int i = 0; i < n; ++i) {
      stats.counts["l" + std::to_string(i)] =
          static_cast<std::size_t>(count(rng));
    }
    double prev_max = 0.0;
    for (const double alpha : {0.1, 0.3, 0.5, 0.8, 1.0}) {
      const auto probs = balanced_sample_probs(stats, alpha);
      double sum = 0.0, max_p = 0.0;
      for (const auto& [lang, p] : probs) {
        sum += p;
        max_p = std::max(max_p, p);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      CHECK(max_p + 1e-12 >= prev_max);
      prev_max = max_p;
    }
  }
}

TEST_CASE("select_balanced keeps top pairs by margin per language") {
  std::vector<ParallelPair> pairs;
  for (int i = 0; i < 4; ++i) {
    ParallelPair p;
    p.l_lang = "de";
    p.margin = 1.0 + i;
    p.answer = "a" + std::to_string(i);
    pairs.push_back(p);
  }
  ParallelPair fi;
  fi.l_lang = "fi";
  fi.margin = 9.0;
  pairs.push_back(fi);
  const auto picked = select_balanced(pairs, 1.0, 3);
  REQUIRE(picked.size() == 3);
  // de quota 2 under proportional sampling (4/5 -> 2.4 -> 2), fi gets 1
  CHECK(picked[0].margin == doctest::Approx(4.0));
  CHECK(picked[1].margin == doctest::Approx(3.0));
  CHECK(picked[2].l_lang == "fi");
}
