// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "clqa/index.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace clqa;
using clqa::test::TempDir;

namespace {

Corpus make_corpus(const std::vector<std::pair<std::string, std::size_t>>& spec) {
  Corpus corpus;
  for (const auto& [id, tokens] : spec) {
    Passage p;
    p.id = id;
    p.lang = "en";
    std::string text;
    for (std::size_t t = 0; t < tokens; ++t) {
      if (!text.empty()) text += ' ';
      text += "w" + std::to_string(t);
    }
    p.text = text;
    p.token_count = tokens;
    corpus.add(std::move(p));
  }
  return corpus;
}

TensorArray dense_array(const std::string& id, std::vector<float> values) {
  return {id, {values.size()}, "dense", std::move(values)};
}

struct RandomFixture {
  Corpus corpus;
  TensorBundle bundle;
};

RandomFixture random_dense(std::mt19937& rng, std::size_t n, Eigen::Index dim) {
  RandomFixture f;
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  std::vector<std::pair<std::string, std::size_t>> spec;
  for (std::size_t i = 0; i < n; ++i) {
    spec.emplace_back("p" + std::to_string(i), 3);
  }
  f.corpus = make_corpus(spec);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (float& x : v) x = value(rng);
    f.bundle.add(dense_array("p" + std::to_string(i), std::move(v)));
  }
  return f;
}

RandomFixture random_mv(std::mt19937& rng, std::size_t n, Eigen::Index heads,
                        Eigen::Index dim) {
  RandomFixture f;
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  std::uniform_int_distribution<int> tokens(1, 6);
  std::vector<std::pair<std::string, std::size_t>> spec;
  for (std::size_t i = 0; i < n; ++i) {
    spec.emplace_back("p" + std::to_string(i), 3);
  }
  f.corpus = make_corpus(spec);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = static_cast<std::size_t>(tokens(rng));
    std::vector<float> v(static_cast<std::size_t>(heads) * t *
                         static_cast<std::size_t>(dim));
    for (float& x : v) x = value(rng);
    f.bundle.add({"p" + std::to_string(i),
                  {static_cast<std::size_t>(heads), t,
                   static_cast<std::size_t>(dim)},
                  "multi_vector",
                  std::move(v)});
  }
  return f;
}

MultiVectorEmbeddingF random_mv_query(std::mt19937& rng, Eigen::Index heads,
                                      Eigen::Index tokens, Eigen::Index dim) {
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  std::vector<RowMatrixF> hs;
  for (Eigen::Index h = 0; h < heads; ++h) {
    RowMatrixF m(tokens, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = value(rng);
    hs.push_back(std::move(m));
  }
  return make_embedding<float>(std::move(hs));
}

}  // namespace

TEST_CASE("build_index validates its inputs") {
  Corpus corpus = make_corpus({{"p1", 2}, {"p2", 2}});
  TensorBundle bundle;
  bundle.add(dense_array("p1", {1.f, 0.f}));
  bundle.add(dense_array("p2", {0.f, 1.f}));
  const RetrievalIndex index =
      RetrievalIndex::build(corpus, bundle, IndexMode::kDense);
  CHECK(index.size() == 2);

  TensorBundle incomplete;
  incomplete.add(dense_array("p1", {1.f, 0.f}));
  CHECK_THROWS_WITH_AS(
      RetrievalIndex::build(corpus, incomplete, IndexMode::kDense),
      doctest::Contains("p2"), std::invalid_argument);

  TensorBundle mv;
  mv.add({"p1", {2, 1, 2}, "multi_vector", {1.f, 0.f, 0.f, 1.f}});
  mv.add({"p2", {2, 1, 2}, "multi_vector", {1.f, 0.f, 0.f, 1.f}});
  CHECK_THROWS_AS(
      RetrievalIndex::build(corpus, mv, IndexMode::kMultiVector, 2),
      std::invalid_argument);
}

TEST_CASE("search_topk dense worked examples") {
  Corpus corpus = make_corpus({{"p1", 2}, {"p2", 2}});
  TensorBundle bundle;
  bundle.add(dense_array("p1", {1.f, 0.f}));
  bundle.add(dense_array("p2", {0.f, 1.f}));
  const RetrievalIndex index =
      RetrievalIndex::build(corpus, bundle, IndexMode::kDense);

  Eigen::VectorXf q(2);
  q << 1.f, 0.f;
  const ScoreList top = index.search_topk(q, 1);
  REQUIRE(top.size() == 1);
  CHECK(top.ids[0] == "p1");
  CHECK(top.scores[0] == doctest::Approx(1.0).epsilon(1e-9));

  const ScoreList all = index.search_topk(q, 10);
  CHECK(all.size() == 2);

  Eigen::VectorXf wrong(3);
  wrong << 1.f, 0.f, 0.f;
  CHECK_THROWS_AS(index.search_topk(wrong, 1), std::invalid_argument);
  CHECK_THROWS_AS(index.search_topk(q, 0), std::invalid_argument);
}

TEST_CASE("equal scores break ties by ascending id") {
  Corpus corpus;
  Passage a, b;
  b.id = "p2";
  b.text = "x";
  b.token_count = 1;
  a.id = "p1";
  a.text = "x";
  a.token_count = 1;
  corpus.add(b);  // file order p2 first
  corpus.add(a);
  TensorBundle bundle;
  bundle.add(dense_array("p2", {1.f, 0.f}));
  bundle.add(dense_array("p1", {1.f, 0.f}));
  const RetrievalIndex index =
      RetrievalIndex::build(corpus, bundle, IndexMode::kDense);
  Eigen::VectorXf q(2);
  q << 1.f, 0.f;
  const ScoreList top = index.search_topk(q, 2);
  CHECK(top.ids == std::vector<std::string>{"p1", "p2"});
}

TEST_CASE("search_topk equals brute_force_topk on random corpora") {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> sizes(1, 120), ks(1, 12), dims(2, 16);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = static_cast<std::size_t>(sizes(rng));
    const Eigen::Index dim = dims(rng);
    const std::size_t k = static_cast<std::size_t>(ks(rng));
    const RandomFixture f = random_dense(rng, n, dim);
    const RetrievalIndex index =
        RetrievalIndex::build(f.corpus, f.bundle, IndexMode::kDense);
    Eigen::VectorXf q(dim);
    std::uniform_real_distribution<float> value(-1.0f, 1.0f);
    for (Eigen::Index i = 0; i < dim; ++i) q[i] = value(rng);
    const ScoreList fast = index.search_topk(q, k);
    const ScoreList oracle =
        brute_force_topk(f.corpus, f.bundle, IndexMode::kDense, 0, q, k);
    REQUIRE(fast.ids == oracle.ids);
    CHECK((fast.scores - oracle.scores).cwiseAbs().maxCoeff() <= 1e-6);
  }
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = static_cast<std::size_t>(sizes(rng));
    const Eigen::Index dim = dims(rng);
    const std::size_t k = static_cast<std::size_t>(ks(rng));
    const RandomFixture f = random_mv(rng, n, 2, dim);
    const RetrievalIndex index =
        RetrievalIndex::build(f.corpus, f.bundle, IndexMode::kMultiVector, 1);
    const MultiVectorEmbeddingF q = random_mv_query(rng, 2, 4, dim);
    const ScoreList fast = index.search_topk(q, k);
    const ScoreList oracle =
        brute_force_topk(f.corpus, f.bundle, IndexMode::kMultiVector, 1, q, k);
    REQUIRE(fast.ids == oracle.ids);
    CHECK((fast.scores - oracle.scores).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("full-corpus search returns a consistent total order") {
  std::mt19937 rng(97);
  const RandomFixture f = random_dense(rng, 60, 8);
  const RetrievalIndex index =
      RetrievalIndex::build(f.corpus, f.bundle, IndexMode::kDense);
  Eigen::VectorXf q(8);
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = value(rng);
  const ScoreList all = index.search_topk(q, f.corpus.size());
  REQUIRE(all.size() == f.corpus.size());
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    const double a = all.scores[static_cast<Eigen::Index>(i)];
    const double b = all.scores[static_cast<Eigen::Index>(i + 1)];
    CHECK(a >= b);
    if (a == b) CHECK(all.ids[i] < all.ids[i + 1]);
  }
}

TEST_CASE("single-head query works against a multi-head index") {
  std::mt19937 rng(29);
  const RandomFixture f = random_mv(rng, 10, 3, 4);
  const RetrievalIndex index =
      RetrievalIndex::build(f.corpus, f.bundle, IndexMode::kMultiVector, 2);
  MultiVectorEmbeddingF full = random_mv_query(rng, 3, 5, 4);
  MultiVectorEmbeddingF sliced;
  sliced.heads.push_back(full.heads[2]);
  sliced.pad_mask = full.pad_mask;
  const ScoreList a = index.search_topk(full, 5);
  const ScoreList b = index.search_topk(sliced, 5);
  CHECK(a.ids == b.ids);
}

TEST_CASE("token_budget_slice greedy fill") {
  Corpus corpus = make_corpus({{"p1", 2}, {"p2", 3}});
  ScoreList ranked{{"p1", "p2"}, Eigen::Vector2d{2.0, 1.0}};
  const TokenSlice slice = token_budget_slice(ranked, corpus, 3);
  REQUIRE(slice.entries.size() == 2);
  CHECK(slice.entries[0].id == "p1");
  CHECK(slice.entries[0].tokens == 2);
  CHECK(slice.entries[1].tokens == 1);
  CHECK(slice.total_tokens == 3);

  const TokenSlice all = token_budget_slice(ranked, corpus, 100);
  CHECK(all.total_tokens == 5);
  const TokenSlice tiny = token_budget_slice(ranked, corpus, 1);
  REQUIRE(tiny.entries.size() == 1);
  CHECK(tiny.entries[0].id == "p1");
  CHECK(tiny.entries[0].tokens == 1);

  ScoreList unknown{{"zz"}, Eigen::VectorXd::Ones(1)};
  CHECK_THROWS_AS(token_budget_slice(unknown, corpus, 3), std::out_of_range);
  CHECK_THROWS_AS(token_budget_slice(ranked, corpus, 0), std::invalid_argument);
}

TEST_CASE("token_budget_slice is monotone in the budget") {
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> sizes(1, 12), tokens(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = sizes(rng);
    std::vector<std::pair<std::string, std::size_t>> spec;
    ScoreList ranked;
    ranked.scores.resize(n);
    for (int i = 0; i < n; ++i) {
      spec.emplace_back("p" + std::to_string(i),
                        static_cast<std::size_t>(tokens(rng)));
      ranked.ids.push_back("p" + std::to_string(i));
      ranked.scores[i] = -i;
    }
    const Corpus corpus = make_corpus(spec);
    TokenSlice prev = token_budget_slice(ranked, corpus, 1);
    for (std::size_t budget = 2; budget < 30; ++budget) {
      const TokenSlice cur = token_budget_slice(ranked, corpus, budget);
      REQUIRE(cur.entries.size() >= prev.entries.size());
      for (std::size_t i = 0; i < prev.entries.size(); ++i) {
        CHECK(cur.entries[i].id == prev.entries[i].id);
        CHECK(cur.entries[i].tokens >= prev.entries[i].tokens);
      }
      prev = cur;
    }
  }
}

TEST_CASE("index persists and reloads byte-identically") {
  std::mt19937 rng(37);
  for (const IndexMode mode : {IndexMode::kDense, IndexMode::kMultiVector}) {
    const RandomFixture f = mode == IndexMode::kDense
                                ? random_dense(rng, 17, 6)
                                : random_mv(rng, 17, 2, 6);
    const RetrievalIndex index = RetrievalIndex::build(f.corpus, f.bundle, mode, 1);
    TempDir dir("index");
    index.save(dir.path());
    const RetrievalIndex loaded = RetrievalIndex::load(dir.path());
    TempDir dir2("index2");
    loaded.save(dir2.path());
    CHECK(test::read_text(dir.file("manifest.json")) ==
          test::read_text(dir2.file("manifest.json")));
    CHECK(test::read_text(dir.file("embeddings.f32")) ==
          test::read_text(dir2.file("embeddings.f32")));

    if (mode == IndexMode::kDense) {
      Eigen::VectorXf q = Eigen::VectorXf::Ones(6);
      const ScoreList a = index.search_topk(q, 5);
      const ScoreList b = loaded.search_topk(q, 5);
      CHECK(a.ids == b.ids);
      CHECK((a.scores - b.scores).cwiseAbs().maxCoeff() == 0.0);
    } else {
      const MultiVectorEmbeddingF q = random_mv_query(rng, 2, 3, 6);
      CHECK(index.search_topk(q, 5).ids == loaded.search_topk(q, 5).ids);
    }
  }
}
