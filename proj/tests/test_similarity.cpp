#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "upcs/errors.hpp"
#include "upcs/similarity.hpp"

using namespace upcs;

namespace {

EmbeddingVector vec(std::vector<double> values) { return EmbeddingVector{std::move(values)}; }

std::vector<std::vector<std::string>> random_corpus(std::mt19937_64& rng,
                                                    std::size_t max_docs = 10,
                                                    std::size_t max_tokens = 12) {
  static const std::vector<std::string> vocab = {"a", "b", "c", "d", "e",
                                                 "f", "g", "h"};
  const std::size_t n_docs = 1 + rng() % max_docs;
  std::vector<std::vector<std::string>> corpus(n_docs);
  for (auto& doc : corpus) {
    const std::size_t len = 1 + rng() % max_tokens;
    for (std::size_t t = 0; t < len; ++t) doc.push_back(vocab[rng() % vocab.size()]);
  }
  return corpus;
}

}  // namespace

TEST_CASE("tokenize basics") {
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("Morning runs!") == std::vector<std::string>{"morning", "runs"});
  CHECK(tokenize("Age: 30, likes C++11") ==
        std::vector<std::string>{"age", "30", "likes", "c", "11"});
  CHECK(tokenize("  \t\n ") == std::vector<std::string>{});
  // determinism
  const std::string text = "Lives in a small coastal town.";
  CHECK(tokenize(text) == tokenize(text));
}

TEST_CASE("tokenize keeps multibyte words whole") {
  const auto tokens = tokenize("caf\xc3\xa9 Z\xc3\xbcrich");
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0] == "caf\xc3\xa9");
  CHECK(tokens[1] == "z\xc3\xbcrich");
}

TEST_CASE("bm25 is zero for disjoint queries and positive for matches") {
  const Bm25Index index({{"a", "b"}, {"b", "c"}});
  CHECK(bm25_score(index, {"z", "q"}, 0) == 0.0);

  const Bm25Index single(std::vector<std::vector<std::string>>{{"only", "doc"}});
  CHECK(bm25_score(single, {"only", "doc"}, 0) > 0.0);
}

TEST_CASE("bm25 two-document worked example") {
  // Corpus {a b}, {b c}, query {a}, defaults k1=1.2 b=0.75.
  // df(a)=1, idf = ln(1 + (2-1+0.5)/1.5) = ln 2; tf=1, dl=avgdl=2 so the
  // length factor cancels and the term contributes exactly idf.
  const Bm25Index index({{"a", "b"}, {"b", "c"}});
  CHECK(bm25_score(index, {"a"}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bm25_score(index, {"a"}, 1) == 0.0);
}

TEST_CASE("bm25 rejects out-of-range document indexes") {
  const Bm25Index index({{"a"}});
  CHECK_THROWS_AS(bm25_score(index, {"a"}, 1), Error);
}

TEST_CASE("bm25_normalized is exactly 1 for the document itself and 0 when disjoint") {
  const Bm25Index index({{"a", "b", "a"}, {"c", "d"}});
  CHECK(bm25_normalized(index, {"a", "b", "a"}, 0) == 1.0);
  CHECK(bm25_normalized(index, {"x", "y"}, 0) == 0.0);
}

TEST_CASE("bm25_normalized subset query matches the ratio oracle") {
  const std::vector<std::vector<std::string>> corpus = {{"a", "b", "c", "d"},
                                                        {"b", "c"},
                                                        {"d", "e", "f"}};
  const Bm25Index index(corpus);
  const std::vector<std::string> query = {"a", "c"};
  const double expected = oracle::bm25_normalized(corpus, query, 0);
  const double actual = bm25_normalized(index, query, 0);
  CHECK(actual == doctest::Approx(expected).epsilon(1e-12));
  CHECK(actual > 0.0);
  CHECK(actual < 1.0);
}

TEST_CASE("bm25 matches the closed-form oracle on random corpora") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 40; ++round) {
    const auto corpus = random_corpus(rng);
    const Bm25Index index(corpus);
    for (std::size_t doc = 0; doc < corpus.size(); ++doc) {
      std::vector<std::string> query;
      const std::size_t len = 1 + rng() % 6;
      static const std::vector<std::string> vocab = {"a", "b", "c", "d",
                                                     "e", "f", "g", "h", "zz"};
      for (std::size_t t = 0; t < len; ++t) query.push_back(vocab[rng() % vocab.size()]);
      const double expected = oracle::bm25(corpus, query, doc);
      const double actual = bm25_score(index, query, doc);
      CHECK(oracle::close_rel(actual, expected));
      const double normalized = bm25_normalized(index, query, doc);
      CHECK(normalized >= 0.0);
      CHECK(normalized <= 1.0);
    }
  }
}

TEST_CASE("cosine worked examples") {
  CHECK(cosine(vec({1, 0}), vec({1, 0})) == doctest::Approx(1.0));
  CHECK(cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  // 32 / (sqrt(14) * sqrt(77))
  CHECK(cosine(vec({1, 2, 3}), vec({4, 5, 6})) ==
        doctest::Approx(0.9746318461970762).epsilon(1e-12));
}

TEST_CASE("cosine error paths") {
  CHECK_THROWS_AS(cosine(vec({1, 2}), vec({1, 2, 3})), Error);
  CHECK_THROWS_AS(cosine(vec({0, 0}), vec({1, 2})), DegenerateInputError);
}

TEST_CASE("pearson worked examples") {
  CHECK(pearson(vec({1, 2, 3}), vec({1, 2, 3})) == doctest::Approx(1.0));
  CHECK(pearson(vec({1, 2, 3}), vec({3, 2, 1})) == doctest::Approx(-1.0));
  // sqrt(3)/2
  CHECK(pearson(vec({1, 2, 3}), vec({1, 2, 2})) ==
        doctest::Approx(0.8660254037844387).epsilon(1e-12));
}

TEST_CASE("pearson conventions and errors") {
  CHECK(pearson(vec({2, 2, 2}), vec({1, 2, 3})) == 0.0);  // zero variance
  CHECK_THROWS_AS(pearson(vec({1}), vec({2})), Error);
  CHECK_THROWS_AS(pearson(vec({1, 2}), vec({1, 2, 3})), Error);
}

TEST_CASE("combined_similarity composes its parts") {
  const auto u = vec({1, 2, 3});
  CHECK(combined_similarity(u, u, {0.5, 0.5}) == doctest::Approx(1.0));
  const auto v = vec({4, 5, 6});
  CHECK(combined_similarity(u, v, {1.0, 0.0}) == doctest::Approx(cosine(u, v)));
  const auto w = vec({1, 2, 2});
  const double expected = 0.5 * oracle::cosine(u.values, w.values) +
                          0.5 * oracle::pearson(u.values, w.values);
  CHECK(combined_similarity(u, w, {0.5, 0.5}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(combined_similarity(u, v, {0.0, 0.0}), ValidationError);
}

TEST_CASE("similarity properties on random vectors") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int round = 0; round < 50; ++round) {
    const std::size_t dim = 2 + rng() % 30;
    std::vector<double> a(dim), b(dim);
    for (auto& x : a) x = dist(rng);
    for (auto& x : b) x = dist(rng);
    const auto u = vec(a), v = vec(b);

    // symmetry
    CHECK(cosine(u, v) == doctest::Approx(cosine(v, u)).epsilon(1e-12));
    CHECK(pearson(u, v) == doctest::Approx(pearson(v, u)).epsilon(1e-12));

    // cosine scale invariance for c > 0
    std::vector<double> scaled = a;
    for (auto& x : scaled) x *= 3.5;
    CHECK(cosine(vec(scaled), v) == doctest::Approx(cosine(u, v)).epsilon(1e-9));

    // pearson affine invariance for a > 0
    std::vector<double> affine = a;
    for (auto& x : affine) x = 2.0 * x + 0.7;
    CHECK(pearson(vec(affine), v) == doctest::Approx(pearson(u, v)).epsilon(1e-9));
  }
}
