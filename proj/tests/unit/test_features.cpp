#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ff/features.hpp"
#include "ff/rng.hpp"
#include "oracles.hpp"

using namespace ff;

namespace {

std::vector<std::string> tags_of(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::map<std::string, int> as_strings(const GramCounts& counts, const TagCodec& codec) {
  std::map<std::string, int> out;
  for (const auto& [k, c] : counts) out[codec.gram_string(k)] = static_cast<int>(c);
  return out;
}

constexpr const char* kExample = "`` NNP VBD NNP TO VB PRP IN DT NN IN NN NN . '' NNP VBD RB .";

}  // namespace

TEST_CASE("extract_ngrams counting identity") {
  TagCodec codec;
  const auto g = extract_ngrams(tags_of("NNP VBD RB ."), codec);
  CHECK(total_grams(g) == 9);
  const auto one = extract_ngrams(tags_of("NN"), codec);
  CHECK(total_grams(one) == 1);
  CHECK(as_strings(one, codec) == std::map<std::string, int>{{"NN", 1}});
  CHECK_THROWS_AS(extract_ngrams(tags_of("NN"), codec, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(extract_ngrams(tags_of("NN"), codec, 1, kMaxGramOrder + 1), std::invalid_argument);
}

TEST_CASE("extract_ngrams matches a sliding window on the anonymized example") {
  TagCodec codec;
  const auto tags = tags_of(kExample);
  for (int lo = 1; lo <= 3; ++lo) {
    for (int hi = lo; hi <= 3; ++hi) {
      CHECK(as_strings(extract_ngrams(tags, codec, lo, hi), codec) == oracle::ngrams_by_window(tags, lo, hi));
    }
  }
  const auto g = extract_ngrams(tags, codec);
  const auto L = tags.size();
  CHECK(total_grams(g) == L + (L - 1) + (L - 2));
  CHECK(as_strings(g, codec).at("NNP VBD") == 2);
}

TEST_CASE("build_vocabulary: cap and tie rule") {
  TagCodec codec;
  std::vector<GramCounts> corpus = {extract_ngrams(tags_of("A A A B B C"), codec, 1, 1)};
  auto v = build_vocabulary(corpus, codec, 2);
  CHECK(v.grams == std::vector<std::string>{"A", "B"});

  // B and C tie at the cutoff: the lexicographically smaller gram wins.
  corpus = {extract_ngrams(tags_of("C C B B A A A"), codec, 1, 1)};
  v = build_vocabulary(corpus, codec, 2);
  CHECK(v.grams == std::vector<std::string>{"A", "B"});
  CHECK(v.corpus_freq == std::vector<std::uint64_t>{3, 2});
}

TEST_CASE("build_vocabulary agrees with a string sort oracle") {
  Rng rng(4);
  const char* pool[] = {"NN", "NNS", "VB", "VBD", ".", "''", ",", "DT", "IN", "PRP$"};
  for (int trial = 0; trial < 30; ++trial) {
    TagCodec codec;
    std::vector<GramCounts> corpus;
    std::map<std::string, int> freq;
    for (int d = 0; d < 20; ++d) {
      std::vector<std::string> tags;
      const auto len = 1 + rng.uniform_index(30);
      for (std::size_t i = 0; i < len; ++i) tags.emplace_back(pool[rng.uniform_index(10)]);
      corpus.push_back(extract_ngrams(tags, codec));
      for (const auto& [g, c] : oracle::ngrams_by_window(tags, 1, 3)) freq[g] += c;
    }
    const std::size_t cap = 1 + rng.uniform_index(80);
    std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    ranked.resize(std::min(cap, ranked.size()));
    std::vector<std::string> expected;
    for (const auto& [g, _] : ranked) expected.push_back(g);
    std::sort(expected.begin(), expected.end());
    CHECK(build_vocabulary(corpus, codec, cap).grams == expected);
  }
}

TEST_CASE("fit_idf formula") {
  TagCodec codec;
  std::vector<GramCounts> corpus = {extract_ngrams(tags_of("X Y"), codec, 1, 1),
                                    extract_ngrams(tags_of("X"), codec, 1, 1)};
  const auto vocab = build_vocabulary(corpus, codec);
  const auto idf = fit_idf(corpus, vocab);
  REQUIRE(vocab.grams == std::vector<std::string>{"X", "Y"});
  CHECK(idf[0] == 1.0);
  CHECK(idf[1] == doctest::Approx(1.405465).epsilon(1e-6));
  CHECK(std::abs(idf[1] - (std::log(1.5) + 1.0)) < 1e-15);

  const std::vector<GramCounts> other = {extract_ngrams(tags_of("X"), codec, 1, 1)};
  CHECK_THROWS_AS(fit_idf(other, vocab), std::invalid_argument);
}

TEST_CASE("vectorize: hand-worked three-document tf-idf matrix") {
  TagCodec codec;
  const std::vector<GramCounts> corpus = {extract_ngrams(tags_of("DT NN IN DT NN"), codec, 1, 1),
                                          extract_ngrams(tags_of("DT NN VBD"), codec, 1, 1),
                                          extract_ngrams(tags_of("PRP VBD ."), codec, 1, 1)};
  const auto vocab = build_vocabulary(corpus, codec);
  REQUIRE(vocab.grams == std::vector<std::string>{".", "DT", "IN", "NN", "PRP", "VBD"});
  const auto idf = fit_idf(corpus, vocab);
  // df=1 -> ln(4/2)+1, df=2 -> ln(4/3)+1
  const std::vector<double> expected_idf = {1.6931471805599454, 1.2876820724517808, 1.6931471805599454,
                                            1.2876820724517808, 1.6931471805599454, 1.2876820724517808};
  for (std::size_t i = 0; i < idf.size(); ++i) CHECK(std::abs(idf[i] - expected_idf[i]) < 1e-12);

  const std::vector<std::vector<double>> expected = {
      {0.0, 0.6412065144106713, 0.4215547553457735, 0.6412065144106713, 0.0, 0.0},
      {0.0, 0.5773502691896257, 0.0, 0.5773502691896257, 0.0, 0.5773502691896257},
      {0.6227660078332259, 0.0, 0.0, 0.0, 0.6227660078332259, 0.4736296010332684}};
  const auto X = vectorize_all(corpus, vocab, Weighting::tfidf, idf);
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> dense(6, 0.0);
    const auto cols = X.row_cols(r);
    const auto vals = X.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) dense[cols[k]] = vals[k];
    for (std::size_t c = 0; c < 6; ++c) CHECK(std::abs(dense[c] - expected[r][c]) < 1e-12);
  }

  const auto counts = vectorize_all(corpus, vocab, Weighting::count);
  CHECK(counts.row(0).values == std::vector<double>{2, 1, 2});
}

TEST_CASE("vectorize: single gram, out-of-vocabulary, missing idf") {
  TagCodec codec;
  const std::vector<GramCounts> corpus = {extract_ngrams(tags_of("NN NN"), codec, 1, 1)};
  const auto vocab = build_vocabulary(corpus, codec);
  const auto idf = fit_idf(corpus, vocab);
  const auto row = vectorize(corpus[0], vocab, Weighting::tfidf, idf);
  CHECK(row.values == std::vector<double>{1.0});
  const auto oov = vectorize(extract_ngrams(tags_of("VB"), codec, 1, 1), vocab, Weighting::tfidf, idf);
  CHECK(oov.nnz() == 0);
  CHECK_THROWS_AS(vectorize(corpus[0], vocab, Weighting::tfidf), std::invalid_argument);
}

TEST_CASE("tf-idf rows are unit norm and featurization is deterministic") {
  Rng rng(9);
  const char* pool[] = {"NN", "VB", "DT", "IN", "JJ", "RB", "."};
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 100; ++d) {
    std::vector<std::string> tags;
    const auto len = 1 + rng.uniform_index(60);
    for (std::size_t i = 0; i < len; ++i) tags.emplace_back(pool[rng.uniform_index(7)]);
    docs.push_back(tags);
  }
  auto build = [&](int n_docs) {
    TagCodec codec;
    std::vector<GramCounts> corpus;
    for (int d = 0; d < n_docs; ++d) corpus.push_back(extract_ngrams(docs[static_cast<std::size_t>(d)], codec));
    const auto vocab = build_vocabulary(corpus, codec, 50);
    const auto idf = fit_idf(corpus, vocab);
    return std::make_pair(vocab.grams, vectorize_all(corpus, vocab, Weighting::tfidf, idf));
  };
  const auto [grams, X] = build(100);
  for (std::size_t r = 0; r < X.n_rows; ++r) {
    const auto vals = X.row_values(r);
    if (vals.empty()) continue;
    double sq = 0;
    for (const double v : vals) sq += v * v;
    CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-12);
  }
  const auto [grams2, X2] = build(100);
  CHECK(grams == grams2);
  CHECK(X.values == X2.values);
  CHECK(X.cols == X2.cols);
}

TEST_CASE("featurization sees tags only: different words, same tags, same rows") {
  // Two paragraphs with unrelated wording but identical tag sequences.
  const auto tags = tags_of("PRP VBD DT NN .");
  TagCodec codec;
  const std::vector<GramCounts> corpus = {extract_ngrams(tags, codec), extract_ngrams(tags, codec)};
  const auto vocab = build_vocabulary(corpus, codec);
  const auto idf = fit_idf(corpus, vocab);
  CHECK(vectorize(corpus[0], vocab, Weighting::tfidf, idf).values ==
        vectorize(corpus[1], vocab, Weighting::tfidf, idf).values);
}

TEST_CASE("vocabulary CSV dump quotes grams") {
  TagCodec codec;
  const std::vector<GramCounts> corpus = {extract_ngrams(tags_of(", ''"), codec, 1, 2)};
  const auto vocab = build_vocabulary(corpus, codec);
  const auto idf = fit_idf(corpus, vocab);
  std::ostringstream out;
  write_vocabulary_csv(out, vocab, idf);
  CHECK(out.str() == "gram,index,corpus_freq,idf\n\"''\",0,1,1\n\",\",1,1,1\n\", ''\",2,1,1\n");
}
