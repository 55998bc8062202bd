#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "ff/errors.hpp"
#include "ff/evaluation.hpp"
#include "ff/rng.hpp"
#include "oracles.hpp"

using namespace ff;

namespace {

std::vector<BookEntry> books_for(const std::map<std::string, int>& per_lang) {
  std::vector<BookEntry> books;
  for (const auto& [lang, n] : per_lang) {
    for (int i = 0; i < n; ++i) {
      BookEntry b;
      b.book_id = fmt::format("{}_{}", lang, i);
      b.work_id = b.book_id;
      b.source_lang = lang;
      b.class_label = lang == kOriginalLang ? ClassLabel::original : ClassLabel::translated;
      b.n_paragraphs = 3;
      books.push_back(b);
    }
  }
  return books;
}

}  // namespace

TEST_CASE("strata pool rare languages") {
  const auto books = books_for({{std::string(kOriginalLang), 4}, {"fr", 5}, {"ja", 2}, {"sw", 1}});
  const auto strata = make_strata(books);
  REQUIRE(strata.size() == 3);
  CHECK(strata[0].label == "en-original");
  CHECK(strata[1].label == "fr");
  CHECK(strata[2].label == "rare-languages");
  CHECK(strata[2].book_ids.size() == 3);
}

TEST_CASE("folds keep books whole and strata balanced") {
  const auto books = books_for({{std::string(kOriginalLang), 23}, {"fr", 17}, {"de", 9}, {"ru", 2}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = make_folds(books, 10, seed);
    CHECK(f.fold_of.size() == books.size());
    for (const auto& s : make_strata(books)) {
      std::vector<int> counts(10, 0);
      for (const auto& id : s.book_ids) ++counts[static_cast<std::size_t>(f.fold(id))];
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      CHECK(*hi - *lo <= 1);
    }
    std::vector<int> total(10, 0);
    for (const auto& [_, k] : f.fold_of) ++total[static_cast<std::size_t>(k)];
    const auto [lo, hi] = std::minmax_element(total.begin(), total.end());
    CHECK(*hi - *lo <= 1);
  }
  CHECK(make_folds(books, 10, 3).fold_of == make_folds(books, 10, 3).fold_of);
  CHECK(make_folds(books, 10, 3).fold_of != make_folds(books, 10, 4).fold_of);
  CHECK_THROWS_AS(make_folds(books, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_folds(books_for({{"fr", 3}}), 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_folds(books, 10, 0).fold("nope"), std::out_of_range);
}

TEST_CASE("AUC matches pair counting, metrics on a small example") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto n = 4 + rng.uniform_index(80);
    std::vector<int> labels(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % 2);
      scores[i] = static_cast<double>(rng.uniform_index(10)) / 10.0;
    }
    CHECK(std::abs(mann_whitney_auc(labels, scores) - oracle::auc_by_pairs(labels, scores)) < 1e-12);
  }
  const std::vector<int> y = {1, 1, 0, 0};
  const std::vector<double> p = {0.9, 0.4, 0.6, 0.1};
  const auto m = classifier_metrics(y, p);
  CHECK(m.accuracy == 0.5);
  CHECK(m.macro_f1 == 0.5);
  CHECK(m.auc == 0.75);
  CHECK(m.n == 4);
  // Exactly 0.5 is predicted original.
  CHECK(classifier_metrics(std::vector<int>{1, 0}, std::vector<double>{0.5, 0.2}).accuracy == 0.5);
  CHECK_THROWS_AS(classifier_metrics(std::vector<int>{1, 1}, std::vector<double>{0.5, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(classifier_metrics(std::vector<int>{1, 2}, std::vector<double>{0.5, 0.2}), std::invalid_argument);
}

namespace {

std::vector<WeightedRecord> toy_training(const std::vector<BookEntry>& books, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<WeightedRecord> out;
  const char* orig_tags[] = {"PRP", "VBD", "RB", "."};
  const char* tran_tags[] = {"DT", "NN", "IN", "NN"};
  for (const auto& b : books) {
    for (int i = 0; i < 4; ++i) {
      WeightedRecord w;
      auto& r = w.record;
      r.record_id = fmt::format("{}_p{}", b.book_id, i);
      r.book_id = b.book_id;
      r.work_id = b.work_id;
      r.source_lang = b.source_lang;
      r.class_label = b.class_label;
      r.source_type = r.is_original() ? SourceType::original : SourceType::human;
      const auto& pool = r.is_original() ? orig_tags : tran_tags;
      for (int t = 0; t < 12; ++t) r.pos_tags.emplace_back(rng.uniform01() < 0.7 ? pool[rng.uniform_index(4)] : "JJ");
      r.word_count = 12;
      out.push_back(w);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cross_val_oof scores each record once from a model that never saw its book") {
  const auto books = books_for({{std::string(kOriginalLang), 10}, {"fr", 6}, {"de", 4}});
  const auto training = toy_training(books, 1);
  const auto folds = make_folds(books, 5, 9);
  FeatureConfig fc;
  TrainConfig tc;
  const auto cv = cross_val_oof(training, folds, fc, tc);
  REQUIRE(cv.scores.size() == training.size());
  REQUIRE(cv.folds.size() == 5);
  for (std::size_t i = 0; i < training.size(); ++i) {
    CHECK(cv.scores[i].record_id == training[i].record.record_id);
    CHECK(cv.scores[i].fold == folds.fold(training[i].record.book_id));
    CHECK(cv.scores[i].in_training_sample);
  }
  std::size_t n_train_sum = 0;
  for (const auto& f : cv.folds) n_train_sum += f.n_train;
  CHECK(n_train_sum == training.size() * 4);

  std::vector<int> labels;
  std::vector<double> p;
  for (std::size_t i = 0; i < training.size(); ++i) {
    labels.push_back(training[i].record.is_original() ? 0 : 1);
    p.push_back(cv.scores[i].p_translated);
  }
  CHECK(classifier_metrics(labels, p).auc > 0.9);

  // Same inputs, same scores.
  const auto again = cross_val_oof(training, folds, fc, tc);
  for (std::size_t i = 0; i < training.size(); ++i) CHECK(again.scores[i].p_translated == cv.scores[i].p_translated);
}

TEST_CASE("a held-out fold's scores do not depend on its own content") {
  const auto books = books_for({{std::string(kOriginalLang), 10}, {"fr", 10}});
  auto training = toy_training(books, 4);
  const auto folds = make_folds(books, 5, 1);
  const auto before = cross_val_oof(training, folds, FeatureConfig{}, TrainConfig{});
  // Perturbing fold-0 records must leave fold-0 models untouched.
  for (auto& w : training)
    if (folds.fold(w.record.book_id) == 0) w.record.pos_tags.assign(12, "UH");
  const auto after = cross_val_oof(training, folds, FeatureConfig{}, TrainConfig{});
  CHECK(before.folds[0].model.coefficients == after.folds[0].model.coefficients);
  CHECK(before.folds[0].vocab_hash == after.folds[0].vocab_hash);
  CHECK(before.folds[1].model.coefficients != after.folds[1].model.coefficients);
}

TEST_CASE("extra records are scored but not trained on") {
  const auto books = books_for({{std::string(kOriginalLang), 6}, {"fr", 6}});
  const auto training = toy_training(books, 2);
  const auto folds = make_folds(books, 3, 5);
  std::vector<ParagraphRecord> extra;
  auto r = training.back().record;
  r.record_id = "extra1";
  extra.push_back(r);
  const auto cv = cross_val_oof(training, folds, FeatureConfig{}, TrainConfig{}, extra);
  REQUIRE(cv.scores.size() == training.size() + 1);
  CHECK(cv.scores.back().record_id == "extra1");
  CHECK_FALSE(cv.scores.back().in_training_sample);
  CHECK(cv.scores.back().fold == folds.fold(r.book_id));
  CHECK(cv.scores.back().p_translated == cv.scores[training.size() - 1].p_translated);
}

TEST_CASE("fold failures surface as StageError") {
  const auto books = books_for({{std::string(kOriginalLang), 3}, {"fr", 3}});
  const auto training = toy_training(books, 3);
  // Every original book in fold 0 leaves that fold's training split single-class.
  FoldAssignment folds;
  folds.k = 2;
  for (const auto& b : books) folds.fold_of[b.book_id] = b.class_label == ClassLabel::original ? 0 : 1;
  CHECK_THROWS_AS(cross_val_oof(training, folds, FeatureConfig{}, TrainConfig{}), StageError);
}

TEST_CASE("class weight basis: unsampled counts include records left out by downsampling") {
  const auto books = books_for({{std::string(kOriginalLang), 6}, {"fr", 6}});
  const auto training = toy_training(books, 7);
  const auto folds = make_folds(books, 3, 1);
  TrainConfig sampled, unsampled;
  unsampled.class_weight_basis = ClassWeightBasis::unsampled;

  // Without extras both bases see the same counts.
  const auto a = cross_val_oof(training, folds, FeatureConfig{}, sampled);
  const auto b = cross_val_oof(training, folds, FeatureConfig{}, unsampled);
  for (std::size_t i = 0; i < a.scores.size(); ++i)
    CHECK(std::abs(a.scores[i].p_translated - b.scores[i].p_translated) < 1e-9);

  // Extra translated records shift the unsampled weights only.
  std::vector<ParagraphRecord> extra;
  for (const auto& w : training) {
    if (w.record.is_original()) continue;
    auto r = w.record;
    r.record_id += "_x";
    extra.push_back(r);
  }
  const auto c = cross_val_oof(training, folds, FeatureConfig{}, sampled, extra);
  const auto d = cross_val_oof(training, folds, FeatureConfig{}, unsampled, extra);
  CHECK(c.folds[0].model.coefficients == a.folds[0].model.coefficients);
  CHECK(d.folds[0].model.coefficients != c.folds[0].model.coefficients);
  CHECK(d.folds[0].model.config.class_weight == ClassWeight::balanced);
}
