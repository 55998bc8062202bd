#include "ff/evaluation.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "ff/artifacts.hpp"
#include "ff/errors.hpp"
#include "ff/rng.hpp"
#include "ff/stats.hpp"

namespace ff {

int FoldAssignment::fold(std::string_view book_id) const {
  const auto it = fold_of.find(book_id);
  if (it == fold_of.end()) throw std::out_of_range("book '" + std::string(book_id) + "' has no fold");
  return it->second;
}

std::vector<Stratum> make_strata(std::span<const BookEntry> books, std::size_t rare_max_books) {
  std::map<std::string, std::vector<std::string>, std::less<>> by_lang;
  std::vector<std::string> originals;
  for (const auto& b : books) {
    if (b.class_label == ClassLabel::original) {
      originals.push_back(b.book_id);
    } else {
      by_lang[b.source_lang].push_back(b.book_id);
    }
  }

  std::map<std::string, std::vector<std::string>, std::less<>> strata;
  if (!originals.empty()) strata[std::string(kOriginalLang)] = std::move(originals);
  for (auto& [lang, ids] : by_lang) {
    auto& target = ids.size() <= rare_max_books ? strata[std::string(kRareLanguages)] : strata[lang];
    target.insert(target.end(), ids.begin(), ids.end());
  }

  std::vector<Stratum> out;
  for (auto& [label, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    out.push_back({label, std::move(ids)});
  }
  return out;
}

FoldAssignment make_folds(std::span<const BookEntry> books, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_folds: k must be >= 2");
  if (books.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument(fmt::format("make_folds: {} books for {} folds", books.size(), k));
  }
  FoldAssignment folds;
  folds.k = k;
  Rng rng(seed);
  std::size_t cursor = 0;
  for (auto& stratum : make_strata(books)) {
    rng.shuffle(std::span<std::string>(stratum.book_ids));
    for (const auto& id : stratum.book_ids) {
      folds.fold_of[id] = static_cast<int>(cursor % static_cast<std::size_t>(k));
      ++cursor;
    }
  }
  return folds;
}

void FeatureConfig::validate() const {
  if (ngram_min < 1 || ngram_min > ngram_max || ngram_max > kMaxGramOrder) {
    throw std::invalid_argument(fmt::format("invalid n-gram range [{}, {}]", ngram_min, ngram_max));
  }
  if (max_features < 1) throw std::invalid_argument("max_features must be >= 1");
}

namespace {

std::string vocabulary_hash(const Vocabulary& vocab, std::span<const double> idf) {
  std::ostringstream ss;
  write_vocabulary_csv(ss, vocab, idf);
  return sha256_hex(ss.str());
}

}  // namespace

CrossValResult cross_val_oof(std::span<const WeightedRecord> training, const FoldAssignment& folds,
                             const FeatureConfig& features, const TrainConfig& train_config,
                             std::span<const ParagraphRecord> extra_scored) {
  features.validate();

  std::unordered_set<std::string_view> ids;
  for (const auto& w : training) {
    if (!ids.insert(w.record.record_id).second) {
      throw std::invalid_argument("cross_val_oof: duplicate record '" + w.record.record_id + "'");
    }
  }
  for (const auto& r : extra_scored) {
    if (!ids.insert(r.record_id).second) {
      throw std::invalid_argument("cross_val_oof: record '" + r.record_id + "' is both trained on and extra");
    }
  }

  const std::size_t n_train = training.size();
  const std::size_t n_all = n_train + extra_scored.size();
  auto record_at = [&](std::size_t i) -> const ParagraphRecord& {
    return i < n_train ? training[i].record : extra_scored[i - n_train];
  };

  // Tag codes carry no statistics, so one codec over everything leaks nothing.
  TagCodec codec;
  std::vector<GramCounts> grams(n_all);
  std::vector<int> fold_of(n_all);
  for (std::size_t i = 0; i < n_all; ++i) {
    const auto& r = record_at(i);
    grams[i] = extract_ngrams(r.pos_tags, codec, features.ngram_min, features.ngram_max);
    try {
      fold_of[i] = folds.fold(r.book_id);
    } catch (const std::out_of_range& e) {
      throw std::invalid_argument(std::string("cross_val_oof: ") + e.what());
    }
  }

  std::optional<Vocabulary> global_vocab;
  std::vector<double> global_idf;
  if (!features.refit_per_fold) {
    std::vector<GramCounts> train_grams(grams.begin(), grams.begin() + static_cast<std::ptrdiff_t>(n_train));
    global_vocab = build_vocabulary(train_grams, codec, features.max_features);
    if (features.weighting == Weighting::tfidf) global_idf = fit_idf(train_grams, *global_vocab);
  }

  CrossValResult result;
  result.scores.resize(n_all);
  for (int f = 0; f < folds.k; ++f) {
    try {
      std::vector<GramCounts> train_docs;
      std::vector<int> labels;
      std::vector<double> weights;
      for (std::size_t i = 0; i < n_train; ++i) {
        if (fold_of[i] == f) continue;
        train_docs.push_back(grams[i]);
        labels.push_back(training[i].record.is_original() ? kOriginalLabel : kTranslatedLabel);
        weights.push_back(training[i].weight);
      }

      FoldSummary summary;
      summary.fold = f;
      summary.n_train = train_docs.size();
      if (global_vocab) {
        summary.vocabulary = *global_vocab;
        summary.idf = global_idf;
      } else {
        summary.vocabulary = build_vocabulary(train_docs, codec, features.max_features);
        if (features.weighting == Weighting::tfidf) summary.idf = fit_idf(train_docs, summary.vocabulary);
      }
      const auto X = vectorize_all(train_docs, summary.vocabulary, features.weighting, summary.idf);
      if (train_config.class_weight == ClassWeight::balanced &&
          train_config.class_weight_basis == ClassWeightBasis::unsampled) {
        // Extras are the records downsampling left out, so training plus extras
        // outside the fold is the fold's pre-downsampling record set.
        std::vector<int> unsampled_labels;
        for (std::size_t i = 0; i < n_all; ++i) {
          if (fold_of[i] == f) continue;
          unsampled_labels.push_back(record_at(i).is_original() ? kOriginalLabel : kTranslatedLabel);
        }
        const auto cw = balanced_class_weights(unsampled_labels);
        for (std::size_t i = 0; i < weights.size(); ++i) weights[i] *= cw[static_cast<std::size_t>(labels[i])];
        auto plain = train_config;
        plain.class_weight = ClassWeight::none;
        summary.model = train(X, labels, weights, plain);
        summary.model.config = train_config;
      } else {
        summary.model = train(X, labels, weights, train_config);
      }

      for (std::size_t i = 0; i < n_all; ++i) {
        if (fold_of[i] != f) continue;
        const auto row = vectorize(grams[i], summary.vocabulary, features.weighting, summary.idf);
        result.scores[i] = {record_at(i).record_id, f, predict_proba(summary.model, row), i < n_train};
        ++summary.n_scored;
      }
      summary.vocabulary_size = summary.vocabulary.size();
      summary.converged = summary.model.converged;
      summary.iterations = summary.model.iterations;
      summary.final_objective = summary.model.final_objective;
      summary.vocab_hash = vocabulary_hash(summary.vocabulary, summary.idf);
      result.folds.push_back(std::move(summary));
    } catch (const std::exception& e) {
      throw StageError("train-cv", fmt::format("fold {}: {}", f, e.what()));
    }
  }
  return result;
}

double mann_whitney_auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("auc: labels and scores differ in length");
  const auto ranks = stats::rankdata(scores);
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kTranslatedLabel) {
      rank_sum += ranks[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

ClassifierMetrics classifier_metrics(std::span<const int> labels, std::span<const double> p_translated,
                                     double threshold) {
  if (labels.size() != p_translated.size()) throw std::invalid_argument("metrics: length mismatch");
  // confusion[truth][prediction]
  double confusion[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kOriginalLabel && labels[i] != kTranslatedLabel) {
      throw std::invalid_argument("metrics: labels must be 0 or 1");
    }
    const int pred = p_translated[i] > threshold ? kTranslatedLabel : kOriginalLabel;
    confusion[labels[i]][pred] += 1.0;
  }
  auto f1 = [&](int c) {
    const double tp = confusion[c][c];
    const double fp = confusion[1 - c][c];
    const double fn = confusion[c][1 - c];
    const double denom = 2.0 * tp + fp + fn;
    return denom > 0.0 ? 2.0 * tp / denom : 0.0;
  };
  ClassifierMetrics m;
  m.n = labels.size();
  m.accuracy = (confusion[0][0] + confusion[1][1]) / static_cast<double>(labels.size());
  m.macro_f1 = 0.5 * (f1(0) + f1(1));
  m.auc = mann_whitney_auc(labels, p_translated);
  return m;
}

}  // namespace ff
