#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ff/classifier.hpp"
#include "ff/corpus.hpp"
#include "ff/features.hpp"
#include "ff/sampling.hpp"

namespace ff {

inline constexpr std::string_view kRareLanguages = "rare-languages";

struct FoldAssignment {
  int k = 10;
  std::map<std::string, int, std::less<>> fold_of;  // book_id -> fold in [0, k)

  int fold(std::string_view book_id) const;  // throws std::out_of_range
};

struct Stratum {
  std::string label;
  std::vector<std::string> book_ids;  // sorted
};

/// Original books form "en-original"; translated books are grouped by source
/// language, with languages of at most `rare_max_books` books pooled into
/// "rare-languages". Strata are sorted by label.
std::vector<Stratum> make_strata(std::span<const BookEntry> books, std::size_t rare_max_books = 2);

/// Shuffles each stratum's books with the seed and deals them round-robin from
/// a cursor that carries over between strata, so per-stratum fold counts differ
/// by at most one. Throws std::invalid_argument with fewer books than folds.
FoldAssignment make_folds(std::span<const BookEntry> books, int k, std::uint64_t seed);

struct FeatureConfig {
  int ngram_min = 1;
  int ngram_max = 3;
  std::size_t max_features = 20000;
  Weighting weighting = Weighting::tfidf;
  bool refit_per_fold = true;  // vocabulary and idf fitted on each training split

  void validate() const;
};

struct OofScore {
  std::string record_id;
  int fold = 0;
  double p_translated = 0.0;
  bool in_training_sample = false;
};

struct FoldSummary {
  int fold = 0;
  std::size_t n_train = 0;
  std::size_t n_scored = 0;
  std::size_t vocabulary_size = 0;
  bool converged = false;
  int iterations = 0;
  double final_objective = 0.0;
  std::string vocab_hash;
  TrainedModel model;
  Vocabulary vocabulary;
  std::vector<double> idf;
};

struct CrossValResult {
  std::vector<OofScore> scores;  // in the order of the scored records
  std::vector<FoldSummary> folds;
};

/// Fits one model per fold on training records outside the fold and scores the
/// fold's records with it. When `extra_scored` is non-empty those records are
/// scored too (by the model of their book's fold) without being trained on;
/// every record is scored exactly once. With ClassWeightBasis::unsampled the
/// balanced class weights count training and extra records outside the fold.
/// Errors propagate as ff::StageError
/// naming the fold.
CrossValResult cross_val_oof(std::span<const WeightedRecord> training, const FoldAssignment& folds,
                             const FeatureConfig& features, const TrainConfig& train,
                             std::span<const ParagraphRecord> extra_scored = {});

struct ClassifierMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double auc = 0.0;
  std::size_t n = 0;
};

/// Prediction is "translated" when p > threshold. AUC is the Mann-Whitney
/// statistic with ties counted one half. Throws std::invalid_argument on length
/// mismatch or a single class.
ClassifierMetrics classifier_metrics(std::span<const int> labels, std::span<const double> p_translated,
                                     double threshold = 0.5);

double mann_whitney_auc(std::span<const int> labels, std::span<const double> scores);

}  // namespace ff
