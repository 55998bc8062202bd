#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ff/corpus.hpp"

namespace ff::stats {

/// 1-based ranks with ties averaged. Throws std::invalid_argument on NaN.
std::vector<double> rankdata(std::span<const double> values);

/// Pearson correlation; NaN when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of a correlation under H0 via t = r*sqrt(df/(1-r^2)) ~ t(df).
double correlation_p_value(double r, double df);

enum class CorrelationStatus { ok, undefined, skipped };
std::string_view to_string(CorrelationStatus s) noexcept;

struct CorrelationResult {
  double rho = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  std::string x_name;
  std::string y_name;
  std::optional<std::string> controlled_for;
  std::optional<std::string> source;  // stratum labels, when stratified
  std::optional<std::string> bin;
  CorrelationStatus status = CorrelationStatus::ok;
  std::string p_method = "t";
  std::string note;

  bool defined() const noexcept { return status == CorrelationStatus::ok; }
  bool significant(double alpha = 0.05) const noexcept { return defined() && p_value < alpha; }
};

/// Rank-Pearson correlation with a t(n-2) p-value. Undefined (flagged, not
/// thrown) when a rank vector has zero variance. Throws std::invalid_argument
/// unless |x| = |y| >= 3.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

/// Partial rank correlation of x and y controlling for z, from the three
/// rank-Pearson correlations, with a t(n-3) p-value. Undefined when z is
/// perfectly rank-correlated with x or y. Throws unless equal lengths >= 4.
CorrelationResult partial_spearman(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> z);

/// Seeded permutation p-value: x is shuffled, the statistic recomputed, and
/// p = (1 + #{|stat_perm| >= |stat_obs|}) / (1 + iterations). With z the
/// statistic is the partial correlation.
double permutation_p_value(std::span<const double> x, std::span<const double> y,
                           std::span<const double> z, int iterations, std::uint64_t seed);

/// Closed word-count interval; an absent upper bound is open-ended.
struct AnalysisBin {
  int lo = 0;
  std::optional<int> hi;

  bool contains(int wc) const noexcept { return wc >= lo && (!hi || wc <= *hi); }
  std::string label() const;
};

struct AnalysisBins {
  std::vector<AnalysisBin> bins;

  static AnalysisBins defaults();  // 20-30, 31-60, 61-100, 101+
  /// Parses "20-30,31-60,61-100,101+". Throws std::invalid_argument.
  static AnalysisBins parse(std::string_view spec);
  /// Ascending, disjoint, contiguous and open-ended at the top.
  void validate() const;
  std::optional<std::size_t> bin_of(int word_count) const noexcept;
  std::string to_string() const;
};

/// One translated paragraph as seen by the correlation analyses.
struct AnalysisRecord {
  std::string record_id;
  SourceType source = SourceType::human;
  int variant_index = 1;
  int word_count = 0;
  double fluency = 0.0;
  double comet_kiwi = 0.0;
  std::optional<double> align_sim;
};

struct StratifiedOptions {
  double alpha = 0.05;
  std::size_t min_n = 4;
  int permutation_iterations = 0;  // 0 disables permutation p-values
  std::size_t permutation_below = 0;  // strata with n below this use them
  std::uint64_t seed = 0;
};

/// Partial Spearman(fluency, comet_kiwi | word_count) for every source stratum
/// (all, human pooled, each human variant, google, llm) crossed with every bin
/// plus "all". Strata under min_n are emitted as skipped rows.
std::vector<CorrelationResult> stratified_analysis(std::span<const AnalysisRecord> records,
                                                   const AnalysisBins& bins,
                                                   const StratifiedOptions& options = {});

struct NamedCorrelation {
  std::string name;
  CorrelationResult result;
};

/// Global, length-split (< long_threshold words vs >=), length-confound and
/// partial (overall and per source) correlations.
std::vector<NamedCorrelation> headline_correlations(std::span<const AnalysisRecord> records,
                                                    int long_threshold = 100);

/// Long-form table: source,bin,n,rho,p,significant,status,p_method,note.
std::string correlation_table_csv(std::span<const CorrelationResult> rows, double alpha = 0.05);

}  // namespace ff::stats
