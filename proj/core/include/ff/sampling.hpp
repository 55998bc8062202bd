#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ff/corpus.hpp"

namespace ff {

/// Word-count bins from cut points c_1 < ... < c_{m}. Bin 0 holds counts <= c_1,
/// bin j holds c_j < count <= c_{j+1}, and the last bin everything above c_m,
/// so every count falls in exactly one bin.
struct LengthBins {
  std::vector<int> boundaries;
  int requested_bins = 10;

  std::size_t size() const noexcept { return boundaries.size() + 1; }
  std::size_t bin_of(int word_count) const noexcept;
  /// Requested bins lost to duplicate quantile values.
  std::size_t merged_bins() const noexcept {
    return static_cast<std::size_t>(requested_bins) - size();
  }
};

/// Cut points at the i/k empirical quantiles (sorted index ceil(i*n/k)-1) of the
/// original-class word counts, duplicates merged. Throws std::invalid_argument on
/// empty input or k < 1.
LengthBins compute_length_bins(std::span<const int> original_word_counts, int k = 10);

struct BinSummary {
  std::size_t bin = 0;
  int lower_exclusive = 0;  // meaningless for bin 0
  int upper_inclusive = 0;  // meaningless for the last bin
  std::size_t original = 0;
  std::size_t translated_available = 0;
  std::size_t translated_kept = 0;

  bool shortfall() const noexcept { return translated_available < original; }
};

struct DownsampleResult {
  std::vector<ParagraphRecord> records;
  std::vector<BinSummary> summary;
};

/// Per bin keeps min(original, available) translated records drawn uniformly
/// without replacement; original records pass through. Selection depends only on
/// the record set, bins and seed, not on input order. Output keeps input order.
DownsampleResult downsample_translated(std::span<const ParagraphRecord> records, const LengthBins& bins,
                                       std::uint64_t seed);

struct WeightedRecord {
  ParagraphRecord record;
  double weight = 1.0;
};

/// 1 for original records, 1/n_variants for translated ones. Throws
/// std::invalid_argument when n_variants < 1.
std::vector<WeightedRecord> assign_sample_weights(std::span<const ParagraphRecord> records);

}  // namespace ff
