#include "ff/sampling.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "ff/rng.hpp"

namespace ff {

std::size_t LengthBins::bin_of(int word_count) const noexcept {
  return static_cast<std::size_t>(std::lower_bound(boundaries.begin(), boundaries.end(), word_count) -
                                  boundaries.begin());
}

LengthBins compute_length_bins(std::span<const int> original_word_counts, int k) {
  if (original_word_counts.empty()) throw std::invalid_argument("compute_length_bins: empty input");
  if (k < 1) throw std::invalid_argument("compute_length_bins: k must be >= 1");

  std::vector<int> sorted(original_word_counts.begin(), original_word_counts.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();

  LengthBins bins;
  bins.requested_bins = k;
  for (int i = 1; i < k; ++i) {
    const auto num = static_cast<std::size_t>(i) * n;
    const auto kk = static_cast<std::size_t>(k);
    const std::size_t idx = (num + kk - 1) / kk - 1;
    const int cut = sorted[idx];
    // A cut at the maximum would leave the last bin empty of originals.
    if (cut >= sorted.back()) break;
    if (bins.boundaries.empty() || cut > bins.boundaries.back()) bins.boundaries.push_back(cut);
  }
  return bins;
}

DownsampleResult downsample_translated(std::span<const ParagraphRecord> records, const LengthBins& bins,
                                       std::uint64_t seed) {
  const auto n_bins = bins.size();
  std::vector<BinSummary> summary(n_bins);
  std::vector<std::vector<const ParagraphRecord*>> pool(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    summary[b].bin = b;
    summary[b].lower_exclusive = b == 0 ? 0 : bins.boundaries[b - 1];
    summary[b].upper_inclusive = b < bins.boundaries.size() ? bins.boundaries[b] : 0;
  }
  for (const auto& r : records) {
    const auto b = bins.bin_of(r.word_count);
    if (r.is_original()) {
      ++summary[b].original;
    } else {
      ++summary[b].translated_available;
      pool[b].push_back(&r);
    }
  }

  Rng rng(seed);
  std::unordered_set<const ParagraphRecord*> kept;
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& candidates = pool[b];
    std::sort(candidates.begin(), candidates.end(),
              [](const ParagraphRecord* a, const ParagraphRecord* c) { return a->record_id < c->record_id; });
    const auto take = std::min(summary[b].original, candidates.size());
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
      kept.insert(candidates[i]);
    }
    summary[b].translated_kept = take;
  }

  DownsampleResult out;
  out.summary = std::move(summary);
  out.records.reserve(records.size());
  for (const auto& r : records) {
    if (r.is_original() || kept.contains(&r)) out.records.push_back(r);
  }
  return out;
}

std::vector<WeightedRecord> assign_sample_weights(std::span<const ParagraphRecord> records) {
  std::vector<WeightedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.n_variants < 1) {
      throw std::invalid_argument("record '" + r.record_id + "' has n_variants < 1");
    }
    const double w = r.is_original() ? 1.0 : 1.0 / static_cast<double>(r.n_variants);
    out.push_back({r, w});
  }
  return out;
}

}  // namespace ff
