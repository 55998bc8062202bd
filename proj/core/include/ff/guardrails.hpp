#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ff/corpus.hpp"

namespace ff {

enum class LengthVerdict { keep, drop, keep_unpaired };

/// Drops an LLM translation whose character length exceeds the paired Google
/// output by strictly more than max_excess_chars. A missing pair keeps the
/// record and reports keep_unpaired.
LengthVerdict length_consistency_filter(const ParagraphRecord& llm, const ParagraphRecord* google,
                                        std::size_t max_excess_chars = 500);

enum class AlignmentMode { absolute, percentile };
enum class MissingAlignPolicy { error, drop };

struct AlignmentConfig {
  AlignmentMode mode = AlignmentMode::percentile;
  double threshold = 0.45;  // absolute mode: drop align_sim < threshold
  double quantile = 0.02;   // percentile mode: drop the lowest floor(q*n) translated records
  MissingAlignPolicy missing = MissingAlignPolicy::error;
};

std::optional<AlignmentMode> parse_alignment_mode(std::string_view s) noexcept;
std::optional<MissingAlignPolicy> parse_missing_policy(std::string_view s) noexcept;
std::string_view to_string(AlignmentMode m) noexcept;
std::string_view to_string(MissingAlignPolicy m) noexcept;

struct DroppedRecord {
  std::string record_id;
  std::string reason;  // "length_consistency", "alignment", "missing_align_sim"
  std::optional<double> value;
};

struct FilterReport {
  std::size_t n_input = 0;
  std::size_t n_removed_length_consistency = 0;
  std::size_t n_removed_alignment = 0;
  std::size_t n_unpaired_llm = 0;
  double removal_fraction = 0.0;
  std::map<std::string, std::size_t, std::less<>> removed_by_source;
  std::string threshold_used;
  std::optional<double> alignment_cutoff;  // similarity at the cut, when one was applied
  std::vector<DroppedRecord> dropped;

  std::size_t n_removed() const noexcept { return n_removed_length_consistency + n_removed_alignment; }
};

struct FilterResult {
  std::vector<ParagraphRecord> records;
  FilterReport report;
};

/// Pairs every LLM record with the Google record of the same source paragraph
/// (same book_id and source_text) and applies length_consistency_filter.
FilterResult apply_length_consistency(std::span<const ParagraphRecord> records, std::size_t max_excess_chars = 500);

/// Absolute mode drops translated records with align_sim < threshold; percentile
/// mode drops the floor(q*n) translated records of lowest align_sim (ties broken
/// by record_id). Original records are never dropped; comet_kiwi is never read.
/// Throws ff::DataError on a missing align_sim under MissingAlignPolicy::error.
FilterResult alignment_filter(std::span<const ParagraphRecord> records, const AlignmentConfig& config);

/// Length consistency, then alignment. The combined report counts against the
/// original input size.
FilterResult run_guardrails(std::span<const ParagraphRecord> records, std::size_t max_excess_chars,
                            const AlignmentConfig& alignment);

std::string filter_report_json(const FilterReport& report);
std::string dropped_csv(const FilterReport& report);

}  // namespace ff
