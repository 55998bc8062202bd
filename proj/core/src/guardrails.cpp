#include "ff/guardrails.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "ff/artifacts.hpp"
#include "ff/errors.hpp"
#include "ff/text.hpp"

namespace ff {

std::optional<AlignmentMode> parse_alignment_mode(std::string_view s) noexcept {
  if (s == "absolute") return AlignmentMode::absolute;
  if (s == "percentile") return AlignmentMode::percentile;
  return std::nullopt;
}

std::optional<MissingAlignPolicy> parse_missing_policy(std::string_view s) noexcept {
  if (s == "error") return MissingAlignPolicy::error;
  if (s == "drop") return MissingAlignPolicy::drop;
  return std::nullopt;
}

std::string_view to_string(AlignmentMode m) noexcept {
  return m == AlignmentMode::absolute ? "absolute" : "percentile";
}

std::string_view to_string(MissingAlignPolicy m) noexcept {
  return m == MissingAlignPolicy::error ? "error" : "drop";
}

LengthVerdict length_consistency_filter(const ParagraphRecord& llm, const ParagraphRecord* google,
                                        std::size_t max_excess_chars) {
  if (google == nullptr) return LengthVerdict::keep_unpaired;
  const auto llm_len = text::char_length(llm.english_text);
  const auto google_len = text::char_length(google->english_text);
  if (llm_len > google_len && llm_len - google_len > max_excess_chars) return LengthVerdict::drop;
  return LengthVerdict::keep;
}

namespace {

struct PairKey {
  std::string_view book_id;
  std::string_view source_text;
  bool operator==(const PairKey&) const = default;
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const noexcept {
    const auto h1 = std::hash<std::string_view>{}(k.book_id);
    const auto h2 = std::hash<std::string_view>{}(k.source_text);
    return h1 ^ (h2 + 0x9E3779B97F4A7C15ULL + (h1 << 6) + (h1 >> 2));
  }
};

void finish(FilterReport& r) {
  r.removal_fraction = r.n_input == 0 ? 0.0 : static_cast<double>(r.n_removed()) / static_cast<double>(r.n_input);
}

}  // namespace

FilterResult apply_length_consistency(std::span<const ParagraphRecord> records, std::size_t max_excess_chars) {
  // Several Google records for one paragraph: the smallest record_id is the pair.
  std::unordered_map<PairKey, const ParagraphRecord*, PairKeyHash> google;
  for (const auto& r : records) {
    if (r.source_type != SourceType::google) continue;
    auto [it, inserted] = google.try_emplace(PairKey{r.book_id, r.source_text}, &r);
    if (!inserted && r.record_id < it->second->record_id) it->second = &r;
  }

  FilterResult out;
  auto& rep = out.report;
  rep.n_input = records.size();
  rep.threshold_used = fmt::format("max_excess_chars={}", max_excess_chars);
  for (const auto& r : records) {
    if (r.source_type == SourceType::llm) {
      const auto it = google.find(PairKey{r.book_id, r.source_text});
      const auto verdict = length_consistency_filter(r, it == google.end() ? nullptr : it->second, max_excess_chars);
      if (verdict == LengthVerdict::drop) {
        ++rep.n_removed_length_consistency;
        ++rep.removed_by_source[std::string(to_string(r.source_type))];
        const auto excess = static_cast<double>(text::char_length(r.english_text)) -
                            static_cast<double>(text::char_length(it->second->english_text));
        rep.dropped.push_back({r.record_id, "length_consistency", excess});
        continue;
      }
      if (verdict == LengthVerdict::keep_unpaired) ++rep.n_unpaired_llm;
    }
    out.records.push_back(r);
  }
  finish(rep);
  return out;
}

FilterResult alignment_filter(std::span<const ParagraphRecord> records, const AlignmentConfig& config) {
  FilterResult out;
  auto& rep = out.report;
  rep.n_input = records.size();

  std::unordered_set<const ParagraphRecord*> drop;
  std::vector<const ParagraphRecord*> scored;
  for (const auto& r : records) {
    if (r.is_original()) continue;
    if (!r.align_sim) {
      if (config.missing == MissingAlignPolicy::error) {
        throw DataError("alignment_filter: translated record '" + r.record_id + "' has no align_sim");
      }
      drop.insert(&r);
      continue;
    }
    scored.push_back(&r);
  }

  if (config.mode == AlignmentMode::absolute) {
    rep.threshold_used = "absolute:" + format_real(config.threshold);
    for (const auto* r : scored) {
      if (*r->align_sim < config.threshold) drop.insert(r);
    }
    rep.alignment_cutoff = config.threshold;
  } else {
    if (!(config.quantile >= 0.0 && config.quantile <= 1.0)) {
      throw std::invalid_argument("alignment_filter: quantile must lie in [0,1]");
    }
    rep.threshold_used = "percentile:" + format_real(config.quantile);
    std::sort(scored.begin(), scored.end(), [](const ParagraphRecord* a, const ParagraphRecord* b) {
      if (*a->align_sim != *b->align_sim) return *a->align_sim < *b->align_sim;
      return a->record_id < b->record_id;
    });
    const auto n_cut = static_cast<std::size_t>(std::floor(config.quantile * static_cast<double>(scored.size())));
    for (std::size_t i = 0; i < n_cut; ++i) drop.insert(scored[i]);
    if (n_cut > 0) rep.alignment_cutoff = *scored[n_cut - 1]->align_sim;
  }

  for (const auto& r : records) {
    if (!drop.contains(&r)) {
      out.records.push_back(r);
      continue;
    }
    ++rep.n_removed_alignment;
    ++rep.removed_by_source[std::string(to_string(r.source_type))];
    rep.dropped.push_back({r.record_id, r.align_sim ? "alignment" : "missing_align_sim", r.align_sim});
  }
  finish(rep);
  return out;
}

FilterResult run_guardrails(std::span<const ParagraphRecord> records, std::size_t max_excess_chars,
                            const AlignmentConfig& alignment) {
  auto length = apply_length_consistency(records, max_excess_chars);
  auto aligned = alignment_filter(length.records, alignment);

  FilterResult out;
  out.records = std::move(aligned.records);
  auto& rep = out.report;
  rep.n_input = records.size();
  rep.n_removed_length_consistency = length.report.n_removed_length_consistency;
  rep.n_unpaired_llm = length.report.n_unpaired_llm;
  rep.n_removed_alignment = aligned.report.n_removed_alignment;
  rep.removed_by_source = length.report.removed_by_source;
  for (const auto& [src, n] : aligned.report.removed_by_source) rep.removed_by_source[src] += n;
  rep.threshold_used = length.report.threshold_used + ";" + aligned.report.threshold_used;
  rep.alignment_cutoff = aligned.report.alignment_cutoff;
  rep.dropped = std::move(length.report.dropped);
  rep.dropped.insert(rep.dropped.end(), aligned.report.dropped.begin(), aligned.report.dropped.end());
  finish(rep);
  return out;
}

std::string filter_report_json(const FilterReport& report) {
  nlohmann::ordered_json j;
  j["n_input"] = report.n_input;
  j["n_kept"] = report.n_input - report.n_removed();
  j["n_removed_length_consistency"] = report.n_removed_length_consistency;
  j["n_removed_alignment"] = report.n_removed_alignment;
  j["n_unpaired_llm"] = report.n_unpaired_llm;
  j["removal_fraction"] = report.removal_fraction;
  j["removed_by_source"] = nlohmann::ordered_json::object();
  for (const auto& [src, n] : report.removed_by_source) j["removed_by_source"][src] = n;
  j["threshold_used"] = report.threshold_used;
  j["alignment_cutoff"] = report.alignment_cutoff ? nlohmann::ordered_json(*report.alignment_cutoff) : nullptr;
  return j.dump(2) + "\n";
}

std::string dropped_csv(const FilterReport& report) {
  std::string out = "record_id,reason,value\n";
  for (const auto& d : report.dropped) {
    out += csv_field(d.record_id) + ',' + d.reason + ',' + (d.value ? format_real(*d.value) : "") + '\n';
  }
  return out;
}

}  // namespace ff
