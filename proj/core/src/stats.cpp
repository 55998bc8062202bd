#include "ff/stats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "ff/artifacts.hpp"
#include "ff/rng.hpp"

namespace ff::stats {

std::vector<double> rankdata(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const double v : values) {
    if (std::isnan(v)) throw std::invalid_argument("rankdata: NaN input");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share the average of ranks i+1..j.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double correlation_p_value(double r, double df) {
  if (std::isnan(r) || df <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (std::abs(r) >= 1.0) return 0.0;
  const double t = r * std::sqrt(df / ((1.0 - r) * (1.0 + r)));
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

std::string_view to_string(CorrelationStatus s) noexcept {
  switch (s) {
    case CorrelationStatus::ok: return "ok";
    case CorrelationStatus::undefined: return "undefined";
    case CorrelationStatus::skipped: return "skipped";
  }
  return "";
}

namespace {

CorrelationResult undefined_result(std::size_t n, std::string note) {
  CorrelationResult r;
  r.n = n;
  r.status = CorrelationStatus::undefined;
  r.note = std::move(note);
  return r;
}

double partial_from(double r_xy, double r_xz, double r_yz) {
  const double denom = std::sqrt((1.0 - r_xz * r_xz) * (1.0 - r_yz * r_yz));
  return std::clamp((r_xy - r_xz * r_yz) / denom, -1.0, 1.0);
}

}  // namespace

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 observations");
  const auto rx = rankdata(x);
  const auto ry = rankdata(y);
  const double rho = pearson(rx, ry);
  if (std::isnan(rho)) return undefined_result(x.size(), "zero rank variance");
  CorrelationResult r;
  r.n = x.size();
  r.rho = rho;
  r.p_value = correlation_p_value(rho, static_cast<double>(r.n) - 2.0);
  return r;
}

CorrelationResult partial_spearman(std::span<const double> x, std::span<const double> y,
                                   std::span<const double> z) {
  if (x.size() != y.size() || x.size() != z.size()) throw std::invalid_argument("partial_spearman: length mismatch");
  if (x.size() < 4) throw std::invalid_argument("partial_spearman: need at least 4 observations");
  const auto rx = rankdata(x);
  const auto ry = rankdata(y);
  const auto rz = rankdata(z);
  const double r_xy = pearson(rx, ry);
  const double r_xz = pearson(rx, rz);
  const double r_yz = pearson(ry, rz);
  if (std::isnan(r_xy) || std::isnan(r_xz) || std::isnan(r_yz)) {
    return undefined_result(x.size(), "zero rank variance");
  }
  if (std::abs(r_xz) >= 1.0 || std::abs(r_yz) >= 1.0) {
    return undefined_result(x.size(), "control variable perfectly rank-correlated");
  }
  CorrelationResult r;
  r.n = x.size();
  r.rho = partial_from(r_xy, r_xz, r_yz);
  r.p_value = correlation_p_value(r.rho, static_cast<double>(r.n) - 3.0);
  return r;
}

double permutation_p_value(std::span<const double> x, std::span<const double> y, std::span<const double> z,
                           int iterations, std::uint64_t seed) {
  if (iterations < 1) throw std::invalid_argument("permutation_p_value: iterations must be >= 1");
  if (x.size() != y.size() || (!z.empty() && z.size() != x.size())) {
    throw std::invalid_argument("permutation_p_value: length mismatch");
  }
  std::vector<double> rx = rankdata(x);
  const auto ry = rankdata(y);
  std::vector<double> rz;
  double r_yz = 0.0;
  if (!z.empty()) {
    rz = rankdata(z);
    r_yz = pearson(ry, rz);
  }
  auto statistic = [&](std::span<const double> ranks_x) {
    const double r_xy = pearson(ranks_x, ry);
    if (z.empty()) return r_xy;
    return partial_from(r_xy, pearson(ranks_x, rz), r_yz);
  };
  const double observed = std::abs(statistic(rx));
  if (std::isnan(observed)) return std::numeric_limits<double>::quiet_NaN();

  Rng rng(seed);
  int extreme = 0;
  for (int i = 0; i < iterations; ++i) {
    rng.shuffle(std::span<double>(rx));
    const double s = std::abs(statistic(rx));
    // Relative slack so exact ties with the observed value count as extreme.
    if (!std::isnan(s) && s >= observed - 1e-12 * std::max(1.0, observed)) ++extreme;
  }
  return (1.0 + extreme) / (1.0 + iterations);
}

std::string AnalysisBin::label() const {
  return hi ? fmt::format("{}-{}", lo, *hi) : fmt::format("{}+", lo);
}

AnalysisBins AnalysisBins::defaults() {
  return AnalysisBins{{{20, 30}, {31, 60}, {61, 100}, {101, std::nullopt}}};
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("analysis bins: bad integer '" + std::string(s) + "' in '" + std::string(whole) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

AnalysisBins AnalysisBins::parse(std::string_view spec) {
  AnalysisBins out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const auto piece = trim(spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start));
    if (!piece.empty() && piece.back() == '+') {
      out.bins.push_back({parse_int(piece.substr(0, piece.size() - 1), spec), std::nullopt});
    } else {
      const auto dash = piece.find('-');
      if (dash == std::string_view::npos) {
        throw std::invalid_argument("analysis bins: expected 'lo-hi' or 'lo+' in '" + std::string(spec) + "'");
      }
      out.bins.push_back({parse_int(piece.substr(0, dash), spec), parse_int(piece.substr(dash + 1), spec)});
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  out.validate();
  return out;
}

void AnalysisBins::validate() const {
  if (bins.empty()) throw std::invalid_argument("analysis bins: empty");
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& b = bins[i];
    const bool last = i + 1 == bins.size();
    if (last != !b.hi) throw std::invalid_argument("analysis bins: only the last bin may (and must) be open-ended");
    if (b.hi && *b.hi < b.lo) throw std::invalid_argument("analysis bins: bin " + b.label() + " is empty");
    if (i > 0 && b.lo != *bins[i - 1].hi + 1) {
      throw std::invalid_argument("analysis bins: bins must be contiguous and ascending");
    }
  }
}

std::optional<std::size_t> AnalysisBins::bin_of(int word_count) const noexcept {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].contains(word_count)) return i;
  }
  return std::nullopt;
}

std::string AnalysisBins::to_string() const {
  std::string out;
  for (const auto& b : bins) {
    if (!out.empty()) out += ',';
    out += b.label();
  }
  return out;
}

namespace {

struct Columns {
  std::vector<double> fluency, comet, length;

  void add(const AnalysisRecord& r) {
    fluency.push_back(r.fluency);
    comet.push_back(r.comet_kiwi);
    length.push_back(static_cast<double>(r.word_count));
  }
  std::size_t size() const noexcept { return fluency.size(); }
};

CorrelationResult partial_row(const Columns& c, const StratifiedOptions& opt, std::uint64_t stream) {
  CorrelationResult r;
  if (c.size() < opt.min_n) {
    r.n = c.size();
    r.status = CorrelationStatus::skipped;
    r.note = fmt::format("n < {}", opt.min_n);
  } else {
    r = partial_spearman(c.fluency, c.comet, c.length);
    if (r.defined() && opt.permutation_iterations > 0 && r.n < opt.permutation_below) {
      r.p_value = permutation_p_value(c.fluency, c.comet, c.length, opt.permutation_iterations,
                                      substream_seed(opt.seed, fmt::format("permutation-{}", stream)));
      r.p_method = "permutation";
    }
  }
  r.x_name = "fluency";
  r.y_name = "comet_kiwi";
  r.controlled_for = "word_count";
  return r;
}

}  // namespace

std::vector<CorrelationResult> stratified_analysis(std::span<const AnalysisRecord> records, const AnalysisBins& bins,
                                                   const StratifiedOptions& options) {
  bins.validate();
  int max_variant = 0;
  for (const auto& r : records) {
    if (r.source == SourceType::original) {
      throw std::invalid_argument("stratified_analysis: original-class record '" + r.record_id + "'");
    }
    if (r.source == SourceType::human) max_variant = std::max(max_variant, r.variant_index);
  }

  struct SourceStratum {
    std::string label;
    std::function<bool(const AnalysisRecord&)> member;
  };
  std::vector<SourceStratum> sources;
  sources.push_back({"all", [](const AnalysisRecord&) { return true; }});
  sources.push_back({"human", [](const AnalysisRecord& r) { return r.source == SourceType::human; }});
  for (int v = 1; v <= max_variant; ++v) {
    sources.push_back({fmt::format("human_v{}", v),
                       [v](const AnalysisRecord& r) { return r.source == SourceType::human && r.variant_index == v; }});
  }
  sources.push_back({"google", [](const AnalysisRecord& r) { return r.source == SourceType::google; }});
  sources.push_back({"llm", [](const AnalysisRecord& r) { return r.source == SourceType::llm; }});

  std::vector<CorrelationResult> rows;
  std::uint64_t stream = 0;
  for (const auto& src : sources) {
    Columns all;
    std::vector<Columns> per_bin(bins.bins.size());
    for (const auto& r : records) {
      if (!src.member(r)) continue;
      all.add(r);
      if (const auto b = bins.bin_of(r.word_count)) per_bin[*b].add(r);
    }
    auto row = partial_row(all, options, stream++);
    row.source = src.label;
    row.bin = "all";
    rows.push_back(std::move(row));
    for (std::size_t b = 0; b < bins.bins.size(); ++b) {
      auto brow = partial_row(per_bin[b], options, stream++);
      brow.source = src.label;
      brow.bin = bins.bins[b].label();
      rows.push_back(std::move(brow));
    }
  }
  return rows;
}

std::vector<NamedCorrelation> headline_correlations(std::span<const AnalysisRecord> records, int long_threshold) {
  std::vector<NamedCorrelation> out;
  auto emit_spearman = [&](std::string name, std::string xn, std::string yn, const std::vector<double>& x,
                           const std::vector<double>& y) {
    CorrelationResult r;
    if (x.size() < 3) {
      r.n = x.size();
      r.status = CorrelationStatus::skipped;
      r.note = "n < 3";
    } else {
      r = spearman(x, y);
    }
    r.x_name = std::move(xn);
    r.y_name = std::move(yn);
    out.push_back({std::move(name), std::move(r)});
  };
  auto emit_partial = [&](std::string name, const Columns& c) {
    CorrelationResult r;
    if (c.size() < 4) {
      r.n = c.size();
      r.status = CorrelationStatus::skipped;
      r.note = "n < 4";
    } else {
      r = partial_spearman(c.fluency, c.comet, c.length);
    }
    r.x_name = "fluency";
    r.y_name = "comet_kiwi";
    r.controlled_for = "word_count";
    out.push_back({std::move(name), std::move(r)});
  };

  Columns all, shorter, longer;
  std::vector<double> align_len, align_sim;
  Columns by_source[3];
  for (const auto& r : records) {
    all.add(r);
    (r.word_count < long_threshold ? shorter : longer).add(r);
    if (r.align_sim) {
      align_len.push_back(static_cast<double>(r.word_count));
      align_sim.push_back(*r.align_sim);
    }
    if (r.source == SourceType::human) by_source[0].add(r);
    if (r.source == SourceType::google) by_source[1].add(r);
    if (r.source == SourceType::llm) by_source[2].add(r);
  }

  emit_spearman("fluency_comet_all", "fluency", "comet_kiwi", all.fluency, all.comet);
  emit_spearman(fmt::format("fluency_comet_under_{}", long_threshold), "fluency", "comet_kiwi", shorter.fluency,
                shorter.comet);
  emit_spearman(fmt::format("fluency_comet_{}_plus", long_threshold), "fluency", "comet_kiwi", longer.fluency,
                longer.comet);
  emit_spearman("length_comet", "word_count", "comet_kiwi", all.length, all.comet);
  emit_spearman("length_fluency", "word_count", "fluency", all.length, all.fluency);
  emit_spearman("length_align_sim", "word_count", "align_sim", align_len, align_sim);
  emit_partial("partial_fluency_comet_all", all);
  emit_partial("partial_fluency_comet_human", by_source[0]);
  emit_partial("partial_fluency_comet_google", by_source[1]);
  emit_partial("partial_fluency_comet_llm", by_source[2]);
  return out;
}

std::string correlation_table_csv(std::span<const CorrelationResult> rows, double alpha) {
  std::string out = "source,bin,n,rho,p,significant,status,p_method,note\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(r.source.value_or("")), csv_field(r.bin.value_or("")),
                       r.n, r.defined() ? format_real(r.rho) : "", r.defined() ? format_real(r.p_value) : "",
                       r.significant(alpha) ? 1 : 0, to_string(r.status), r.p_method, csv_field(r.note));
  }
  return out;
}

}  // namespace ff::stats
