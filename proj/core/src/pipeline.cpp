#include "ff/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "ff/artifacts.hpp"
#include "ff/errors.hpp"
#include "ff/rng.hpp"

namespace fs = std::filesystem;

namespace ff {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(SamplingMode m) noexcept {
  return m == SamplingMode::downsampled ? "downsampled" : "full";
}

std::optional<SamplingMode> parse_sampling_mode(std::string_view s) noexcept {
  if (s == "downsampled") return SamplingMode::downsampled;
  if (s == "full") return SamplingMode::full;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(fmt::format("config: key '{}' expects a number, got '{}'", key, value));
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  // from_chars for double is missing from older libstdc++.
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError(fmt::format("config: key '{}' expects a real number, got '{}'", key, value));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(fmt::format("config: key '{}' expects true/false, got '{}'", key, value));
}

template <typename T, typename F>
T parse_enum(std::string_view key, std::string_view value, F parser) {
  const auto v = parser(value);
  if (!v) throw ConfigError(fmt::format("config: key '{}' has unknown value '{}'", key, value));
  return *v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == s.npos ? s.npos : pos - start)));
    if (pos == s.npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text, const fs::path& base_dir) {
  PipelineConfig c;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (const auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("config line {}: expected 'key = value'", line_no));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(fmt::format("config line {}: duplicate key '{}'", line_no, key));
    }

    if (key == "input") {
      c.input.clear();
      for (const auto p : split(value, ',')) {
        if (p.empty()) throw ConfigError("config: empty path in 'input'");
        fs::path path(p);
        c.input.push_back(path.is_relative() && !base_dir.empty() ? base_dir / path : path);
      }
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "min_words") {
      c.min_words = parse_number<int>(key, value);
    } else if (key == "sampling") {
      c.sampling = parse_enum<SamplingMode>(key, value, parse_sampling_mode);
    } else if (key == "length_bins") {
      c.length_bins = parse_number<int>(key, value);
    } else if (key == "weighting") {
      c.weighting = parse_enum<Weighting>(key, value, parse_weighting);
    } else if (key == "ngram_range") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) throw ConfigError("config: ngram_range expects 'min,max'");
      c.ngram_min = parse_number<int>(key, parts[0]);
      c.ngram_max = parse_number<int>(key, parts[1]);
    } else if (key == "max_features") {
      c.max_features = parse_number<std::size_t>(key, value);
    } else if (key == "refit_features_per_fold") {
      c.refit_features_per_fold = parse_bool(key, value);
    } else if (key == "C") {
      c.C = parse_real(key, value);
    } else if (key == "max_iter") {
      c.max_iter = parse_number<int>(key, value);
    } else if (key == "tol") {
      c.tol = parse_real(key, value);
    } else if (key == "class_weight") {
      c.class_weight = parse_enum<ClassWeight>(key, value, parse_class_weight);
    } else if (key == "class_weight_basis") {
      c.class_weight_basis = parse_enum<ClassWeightBasis>(key, value, parse_class_weight_basis);
    } else if (key == "k_folds") {
      c.k_folds = parse_number<int>(key, value);
    } else if (key == "max_excess_chars") {
      c.max_excess_chars = parse_number<std::size_t>(key, value);
    } else if (key == "alignment_mode") {
      c.alignment_mode = parse_enum<AlignmentMode>(key, value, parse_alignment_mode);
    } else if (key == "alignment_threshold") {
      c.alignment_threshold = parse_real(key, value);
    } else if (key == "alignment_quantile") {
      c.alignment_quantile = parse_real(key, value);
    } else if (key == "missing_align_sim") {
      c.missing_align_sim = parse_enum<MissingAlignPolicy>(key, value, parse_missing_policy);
    } else if (key == "analysis_bins") {
      try {
        c.analysis_bins = stats::AnalysisBins::parse(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "long_threshold") {
      c.long_threshold = parse_number<int>(key, value);
    } else if (key == "alpha") {
      c.alpha = parse_real(key, value);
    } else if (key == "permutation_iterations") {
      c.permutation_iterations = parse_number<int>(key, value);
    } else if (key == "permutation_below") {
      c.permutation_below = parse_number<std::size_t>(key, value);
    } else if (key == "output_dir") {
      fs::path path(value);
      c.output_dir = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    } else {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
  }
  c.validate(false);
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse(text, file.parent_path());
}

std::string PipelineConfig::serialize() const {
  std::string inputs;
  for (const auto& p : input) {
    if (!inputs.empty()) inputs += ',';
    inputs += p.generic_string();
  }
  std::string out;
  auto kv = [&out](std::string_view k, const std::string& v) { out += fmt::format("{} = {}\n", k, v); };
  kv("input", inputs);
  kv("seed", std::to_string(seed));
  kv("min_words", std::to_string(min_words));
  kv("sampling", std::string(to_string(sampling)));
  kv("length_bins", std::to_string(length_bins));
  kv("weighting", std::string(to_string(weighting)));
  kv("ngram_range", fmt::format("{},{}", ngram_min, ngram_max));
  kv("max_features", std::to_string(max_features));
  kv("refit_features_per_fold", refit_features_per_fold ? "true" : "false");
  kv("C", format_real(C));
  kv("max_iter", std::to_string(max_iter));
  kv("tol", format_real(tol));
  kv("class_weight", std::string(to_string(class_weight)));
  kv("class_weight_basis", std::string(to_string(class_weight_basis)));
  kv("k_folds", std::to_string(k_folds));
  kv("max_excess_chars", std::to_string(max_excess_chars));
  kv("alignment_mode", std::string(to_string(alignment_mode)));
  kv("alignment_threshold", format_real(alignment_threshold));
  kv("alignment_quantile", format_real(alignment_quantile));
  kv("missing_align_sim", std::string(to_string(missing_align_sim)));
  kv("analysis_bins", analysis_bins.to_string());
  kv("long_threshold", std::to_string(long_threshold));
  kv("alpha", format_real(alpha));
  kv("permutation_iterations", std::to_string(permutation_iterations));
  kv("permutation_below", std::to_string(permutation_below));
  kv("output_dir", output_dir.generic_string());
  return out;
}

void PipelineConfig::validate(bool check_paths) const {
  auto bad = [](const std::string& why) { return ConfigError("config: " + why); };
  if (ngram_min < 1 || ngram_min > ngram_max || ngram_max > kMaxGramOrder) {
    throw bad(fmt::format("invalid n-gram range [{}, {}] (need 1 <= min <= max <= {})", ngram_min, ngram_max,
                          kMaxGramOrder));
  }
  if (min_words < 0) throw bad("min_words must be >= 0");
  if (length_bins < 1) throw bad("length_bins must be >= 1");
  if (max_features < 1) throw bad("max_features must be >= 1");
  if (!(C > 0.0) || !std::isfinite(C)) throw bad("C must be positive");
  if (max_iter < 1) throw bad("max_iter must be >= 1");
  if (!(tol > 0.0)) throw bad("tol must be positive");
  if (k_folds < 2) throw bad("k_folds must be >= 2");
  if (!(alignment_quantile >= 0.0 && alignment_quantile <= 1.0)) throw bad("alignment_quantile must lie in [0,1]");
  if (!std::isfinite(alignment_threshold)) throw bad("alignment_threshold must be finite");
  if (!(alpha > 0.0 && alpha < 1.0)) throw bad("alpha must lie in (0,1)");
  if (permutation_iterations < 0) throw bad("permutation_iterations must be >= 0");
  try {
    analysis_bins.validate();
  } catch (const std::invalid_argument& e) {
    throw bad(e.what());
  }
  if (check_paths) {
    if (input.empty()) throw bad("no input files");
    for (const auto& p : input) {
      if (!fs::exists(p)) throw bad("input does not exist: " + p.string());
    }
  }
}

FeatureConfig PipelineConfig::feature_config() const {
  return FeatureConfig{ngram_min, ngram_max, max_features, weighting, refit_features_per_fold};
}

TrainConfig PipelineConfig::train_config() const {
  TrainConfig t;
  t.C = C;
  t.max_iter = max_iter;
  t.tol = tol;
  t.class_weight = class_weight;
  t.class_weight_basis = class_weight_basis;
  t.seed = substream_seed(seed, "train");
  return t;
}

AlignmentConfig PipelineConfig::alignment_config() const {
  return AlignmentConfig{alignment_mode, alignment_threshold, alignment_quantile, missing_align_sim};
}

// ---------------------------------------------------------------------------
// Stages

IngestResult ingest(const PipelineConfig& config) {
  IngestResult out;
  std::set<std::string, std::less<>> ids;
  for (const auto& path : config.input) {
    const auto bytes = read_file(path);
    out.input_hashes.emplace_back(path.generic_string(), sha256_hex(bytes));
    auto parsed = parse_records(std::string_view(bytes));
    for (auto& e : parsed.errors) out.errors.emplace_back(path.generic_string(), std::move(e));
    for (auto& r : parsed.records) {
      if (!ids.insert(r.record_id).second) {
        out.errors.emplace_back(path.generic_string(),
                                SchemaError{0, "record_id", "record_id '" + r.record_id + "' repeats across inputs"});
        continue;
      }
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

FilterStage filter_stage(std::vector<ParagraphRecord> records, const PipelineConfig& config) {
  FilterStage out;
  out.n_ingested = records.size();
  records = dedupe_works(std::move(records));
  out.n_after_dedupe = records.size();
  records = filter_min_length(std::move(records), config.min_words);
  out.n_after_min_length = records.size();
  auto guarded = run_guardrails(records, config.max_excess_chars, config.alignment_config());
  out.records = std::move(guarded.records);
  out.guardrails = std::move(guarded.report);
  collect_books(out.records);  // book consistency check
  return out;
}

SampleStage sample_stage(std::span<const ParagraphRecord> filtered, const PipelineConfig& config) {
  SampleStage out;
  std::vector<int> original_counts;
  for (const auto& r : filtered) {
    if (r.is_original()) original_counts.push_back(r.word_count);
  }
  if (original_counts.empty()) throw DataError("sample: no original-class records");

  if (config.sampling == SamplingMode::full) {
    out.training = assign_sample_weights(filtered);
    return out;
  }
  out.bins = compute_length_bins(original_counts, config.length_bins);
  auto down = downsample_translated(filtered, *out.bins, substream_seed(config.seed, "sampling"));
  out.summary = std::move(down.summary);
  out.training = assign_sample_weights(down.records);
  return out;
}

CvStage cv_stage(std::span<const ParagraphRecord> filtered, const SampleStage& sample, const PipelineConfig& config) {
  CvStage out;
  const auto books = collect_books(filtered);
  out.strata = make_strata(books);
  out.folds = make_folds(books, config.k_folds, substream_seed(config.seed, "folds"));

  std::set<std::string_view> in_training;
  for (const auto& w : sample.training) in_training.insert(w.record.record_id);
  std::vector<ParagraphRecord> extra;
  for (const auto& r : filtered) {
    if (!in_training.contains(r.record_id)) extra.push_back(r);
  }

  out.cv = cross_val_oof(sample.training, out.folds, config.feature_config(), config.train_config(), extra);

  std::vector<int> labels;
  std::vector<double> p;
  for (std::size_t i = 0; i < sample.training.size(); ++i) {
    labels.push_back(sample.training[i].record.is_original() ? kOriginalLabel : kTranslatedLabel);
    p.push_back(out.cv.scores[i].p_translated);
  }
  out.metrics = classifier_metrics(labels, p);
  return out;
}

CorrelateStage correlate_stage(std::span<const ParagraphRecord> filtered, std::span<const OofScore> scores,
                               const PipelineConfig& config) {
  std::unordered_map<std::string_view, double> p_of;
  for (const auto& s : scores) p_of.emplace(s.record_id, s.p_translated);

  CorrelateStage out;
  for (const auto& r : filtered) {
    if (r.is_original()) continue;
    if (!r.comet_kiwi) {
      ++out.n_missing_comet;
      continue;
    }
    const auto it = p_of.find(r.record_id);
    if (it == p_of.end()) {
      ++out.n_missing_score;
      continue;
    }
    out.analysis.push_back({r.record_id, r.source_type, r.variant_index, r.word_count, fluency(it->second),
                            *r.comet_kiwi, r.align_sim});
  }
  if (out.n_missing_score > 0) {
    throw DataError(fmt::format("correlate: {} translated records have no fluency score", out.n_missing_score));
  }

  stats::StratifiedOptions opt;
  opt.alpha = config.alpha;
  opt.permutation_iterations = config.permutation_iterations;
  opt.permutation_below = config.permutation_below;
  opt.seed = substream_seed(config.seed, "permutation");
  out.table = stats::stratified_analysis(out.analysis, config.analysis_bins, opt);
  out.headline = stats::headline_correlations(out.analysis, config.long_threshold);
  return out;
}

std::vector<GridCell> full_grid() {
  return {{Weighting::tfidf, SamplingMode::downsampled},
          {Weighting::tfidf, SamplingMode::full},
          {Weighting::count, SamplingMode::downsampled},
          {Weighting::count, SamplingMode::full}};
}

std::vector<GridCell> parse_grid(std::string_view spec) {
  std::vector<GridCell> cells;
  for (const auto item : split(spec, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw ConfigError("grid: expected 'weighting:sampling', got '" + std::string(item) + "'");
    cells.push_back({parse_enum<Weighting>("grid", parts[0], parse_weighting),
                     parse_enum<SamplingMode>("grid", parts[1], parse_sampling_mode)});
  }
  return cells;
}

namespace {

const stats::CorrelationResult& headline_entry(const CorrelateStage& c, std::string_view name) {
  for (const auto& h : c.headline) {
    if (h.name == name) return h.result;
  }
  throw std::logic_error("missing headline entry " + std::string(name));
}

}  // namespace

std::vector<GridRow> run_variant_grid(std::span<const ParagraphRecord> filtered, const PipelineConfig& config,
                                      std::span<const GridCell> cells) {
  std::vector<GridRow> rows;
  for (const auto& cell : cells) {
    auto variant = config;
    variant.weighting = cell.weighting;
    variant.sampling = cell.sampling;
    const auto sample = sample_stage(filtered, variant);
    const auto cv = cv_stage(filtered, sample, variant);
    const auto corr = correlate_stage(filtered, cv.cv.scores, variant);
    rows.push_back({cell, sample.training.size(), headline_entry(corr, "length_fluency"),
                    headline_entry(corr, "partial_fluency_comet_all")});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::string csv_seed_line(const PipelineConfig& c) { return fmt::format("# seed={}\n", c.seed); }

std::vector<std::vector<std::string>> read_csv_table(const fs::path& path, std::string_view expected_header) {
  const auto text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  bool header_seen = false;
  for (auto& row : parse_csv(text)) {
    if (!row.empty() && !row[0].empty() && row[0][0] == '#') continue;
    if (!header_seen) {
      std::string joined;
      for (const auto& f : row) joined += (joined.empty() ? "" : ",") + f;
      if (joined != expected_header) {
        throw DataError(fmt::format("{}: unexpected header '{}'", path.string(), joined));
      }
      header_seen = true;
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw DataError(path.string() + ": empty table");
  return rows;
}

double to_real(const std::string& s, const fs::path& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw DataError(path.string() + ": bad number '" + s + "'");
  return v;
}

}  // namespace

void write_ingest_artifacts(const fs::path& dir, const IngestResult& r, const PipelineConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["n_records"] = r.records.size();
  j["n_errors"] = r.errors.size();
  std::size_t originals = 0;
  for (const auto& rec : r.records) originals += rec.is_original() ? 1 : 0;
  j["n_original"] = originals;
  j["n_translated"] = r.records.size() - originals;
  j["inputs"] = ordered_json::array();
  for (const auto& [path, hash] : r.input_hashes) j["inputs"].push_back({{"path", path}, {"sha256", hash}});
  j["errors"] = ordered_json::array();
  for (const auto& [path, e] : r.errors) {
    j["errors"].push_back({{"input", path}, {"line", e.line}, {"field", e.field}, {"reason", e.reason}});
  }
  write_file(dir / artifact::kIngestReport, j.dump(2) + "\n");
}

void write_filter_artifacts(const fs::path& dir, const FilterStage& r, const PipelineConfig& c) {
  std::ostringstream records;
  write_records(records, r.records);
  write_file(dir / artifact::kFiltered, records.str());

  ordered_json j;
  j["seed"] = c.seed;
  j["n_ingested"] = r.n_ingested;
  j["n_after_dedupe"] = r.n_after_dedupe;
  j["n_after_min_length"] = r.n_after_min_length;
  j["min_words"] = c.min_words;
  j["guardrails"] = ordered_json::parse(filter_report_json(r.guardrails));
  j["n_output"] = r.records.size();
  write_file(dir / artifact::kFilterReport, j.dump(2) + "\n");
  write_file(dir / artifact::kDropped, csv_seed_line(c) + dropped_csv(r.guardrails));
}

void write_sample_artifacts(const fs::path& dir, const SampleStage& r, const PipelineConfig& c) {
  std::string summary = csv_seed_line(c) + "bin,lower_exclusive,upper_inclusive,original,translated_available,"
                                           "translated_kept,shortfall\n";
  for (const auto& b : r.summary) {
    const bool first = b.bin == 0;
    const bool last = b.bin + 1 == r.summary.size();
    summary += fmt::format("{},{},{},{},{},{},{}\n", b.bin, first ? "" : std::to_string(b.lower_exclusive),
                           last ? "" : std::to_string(b.upper_inclusive), b.original, b.translated_available,
                           b.translated_kept, b.shortfall() ? 1 : 0);
  }
  write_file(dir / artifact::kSamplingSummary, summary);

  std::string training = csv_seed_line(c) + "record_id,weight\n";
  for (const auto& w : r.training) training += csv_field(w.record.record_id) + ',' + format_real(w.weight) + '\n';
  write_file(dir / artifact::kTrainingSet, training);
}

void write_cv_artifacts(const fs::path& dir, const CvStage& r, std::span<const ParagraphRecord> filtered,
                        const PipelineConfig& c) {
  std::map<std::string, std::string, std::less<>> stratum_of;
  for (const auto& s : r.strata) {
    for (const auto& b : s.book_ids) stratum_of[b] = s.label;
  }
  std::string folds = csv_seed_line(c) + "book_id,stratum,fold\n";
  for (const auto& [book, fold] : r.folds.fold_of) {
    folds += fmt::format("{},{},{}\n", csv_field(book), csv_field(stratum_of[book]), fold);
  }
  write_file(dir / artifact::kFolds, folds);

  std::string cv = csv_seed_line(c) + "fold,n_train,n_scored,vocabulary_size,converged,iterations,objective,vocab_hash\n";
  for (const auto& f : r.cv.folds) {
    cv += fmt::format("{},{},{},{},{},{},{},{}\n", f.fold, f.n_train, f.n_scored, f.vocabulary_size,
                      f.converged ? 1 : 0, f.iterations, format_real(f.final_objective), f.vocab_hash);
  }
  write_file(dir / artifact::kCvFolds, cv);

  // Scores in corpus order.
  std::unordered_map<std::string_view, const OofScore*> by_id;
  for (const auto& s : r.cv.scores) by_id.emplace(s.record_id, &s);
  std::string scores = csv_seed_line(c) + "record_id,fold,p_oof,fluency,in_training_sample\n";
  for (const auto& rec : filtered) {
    const auto it = by_id.find(rec.record_id);
    if (it == by_id.end()) continue;
    const auto& s = *it->second;
    scores += fmt::format("{},{},{},{},{}\n", csv_field(s.record_id), s.fold, format_real(s.p_translated),
                          format_real(fluency(s.p_translated)), s.in_training_sample ? 1 : 0);
  }
  write_file(dir / artifact::kScores, scores);

  write_file(dir / artifact::kMetrics,
             csv_seed_line(c) + "features,sampling,n,accuracy,macro_f1,auc\n" +
                 fmt::format("{},{},{},{},{},{}\n", to_string(c.weighting), to_string(c.sampling), r.metrics.n,
                             format_real(r.metrics.accuracy), format_real(r.metrics.macro_f1),
                             format_real(r.metrics.auc)));

  const auto models = dir / artifact::kModelsDir;
  for (const auto& f : r.cv.folds) {
    std::ostringstream model;
    save_model(model, f.model, f.vocab_hash);
    write_file(models / fmt::format("fold_{:02}.model", f.fold), model.str());
    std::ostringstream vocab;
    write_vocabulary_csv(vocab, f.vocabulary, f.idf);
    write_file(models / fmt::format("fold_{:02}_vocab.csv", f.fold), vocab.str());
  }
}

void write_correlate_artifacts(const fs::path& dir, const CorrelateStage& r, const PipelineConfig& c) {
  write_file(dir / artifact::kCorrelations, csv_seed_line(c) + stats::correlation_table_csv(r.table, c.alpha));
  std::string headline = csv_seed_line(c) + "name,x,y,controlled_for,n,rho,p,significant,status\n";
  for (const auto& h : r.headline) {
    const auto& x = h.result;
    headline += fmt::format("{},{},{},{},{},{},{},{},{}\n", h.name, x.x_name, x.y_name, x.controlled_for.value_or(""),
                            x.n, x.defined() ? format_real(x.rho) : "", x.defined() ? format_real(x.p_value) : "",
                            x.significant(c.alpha) ? 1 : 0, stats::to_string(x.status));
  }
  write_file(dir / artifact::kHeadline, headline);
}

void write_grid_artifact(const fs::path& dir, std::span<const GridRow> rows, const PipelineConfig& c) {
  std::string out = csv_seed_line(c) + "features,sampling,samples,length_fluency_rho,length_fluency_p,partial_rho,"
                                       "partial_p\n";
  auto num = [](const stats::CorrelationResult& r, double v) { return r.defined() ? format_real(v) : std::string(); };
  for (const auto& row : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", to_string(row.cell.weighting), to_string(row.cell.sampling),
                       row.samples, num(row.length_fluency, row.length_fluency.rho),
                       num(row.length_fluency, row.length_fluency.p_value), num(row.partial, row.partial.rho),
                       num(row.partial, row.partial.p_value));
  }
  write_file(dir / artifact::kGrid, out);
}

std::vector<ParagraphRecord> read_records_file(const fs::path& path) {
  auto parsed = parse_records(std::string_view(read_file(path)));
  if (!parsed.errors.empty()) {
    const auto& e = parsed.errors.front();
    throw DataError(fmt::format("{}: {} schema error(s); first at line {} ({}): {}", path.string(),
                                parsed.errors.size(), e.line, e.field, e.reason));
  }
  return std::move(parsed.records);
}

SampleStage read_training_set(const fs::path& path, std::span<const ParagraphRecord> filtered) {
  std::unordered_map<std::string_view, const ParagraphRecord*> by_id;
  for (const auto& r : filtered) by_id.emplace(r.record_id, &r);
  SampleStage out;
  for (const auto& row : read_csv_table(path, "record_id,weight")) {
    if (row.size() != 2) throw DataError(path.string() + ": expected 2 columns");
    const auto it = by_id.find(row[0]);
    if (it == by_id.end()) throw DataError(path.string() + ": unknown record '" + row[0] + "'");
    out.training.push_back({*it->second, to_real(row[1], path)});
  }
  return out;
}

std::vector<OofScore> read_scores(const fs::path& path) {
  std::vector<OofScore> out;
  for (const auto& row : read_csv_table(path, "record_id,fold,p_oof,fluency,in_training_sample")) {
    if (row.size() != 5) throw DataError(path.string() + ": expected 5 columns");
    out.push_back({row[0], static_cast<int>(to_real(row[1], path)), to_real(row[2], path), row[4] == "1"});
  }
  return out;
}

std::string manifest_json(const fs::path& dir, const PipelineConfig& config,
                          std::span<const std::pair<std::string, std::string>> input_hashes,
                          std::string_view status) {
  ordered_json j;
  j["tool"] = "ffkit";
  j["format_version"] = 1;
  j["status"] = status;
  j["seed"] = config.seed;
  ordered_json cfg = ordered_json::object();
  const auto canonical = config.serialize();
  for (const auto line : split(canonical, '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    cfg[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  j["config"] = cfg;
  j["inputs"] = ordered_json::array();
  for (const auto& [path, hash] : input_hashes) j["inputs"].push_back({{"path", path}, {"sha256", hash}});

  std::vector<std::string> names;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto rel = fs::relative(entry.path(), dir).generic_string();
      if (rel == artifact::kManifest || rel.ends_with(".partial")) continue;
      names.push_back(std::move(rel));
    }
  }
  std::sort(names.begin(), names.end());
  j["artifacts"] = ordered_json::array();
  for (const auto& n : names) j["artifacts"].push_back({{"name", n}, {"sha256", sha256_file(dir / n)}});
  return j.dump(2) + "\n";
}

std::optional<Stage> parse_stage(std::string_view s) noexcept {
  if (s == "ingest-check") return Stage::ingest_check;
  if (s == "filter") return Stage::filter;
  if (s == "sample") return Stage::sample;
  if (s == "train-cv") return Stage::train_cv;
  if (s == "correlate") return Stage::correlate;
  if (s == "grid") return Stage::grid;
  if (s == "report") return Stage::report;
  if (s == "all") return Stage::all;
  return std::nullopt;
}

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::ingest_check: return "ingest-check";
    case Stage::filter: return "filter";
    case Stage::sample: return "sample";
    case Stage::train_cv: return "train-cv";
    case Stage::correlate: return "correlate";
    case Stage::grid: return "grid";
    case Stage::report: return "report";
    case Stage::all: return "all";
  }
  return "";
}

namespace {

std::vector<std::pair<std::string, std::string>> hash_inputs(const PipelineConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : config.input) out.emplace_back(p.generic_string(), sha256_file(p));
  return out;
}

IngestResult checked_ingest(const PipelineConfig& config) {
  auto r = ingest(config);
  write_ingest_artifacts(config.output_dir, r, config);
  if (!r.errors.empty()) {
    const auto& [path, e] = r.errors.front();
    throw DataError(fmt::format("ingest-check: {} schema error(s); first in {} line {} ({}): {}", r.errors.size(),
                                path, e.line, e.field, e.reason));
  }
  return r;
}

RunOutcome outcome(const PipelineConfig& config) {
  RunOutcome out;
  out.output_dir = config.output_dir;
  for (const auto& entry : fs::recursive_directory_iterator(config.output_dir)) {
    if (entry.is_regular_file()) out.artifacts.push_back(fs::relative(entry.path(), config.output_dir).generic_string());
  }
  std::sort(out.artifacts.begin(), out.artifacts.end());
  return out;
}

void run_one(const PipelineConfig& config, Stage stage, std::span<const GridCell> grid) {
  const auto& dir = config.output_dir;
  switch (stage) {
    case Stage::ingest_check:
      checked_ingest(config);
      break;
    case Stage::filter: {
      auto ing = checked_ingest(config);
      write_filter_artifacts(dir, filter_stage(std::move(ing.records), config), config);
      break;
    }
    case Stage::sample: {
      const auto filtered = read_records_file(dir / artifact::kFiltered);
      write_sample_artifacts(dir, sample_stage(filtered, config), config);
      break;
    }
    case Stage::train_cv: {
      const auto filtered = read_records_file(dir / artifact::kFiltered);
      const auto sample = read_training_set(dir / artifact::kTrainingSet, filtered);
      write_cv_artifacts(dir, cv_stage(filtered, sample, config), filtered, config);
      break;
    }
    case Stage::correlate: {
      const auto filtered = read_records_file(dir / artifact::kFiltered);
      const auto scores = read_scores(dir / artifact::kScores);
      write_correlate_artifacts(dir, correlate_stage(filtered, scores, config), config);
      break;
    }
    case Stage::grid: {
      const auto filtered = read_records_file(dir / artifact::kFiltered);
      const auto cells = grid.empty() ? full_grid() : std::vector<GridCell>(grid.begin(), grid.end());
      write_grid_artifact(dir, run_variant_grid(filtered, config, cells), config);
      break;
    }
    case Stage::report:
      break;
    case Stage::all: {
      auto ing = checked_ingest(config);
      const auto filt = filter_stage(std::move(ing.records), config);
      write_filter_artifacts(dir, filt, config);
      const auto sample = sample_stage(filt.records, config);
      write_sample_artifacts(dir, sample, config);
      const auto cv = cv_stage(filt.records, sample, config);
      write_cv_artifacts(dir, cv, filt.records, config);
      const auto corr = correlate_stage(filt.records, cv.cv.scores, config);
      write_correlate_artifacts(dir, corr, config);
      if (!grid.empty()) write_grid_artifact(dir, run_variant_grid(filt.records, config, grid), config);
      break;
    }
  }
}

}  // namespace

RunOutcome run_stage(const PipelineConfig& config, Stage stage, std::span<const GridCell> grid) {
  config.validate(true);
  const auto& dir = config.output_dir;
  fs::create_directories(dir);
  fs::remove(dir / artifact::kFailed);
  const auto inputs = hash_inputs(config);
  try {
    run_one(config, stage, grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    write_file(dir / artifact::kFailed, fmt::format("stage={}\ncause={}\n", to_string(stage), e.what()));
    write_file(dir / artifact::kManifest, manifest_json(dir, config, inputs, "failed:" + std::string(to_string(stage))));
    if (dynamic_cast<const DataError*>(&e) != nullptr) throw DataError(std::string(to_string(stage)) + ": " + e.what());
    if (const auto* se = dynamic_cast<const StageError*>(&e)) throw *se;
    throw StageError(std::string(to_string(stage)), e.what());
  }
  write_file(dir / artifact::kManifest, manifest_json(dir, config, inputs, "complete"));
  return outcome(config);
}

RunOutcome run_pipeline(const PipelineConfig& config) { return run_stage(config, Stage::all); }

}  // namespace ff
