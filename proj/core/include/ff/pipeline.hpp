#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ff/classifier.hpp"
#include "ff/corpus.hpp"
#include "ff/evaluation.hpp"
#include "ff/guardrails.hpp"
#include "ff/sampling.hpp"
#include "ff/stats.hpp"

namespace ff {

enum class SamplingMode { downsampled, full };

std::string_view to_string(SamplingMode m) noexcept;
std::optional<SamplingMode> parse_sampling_mode(std::string_view s) noexcept;

/// Flat key = value configuration. Keys match the field names below; lines
/// starting with '#' are comments.
struct PipelineConfig {
  std::vector<std::filesystem::path> input;
  std::uint64_t seed = 0;
  int min_words = 20;
  SamplingMode sampling = SamplingMode::downsampled;
  int length_bins = 10;
  Weighting weighting = Weighting::tfidf;
  int ngram_min = 1;
  int ngram_max = 3;
  std::size_t max_features = 20000;
  bool refit_features_per_fold = true;
  double C = 10.0;
  int max_iter = 2000;
  double tol = 1e-6;
  ClassWeight class_weight = ClassWeight::balanced;
  ClassWeightBasis class_weight_basis = ClassWeightBasis::sampled;
  int k_folds = 10;
  std::size_t max_excess_chars = 500;
  AlignmentMode alignment_mode = AlignmentMode::percentile;
  double alignment_threshold = 0.45;
  double alignment_quantile = 0.02;
  MissingAlignPolicy missing_align_sim = MissingAlignPolicy::error;
  stats::AnalysisBins analysis_bins = stats::AnalysisBins::defaults();
  int long_threshold = 100;
  double alpha = 0.05;
  int permutation_iterations = 0;
  std::size_t permutation_below = 0;
  std::filesystem::path output_dir = "ff_out";

  /// Relative input paths resolve against base_dir. Throws ff::ConfigError.
  static PipelineConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& file);

  /// Canonical key = value text (one key per line, fixed order).
  std::string serialize() const;
  /// Throws ff::ConfigError. With check_paths, inputs must exist.
  void validate(bool check_paths) const;

  FeatureConfig feature_config() const;
  TrainConfig train_config() const;
  AlignmentConfig alignment_config() const;
};

struct IngestResult {
  std::vector<ParagraphRecord> records;
  std::vector<std::pair<std::string, SchemaError>> errors;  // (input path, error)
  std::vector<std::pair<std::string, std::string>> input_hashes;  // (path, sha256)
};

IngestResult ingest(const PipelineConfig& config);

struct FilterStage {
  std::vector<ParagraphRecord> records;
  std::size_t n_ingested = 0;
  std::size_t n_after_dedupe = 0;
  std::size_t n_after_min_length = 0;
  FilterReport guardrails;
};

/// Dedupe, minimum length, then guardrails.
FilterStage filter_stage(std::vector<ParagraphRecord> records, const PipelineConfig& config);

struct SampleStage {
  std::vector<WeightedRecord> training;
  std::optional<LengthBins> bins;  // absent in full mode
  std::vector<BinSummary> summary;
};

SampleStage sample_stage(std::span<const ParagraphRecord> filtered, const PipelineConfig& config);

struct CvStage {
  std::vector<Stratum> strata;
  FoldAssignment folds;
  CrossValResult cv;
  ClassifierMetrics metrics;  // on the training sample
};

/// Folds cover every book of the filtered corpus; translated records outside
/// the training sample are scored by their book's fold model.
CvStage cv_stage(std::span<const ParagraphRecord> filtered, const SampleStage& sample, const PipelineConfig& config);

struct CorrelateStage {
  std::vector<stats::AnalysisRecord> analysis;
  std::size_t n_missing_comet = 0;
  std::size_t n_missing_score = 0;
  std::vector<stats::CorrelationResult> table;
  std::vector<stats::NamedCorrelation> headline;
};

/// Joins translated records with their fluency scores and runs the analyses.
CorrelateStage correlate_stage(std::span<const ParagraphRecord> filtered, std::span<const OofScore> scores,
                               const PipelineConfig& config);

struct GridCell {
  Weighting weighting = Weighting::tfidf;
  SamplingMode sampling = SamplingMode::downsampled;
};

struct GridRow {
  GridCell cell;
  std::size_t samples = 0;
  stats::CorrelationResult length_fluency;
  stats::CorrelationResult partial;
};

std::vector<GridCell> full_grid();
/// Parses "tfidf:downsampled,count:full". Throws ff::ConfigError.
std::vector<GridCell> parse_grid(std::string_view spec);

/// Reruns sample -> CV -> correlate per cell on the filtered corpus.
std::vector<GridRow> run_variant_grid(std::span<const ParagraphRecord> filtered, const PipelineConfig& config,
                                      std::span<const GridCell> cells);

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr std::string_view kIngestReport = "ingest_report.json";
inline constexpr std::string_view kFiltered = "filtered.jsonl";
inline constexpr std::string_view kFilterReport = "filter_report.json";
inline constexpr std::string_view kDropped = "dropped.csv";
inline constexpr std::string_view kSamplingSummary = "sampling_summary.csv";
inline constexpr std::string_view kTrainingSet = "training_set.csv";
inline constexpr std::string_view kFolds = "folds.csv";
inline constexpr std::string_view kCvFolds = "cv_folds.csv";
inline constexpr std::string_view kScores = "scores.csv";
inline constexpr std::string_view kMetrics = "metrics.csv";
inline constexpr std::string_view kCorrelations = "correlations.csv";
inline constexpr std::string_view kHeadline = "headline.csv";
inline constexpr std::string_view kGrid = "grid.csv";
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kFailed = "FAILED";
inline constexpr std::string_view kModelsDir = "models";
}  // namespace artifact

// Stage artifact writers; each file carries the seed.
void write_ingest_artifacts(const std::filesystem::path& dir, const IngestResult& r, const PipelineConfig& c);
void write_filter_artifacts(const std::filesystem::path& dir, const FilterStage& r, const PipelineConfig& c);
void write_sample_artifacts(const std::filesystem::path& dir, const SampleStage& r, const PipelineConfig& c);
void write_cv_artifacts(const std::filesystem::path& dir, const CvStage& r, std::span<const ParagraphRecord> filtered,
                        const PipelineConfig& c);
void write_correlate_artifacts(const std::filesystem::path& dir, const CorrelateStage& r, const PipelineConfig& c);
void write_grid_artifact(const std::filesystem::path& dir, std::span<const GridRow> rows, const PipelineConfig& c);

// Readers for running a stage standalone on earlier artifacts.
std::vector<ParagraphRecord> read_records_file(const std::filesystem::path& path);
SampleStage read_training_set(const std::filesystem::path& path, std::span<const ParagraphRecord> filtered);
std::vector<OofScore> read_scores(const std::filesystem::path& path);

/// Hashes every artifact present in dir plus the inputs; status is "complete"
/// or "failed:<stage>".
std::string manifest_json(const std::filesystem::path& dir, const PipelineConfig& config,
                          std::span<const std::pair<std::string, std::string>> input_hashes,
                          std::string_view status);

enum class Stage { ingest_check, filter, sample, train_cv, correlate, grid, report, all };
std::optional<Stage> parse_stage(std::string_view s) noexcept;
std::string_view to_string(Stage s) noexcept;

struct RunOutcome {
  std::filesystem::path output_dir;
  std::vector<std::string> artifacts;  // relative names, sorted
};

/// Runs one stage (reading prior artifacts from the output directory) or the
/// whole pipeline. On failure a FAILED marker names the stage and the manifest
/// is written with a failed status before the error propagates.
RunOutcome run_stage(const PipelineConfig& config, Stage stage, std::span<const GridCell> grid = {});
RunOutcome run_pipeline(const PipelineConfig& config);

}  // namespace ff
