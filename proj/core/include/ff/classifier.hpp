#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ff/features.hpp"

namespace ff {

enum class ClassWeight { balanced, none };

std::string_view to_string(ClassWeight c) noexcept;
std::optional<ClassWeight> parse_class_weight(std::string_view s) noexcept;

/// Which class counts balanced weights come from during cross-validation: the
/// downsampled training fold, or the training fold's records before downsampling.
enum class ClassWeightBasis { sampled, unsampled };

std::string_view to_string(ClassWeightBasis b) noexcept;
std::optional<ClassWeightBasis> parse_class_weight_basis(std::string_view s) noexcept;

/// Label convention: 0 = original, 1 = translated.
inline constexpr int kOriginalLabel = 0;
inline constexpr int kTranslatedLabel = 1;

struct TrainConfig {
  double C = 10.0;
  int max_iter = 2000;
  double tol = 1e-6;  // on the gradient infinity-norm
  ClassWeight class_weight = ClassWeight::balanced;
  ClassWeightBasis class_weight_basis = ClassWeightBasis::sampled;  // read by cross_val_oof, not train
  std::uint64_t seed = 0;  // sets the starting point
  int history = 10;        // L-BFGS correction pairs

  void validate() const;
};

struct TrainedModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  TrainConfig config;
  bool converged = false;
  double final_objective = 0.0;
  double gradient_inf_norm = 0.0;
  int iterations = 0;

  std::size_t n_features() const noexcept { return coefficients.size(); }
};

/// F(beta, b) = 0.5*|beta|^2 + C * sum_i w_i * log(1 + exp(-s_i * (x_i.beta + b))),
/// s_i = +1 for translated and -1 for original. The intercept is unpenalized.
/// Parameters are packed as [beta..., b].
class LogisticObjective {
 public:
  LogisticObjective(const FeatureMatrix& X, std::span<const int> labels, std::span<const double> weights, double C);

  std::size_t dimension() const noexcept { return X_.n_cols + 1; }
  double value(std::span<const double> params) const;
  /// Writes the gradient and returns the value.
  double value_and_gradient(std::span<const double> params, std::span<double> grad) const;

 private:
  const FeatureMatrix& X_;
  std::span<const int> labels_;
  std::span<const double> weights_;
  double C_;
};

/// n_total / (2 * n_class) per class, from label counts.
std::vector<double> balanced_class_weights(std::span<const int> labels);

/// Effective per-row weights: class weight (if balanced) times sample weight.
std::vector<double> effective_weights(std::span<const int> labels, std::span<const double> sample_weights,
                                      ClassWeight class_weight);

/// Minimizes LogisticObjective with L-BFGS and a strong-Wolfe line search.
/// Throws std::invalid_argument on shape mismatch, single-class input or
/// non-finite features/weights.
TrainedModel train(const FeatureMatrix& X, std::span<const int> labels, std::span<const double> sample_weights,
                   const TrainConfig& config);

double sigmoid(double z) noexcept;

/// P(translated | x). Throws std::invalid_argument when the row references a
/// column outside the model.
double predict_proba(const TrainedModel& model, const SparseRow& x);
double predict_proba(const TrainedModel& model, const FeatureMatrix& X, std::size_t row);

/// Original-likeness: 1 - P(translated | x). Throws std::domain_error outside [0,1].
double fluency(double p_translated);

/// Text artifact with hex-float values so reloading predicts bit-identically.
void save_model(std::ostream& out, const TrainedModel& model, std::string_view vocab_hash);

struct LoadedModel {
  TrainedModel model;
  std::string vocab_hash;
};
LoadedModel load_model(std::istream& in);

}  // namespace ff
