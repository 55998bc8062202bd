#include "ff/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "ff/rng.hpp"

namespace ff {

std::string_view to_string(ClassWeight c) noexcept { return c == ClassWeight::balanced ? "balanced" : "none"; }

std::optional<ClassWeight> parse_class_weight(std::string_view s) noexcept {
  if (s == "balanced") return ClassWeight::balanced;
  if (s == "none") return ClassWeight::none;
  return std::nullopt;
}

std::string_view to_string(ClassWeightBasis b) noexcept {
  return b == ClassWeightBasis::sampled ? "sampled" : "unsampled";
}

std::optional<ClassWeightBasis> parse_class_weight_basis(std::string_view s) noexcept {
  if (s == "sampled") return ClassWeightBasis::sampled;
  if (s == "unsampled") return ClassWeightBasis::unsampled;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw std::invalid_argument("TrainConfig: C must be positive");
  if (max_iter < 1) throw std::invalid_argument("TrainConfig: max_iter must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("TrainConfig: tol must be positive");
  if (history < 1) throw std::invalid_argument("TrainConfig: history must be >= 1");
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(-m)) without overflow.
double log1pexp_neg(double m) noexcept {
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double sign_of(int label) noexcept { return label == kTranslatedLabel ? 1.0 : -1.0; }

double inf_norm(std::span<const double> v) noexcept {
  double m = 0.0;
  for (const double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LogisticObjective::LogisticObjective(const FeatureMatrix& X, std::span<const int> labels,
                                     std::span<const double> weights, double C)
    : X_(X), labels_(labels), weights_(weights), C_(C) {}

double LogisticObjective::value(std::span<const double> params) const {
  const std::size_t d = X_.n_cols;
  const std::span<const double> beta = params.first(d);
  const double b = params[d];
  double data = 0.0;
  for (std::size_t i = 0; i < X_.n_rows; ++i) {
    const double margin = sign_of(labels_[i]) * (X_.row_dot(i, beta) + b);
    data += weights_[i] * log1pexp_neg(margin);
  }
  return 0.5 * dot(beta, beta) + C_ * data;
}

double LogisticObjective::value_and_gradient(std::span<const double> params, std::span<double> grad) const {
  const std::size_t d = X_.n_cols;
  const std::span<const double> beta = params.first(d);
  const double b = params[d];
  std::copy(beta.begin(), beta.end(), grad.begin());
  grad[d] = 0.0;
  double data = 0.0;
  for (std::size_t i = 0; i < X_.n_rows; ++i) {
    const double s = sign_of(labels_[i]);
    const double margin = s * (X_.row_dot(i, beta) + b);
    data += weights_[i] * log1pexp_neg(margin);
    // d/dz log(1+exp(-s z)) = -s * sigmoid(-s z)
    const double coef = -C_ * weights_[i] * s * sigmoid(-margin);
    const auto cols = X_.row_cols(i);
    const auto vals = X_.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) grad[cols[k]] += coef * vals[k];
    grad[d] += coef;
  }
  return 0.5 * dot(beta, beta) + C_ * data;
}

std::vector<double> balanced_class_weights(std::span<const int> labels) {
  std::size_t counts[2] = {0, 0};
  for (const int y : labels) {
    if (y != kOriginalLabel && y != kTranslatedLabel) throw std::invalid_argument("labels must be 0 or 1");
    ++counts[y];
  }
  if (counts[0] == 0 || counts[1] == 0) throw std::invalid_argument("both classes must be present");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

std::vector<double> effective_weights(std::span<const int> labels, std::span<const double> sample_weights,
                                      ClassWeight class_weight) {
  if (labels.size() != sample_weights.size()) throw std::invalid_argument("labels and weights differ in length");
  std::vector<double> cw{1.0, 1.0};
  if (class_weight == ClassWeight::balanced) cw = balanced_class_weights(labels);
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = cw[static_cast<std::size_t>(labels[i])] * sample_weights[i];
  return w;
}

namespace {

struct LineSearchResult {
  bool ok = false;
  double step = 0.0;
  double f = 0.0;
};

// Strong-Wolfe line search along `dir` (Nocedal & Wright, Alg. 3.5/3.6) with
// safeguarded cubic interpolation in the zoom phase.
class WolfeSearch {
 public:
  WolfeSearch(const LogisticObjective& obj, std::span<const double> x0, double f0, double g0_dir,
              std::span<const double> dir, std::vector<double>& x, std::vector<double>& g)
      : obj_(obj), x0_(x0), f0_(f0), dg0_(g0_dir), dir_(dir), x_(x), g_(g) {}

  LineSearchResult run(double initial_step) {
    double prev_step = 0.0;
    double prev_f = f0_;
    double prev_dg = dg0_;
    double step = initial_step;
    for (int i = 0; i < kMaxEvals; ++i) {
      const double f = eval(step);
      const double dg = dot(g_, dir_);
      if (!std::isfinite(f) || !decreases(step, f, dg) || (i > 0 && f >= prev_f)) {
        return zoom(prev_step, prev_f, prev_dg, step, f, dg);
      }
      if (std::abs(dg) <= -kC2 * dg0_) return {true, step, f};
      if (dg >= 0.0) return zoom(step, f, dg, prev_step, prev_f, prev_dg);
      prev_step = step;
      prev_f = f;
      prev_dg = dg;
      step *= 2.0;
    }
    return {};
  }

 private:
  static constexpr double kC1 = 1e-4;
  static constexpr double kC2 = 0.9;
  static constexpr int kMaxEvals = 60;
  static constexpr double kEpsF = 1e-12;

  // Armijo, or near the optimum where f stops resolving the decrease, the
  // approximate Wolfe condition of Hager and Zhang.
  bool decreases(double step, double f, double dg) const {
    if (f <= f0_ + kC1 * step * dg0_) return true;
    return f <= f0_ + kEpsF * std::abs(f0_) && dg <= (2.0 * kC1 - 1.0) * dg0_;
  }

  double eval(double step) {
    for (std::size_t j = 0; j < x_.size(); ++j) x_[j] = x0_[j] + step * dir_[j];
    return obj_.value_and_gradient(x_, g_);
  }

  static double cubic_min(double a, double fa, double dga, double b, double fb, double dgb) {
    const double d1 = dga + dgb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - dga * dgb;
    if (disc < 0.0) return 0.5 * (a + b);
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (dgb + d2 - d1) / (dgb - dga + 2.0 * d2);
  }

  LineSearchResult zoom(double lo, double f_lo, double dg_lo, double hi, double f_hi, double dg_hi) {
    LineSearchResult best{false, lo, f_lo};
    for (int i = 0; i < kMaxEvals; ++i) {
      const double left = std::min(lo, hi);
      const double width = std::abs(hi - lo);
      double step = std::isfinite(f_hi) ? cubic_min(lo, f_lo, dg_lo, hi, f_hi, dg_hi) : 0.5 * (lo + hi);
      if (!std::isfinite(step) || step < left + 0.1 * width || step > left + 0.9 * width) step = 0.5 * (lo + hi);
      if (width < 1e-16 * std::max(1.0, std::abs(hi))) break;

      const double f = eval(step);
      const double dg = dot(g_, dir_);
      if (!std::isfinite(f) || !decreases(step, f, dg) || f >= f_lo) {
        hi = step;
        f_hi = f;
        dg_hi = dg;
      } else {
        if (std::abs(dg) <= -kC2 * dg0_) return {true, step, f};
        if (dg * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
          dg_hi = dg_lo;
        }
        lo = step;
        f_lo = f;
        dg_lo = dg;
        best = {false, lo, f_lo};
      }
    }
    // Accept the best sufficient-decrease point found if the curvature test never passed.
    if (best.step > 0.0 && best.f < f0_) {
      best.f = eval(best.step);
      best.ok = true;
    }
    return best;
  }

  const LogisticObjective& obj_;
  std::span<const double> x0_;
  double f0_;
  double dg0_;
  std::span<const double> dir_;
  std::vector<double>& x_;
  std::vector<double>& g_;
};

void check_inputs(const FeatureMatrix& X, std::span<const int> labels, std::span<const double> sample_weights) {
  if (labels.size() != X.n_rows || sample_weights.size() != X.n_rows) {
    throw std::invalid_argument(fmt::format("train: {} rows, {} labels, {} weights", X.n_rows, labels.size(),
                                            sample_weights.size()));
  }
  for (const double v : X.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("train: non-finite feature value");
  }
  for (const double w : sample_weights) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("train: sample weights must be finite and >= 0");
  }
}

}  // namespace

TrainedModel train(const FeatureMatrix& X, std::span<const int> labels, std::span<const double> sample_weights,
                   const TrainConfig& config) {
  config.validate();
  check_inputs(X, labels, sample_weights);
  const auto weights = effective_weights(labels, sample_weights, config.class_weight);
  if (config.class_weight == ClassWeight::none) balanced_class_weights(labels);  // single-class check

  const LogisticObjective objective(X, labels, weights, config.C);
  const std::size_t dim = objective.dimension();

  std::vector<double> x(dim);
  Rng rng(config.seed);
  for (double& v : x) v = rng.uniform(-0.01, 0.01);
  std::vector<double> g(dim);
  double f = objective.value_and_gradient(x, g);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> memory;
  std::vector<double> dir(dim), x_new(dim), g_new(dim), alpha(static_cast<std::size_t>(config.history));

  TrainedModel model;
  model.config = config;
  int iter = 0;
  bool restarted = false;
  while (inf_norm(g) >= config.tol && iter < config.max_iter) {
    // Two-loop recursion: dir = -H g.
    for (std::size_t j = 0; j < dim; ++j) dir[j] = -g[j];
    for (std::size_t m = memory.size(); m-- > 0;) {
      alpha[m] = memory[m].rho * dot(memory[m].s, dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] -= alpha[m] * memory[m].y[j];
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const double beta = memory[m].rho * dot(memory[m].y, dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] += memory[m].s[j] * (alpha[m] - beta);
    }

    double dg = dot(g, dir);
    if (!(dg < 0.0)) {
      memory.clear();
      for (std::size_t j = 0; j < dim; ++j) dir[j] = -g[j];
      dg = dot(g, dir);
    }
    const double initial = memory.empty() ? std::min(1.0, 1.0 / std::max(inf_norm(g), 1e-300)) : 1.0;

    WolfeSearch search(objective, x, f, dg, dir, x_new, g_new);
    const auto ls = search.run(initial);
    ++iter;
    if (!ls.ok) {
      if (memory.empty() || restarted) break;  // no descent possible at machine precision
      memory.clear();
      restarted = true;
      continue;
    }
    restarted = false;

    Pair p{std::vector<double>(dim), std::vector<double>(dim), 0.0};
    for (std::size_t j = 0; j < dim; ++j) {
      p.s[j] = x_new[j] - x[j];
      p.y[j] = g_new[j] - g[j];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      if (memory.size() == static_cast<std::size_t>(config.history)) memory.pop_front();
      memory.push_back(std::move(p));
    }
    x.swap(x_new);
    g.swap(g_new);
    f = ls.f;
  }

  model.coefficients.assign(x.begin(), x.end() - 1);
  model.intercept = x.back();
  model.final_objective = f;
  model.gradient_inf_norm = inf_norm(g);
  model.converged = model.gradient_inf_norm < config.tol;
  model.iterations = iter;
  if (!std::isfinite(f)) throw std::runtime_error("train: objective diverged");
  return model;
}

double predict_proba(const TrainedModel& model, const SparseRow& x) {
  if (!x.cols.empty() && x.cols.back() >= model.n_features()) {
    throw std::invalid_argument(
        fmt::format("predict_proba: column {} outside a {}-feature model", x.cols.back(), model.n_features()));
  }
  return sigmoid(x.dot(model.coefficients) + model.intercept);
}

double predict_proba(const TrainedModel& model, const FeatureMatrix& X, std::size_t row) {
  if (X.n_cols != model.n_features()) {
    throw std::invalid_argument(
        fmt::format("predict_proba: {}-column matrix vs {}-feature model", X.n_cols, model.n_features()));
  }
  return sigmoid(X.row_dot(row, model.coefficients) + model.intercept);
}

double fluency(double p_translated) {
  if (!(p_translated >= 0.0 && p_translated <= 1.0)) {
    throw std::domain_error(fmt::format("fluency: probability {} outside [0,1]", p_translated));
  }
  return 1.0 - p_translated;
}

namespace {

constexpr std::string_view kModelMagic = "ffmodel";
constexpr int kModelVersion = 1;

double parse_hex(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("load_model: bad number '" + s + "'");
  return v;
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model, std::string_view vocab_hash) {
  const auto& c = model.config;
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "vocab_hash " << vocab_hash << '\n';
  out << fmt::format("config C={:a} max_iter={} tol={:a} class_weight={} seed={} history={}\n", c.C, c.max_iter,
                     c.tol, to_string(c.class_weight), c.seed, c.history);
  out << fmt::format("fit converged={} iterations={} objective={:a} gradient_inf_norm={:a}\n",
                     model.converged ? 1 : 0, model.iterations, model.final_objective, model.gradient_inf_norm);
  out << fmt::format("intercept {:a}\n", model.intercept);
  out << "n_features " << model.n_features() << '\n';
  for (const double b : model.coefficients) out << fmt::format("{:a}\n", b);
}

LoadedModel load_model(std::istream& in) {
  auto fail = [](const std::string& why) { return std::runtime_error("load_model: " + why); };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kModelMagic) throw fail("not a model file");
  if (version != kModelVersion) throw fail("unsupported version " + std::to_string(version));

  LoadedModel loaded;
  auto& m = loaded.model;
  std::string key;
  in >> key >> loaded.vocab_hash;
  if (key != "vocab_hash") throw fail("expected vocab_hash");

  auto read_kv = [&](std::string_view expect_key) {
    std::string tok;
    in >> tok;
    const auto eq = tok.find('=');
    if (eq == std::string::npos || tok.substr(0, eq) != expect_key) {
      throw fail("expected " + std::string(expect_key));
    }
    return tok.substr(eq + 1);
  };
  in >> key;
  if (key != "config") throw fail("expected config");
  m.config.C = parse_hex(read_kv("C"));
  m.config.max_iter = std::stoi(read_kv("max_iter"));
  m.config.tol = parse_hex(read_kv("tol"));
  const auto cw = parse_class_weight(read_kv("class_weight"));
  if (!cw) throw fail("bad class_weight");
  m.config.class_weight = *cw;
  m.config.seed = std::stoull(read_kv("seed"));
  m.config.history = std::stoi(read_kv("history"));

  in >> key;
  if (key != "fit") throw fail("expected fit");
  m.converged = read_kv("converged") == "1";
  m.iterations = std::stoi(read_kv("iterations"));
  m.final_objective = parse_hex(read_kv("objective"));
  m.gradient_inf_norm = parse_hex(read_kv("gradient_inf_norm"));

  std::string value;
  in >> key >> value;
  if (key != "intercept") throw fail("expected intercept");
  m.intercept = parse_hex(value);
  std::size_t n = 0;
  in >> key >> n;
  if (key != "n_features") throw fail("expected n_features");
  m.coefficients.resize(n);
  for (auto& b : m.coefficients) {
    if (!(in >> value)) throw fail("truncated coefficients");
    b = parse_hex(value);
  }
  return loaded;
}

}  // namespace ff
