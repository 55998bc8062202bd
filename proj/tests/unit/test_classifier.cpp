#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ff/classifier.hpp"
#include "ff/rng.hpp"
#include "oracles.hpp"

using namespace ff;

namespace {

FeatureMatrix dense_to_sparse(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix X;
  X.n_cols = rows.empty() ? 0 : rows[0].size();
  X.weighting = Weighting::count;
  for (const auto& r : rows) {
    SparseRow s;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (r[c] != 0.0) {
        s.cols.push_back(static_cast<std::uint32_t>(c));
        s.values.push_back(r[c]);
      }
    }
    X.append(s);
  }
  return X;
}

struct Problem {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<double> weights;
};

// Overlapping Gaussian classes so the optimum is finite.
Problem random_problem(std::uint64_t seed, std::size_t n, std::size_t d) {
  Rng rng(seed);
  Problem p;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng.uniform_index(2));
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = rng.normal() + (y == 1 && j < 3 ? 0.5 : 0.0);
      if (rng.uniform01() < 0.3) row[j] = 0.0;
    }
    p.rows.push_back(row);
    p.labels.push_back(y);
    p.weights.push_back(rng.uniform01() < 0.5 ? 1.0 : 1.0 / static_cast<double>(2 + rng.uniform_index(3)));
  }
  return p;
}

TrainConfig tight_config(double C, ClassWeight cw = ClassWeight::none) {
  TrainConfig cfg;
  cfg.C = C;
  cfg.class_weight = cw;
  cfg.tol = 1e-9;
  cfg.max_iter = 5000;
  return cfg;
}

}  // namespace

TEST_CASE("sigmoid and fluency") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::abs(sigmoid(std::log(3.0)) - 0.75) < 1e-15);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
  CHECK(fluency(0.25) == 0.75);
  CHECK(fluency(0.0) == 1.0);
  CHECK(fluency(1.0) == 0.0);
  CHECK_THROWS_AS(fluency(1.5), std::domain_error);
  CHECK_THROWS_AS(fluency(-0.1), std::domain_error);
  CHECK_THROWS_AS(fluency(std::nan("")), std::domain_error);
}

TEST_CASE("predict_proba reads the fitted parameters") {
  TrainedModel m;
  m.coefficients = {std::log(3.0), 0.0};
  m.intercept = 0.0;
  SparseRow x{{0}, {1.0}};
  CHECK(std::abs(predict_proba(m, x) - 0.75) < 1e-15);
  SparseRow bad{{5}, {1.0}};
  CHECK_THROWS_AS(predict_proba(m, bad), std::invalid_argument);
}

TEST_CASE("balanced class weights") {
  const std::vector<int> labels = {0, 0, 0, 1};
  const auto w = balanced_class_weights(labels);
  CHECK(w[0] == doctest::Approx(4.0 / 6.0));
  CHECK(w[1] == doctest::Approx(2.0));
  const std::vector<double> sw = {1, 1, 1, 0.5};
  const auto eff = effective_weights(labels, sw, ClassWeight::balanced);
  CHECK(eff[3] == doctest::Approx(1.0));
  CHECK(effective_weights(labels, sw, ClassWeight::none) == sw);
}

TEST_CASE("separable toy data is classified correctly") {
  const std::vector<std::vector<double>> rows = {{1, 0}, {0.9, 0.1}, {0, 1}, {0.1, 0.8}};
  const std::vector<int> labels = {1, 1, 0, 0};
  const std::vector<double> w(4, 1.0);
  const auto X = dense_to_sparse(rows);
  const auto m = train(X, labels, w, TrainConfig{});
  CHECK(m.converged);
  for (std::size_t i = 0; i < 4; ++i) CHECK((predict_proba(m, X, i) > 0.5) == (labels[i] == 1));
}

TEST_CASE("training rejects bad input") {
  const auto X = dense_to_sparse({{1.0}, {2.0}});
  const std::vector<double> w(2, 1.0);
  CHECK_THROWS_AS(train(X, std::vector<int>{1, 1}, w, TrainConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(train(X, std::vector<int>{0}, w, TrainConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(train(X, std::vector<int>{0, 1}, std::vector<double>{1.0, std::nan("")}, TrainConfig{}),
                  std::invalid_argument);
  TrainConfig cfg;
  cfg.C = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("objective gradient matches central differences") {
  const auto p = random_problem(3, 60, 8);
  const auto X = dense_to_sparse(p.rows);
  const LogisticObjective f(X, p.labels, p.weights, 10.0);
  Rng rng(5);
  std::vector<double> params(f.dimension());
  for (double& v : params) v = rng.uniform(-0.5, 0.5);
  std::vector<double> grad(f.dimension());
  const double value = f.value_and_gradient(params, grad);
  CHECK(std::abs(value - oracle::dense_objective({p.rows, p.labels, p.weights, 10.0}, params)) < 1e-9 * value);
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double h = 1e-5;
    auto plus = params, minus = params;
    plus[j] += h;
    minus[j] -= h;
    const double fd = (f.value(plus) - f.value(minus)) / (2 * h);
    CHECK(std::abs(fd - grad[j]) <= 1e-6 * std::max(1.0, std::abs(grad[j])));
  }
}

TEST_CASE("L-BFGS reaches the Newton optimum") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = random_problem(seed, 200, 20);
    const auto X = dense_to_sparse(p.rows);
    const auto m = train(X, p.labels, p.weights, tight_config(10.0));
    const auto ref = oracle::newton_minimize({p.rows, p.labels, p.weights, 10.0});
    const double f_ref = oracle::dense_objective({p.rows, p.labels, p.weights, 10.0}, ref);
    CHECK(m.converged);
    CHECK(std::abs(m.final_objective - f_ref) <= 1e-6 * std::abs(f_ref));
    CHECK(m.gradient_inf_norm < 1e-5);
  }
}

TEST_CASE("integer weight equals row duplication") {
  const auto p = random_problem(8, 80, 6);
  auto weights = std::vector<double>(p.rows.size(), 1.0);
  auto dup_rows = p.rows;
  auto dup_labels = p.labels;
  weights[0] = 3.0;
  weights[1] = 2.0;
  dup_rows.push_back(p.rows[0]);
  dup_rows.push_back(p.rows[0]);
  dup_rows.push_back(p.rows[1]);
  dup_labels.push_back(p.labels[0]);
  dup_labels.push_back(p.labels[0]);
  dup_labels.push_back(p.labels[1]);
  const std::vector<double> ones(dup_rows.size(), 1.0);

  const auto a = train(dense_to_sparse(p.rows), p.labels, weights, tight_config(5.0));
  const auto b = train(dense_to_sparse(dup_rows), dup_labels, ones, tight_config(5.0));
  for (std::size_t j = 0; j < a.coefficients.size(); ++j) CHECK(std::abs(a.coefficients[j] - b.coefficients[j]) < 1e-8);
  CHECK(std::abs(a.intercept - b.intercept) < 1e-8);
}

TEST_CASE("scaling every weight by k is the same as scaling C by k") {
  const auto p = random_problem(12, 100, 5);
  auto scaled = p.weights;
  for (double& w : scaled) w *= 4.0;
  const auto X = dense_to_sparse(p.rows);
  const auto a = train(X, p.labels, scaled, tight_config(2.0));
  const auto b = train(X, p.labels, p.weights, tight_config(8.0));
  for (std::size_t j = 0; j < a.coefficients.size(); ++j) CHECK(std::abs(a.coefficients[j] - b.coefficients[j]) < 1e-7);
}

TEST_CASE("training is deterministic and the model round-trips bit-exactly") {
  const auto p = random_problem(21, 120, 10);
  const auto X = dense_to_sparse(p.rows);
  TrainConfig cfg;
  cfg.seed = 77;
  const auto a = train(X, p.labels, p.weights, cfg);
  const auto b = train(X, p.labels, p.weights, cfg);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.intercept == b.intercept);

  std::stringstream buf;
  save_model(buf, a, "abc123");
  const auto loaded = load_model(buf);
  CHECK(loaded.vocab_hash == "abc123");
  CHECK(loaded.model.coefficients == a.coefficients);
  CHECK(loaded.model.intercept == a.intercept);
  for (std::size_t i = 0; i < X.n_rows; ++i) CHECK(predict_proba(loaded.model, X, i) == predict_proba(a, X, i));

  std::istringstream junk("not a model");
  CHECK_THROWS(load_model(junk));
}
