// Logistic-regression primitives shared by every trainer: stable sigmoid,
// mean negative log-likelihood, its gradient, scoring, and the
// proximally-regularized local update used by federated averaging.
#pragma once

#include <cstddef>
#include <vector>

#include "fedlogit/cohort.hpp"
#include "fedlogit/errors.hpp"

namespace fedlogit {

// Weight vector of length dimension + 1; the last entry is the intercept.
// The intercept coordinate is never normalized.
struct ModelWeights {
  std::vector<double> values;

  static ModelWeights zeros(std::size_t dimension) {
    return ModelWeights{std::vector<double>(dimension + 1, 0.0)};
  }
  std::size_t dimension() const { return values.empty() ? 0 : values.size() - 1; }
  bool all_finite() const;
};

// Optimizer settings shared by all trainers.
struct SolverConfig {
  double learning_rate = 0.05;
  std::size_t local_iterations = 1;    // local steps per round (client-server)
  std::size_t global_iterations = 3000;
  double proximal_eta = 0.1;           // client-drift penalty strength (eta)
  double coupling_alpha = 1.0;         // neighbor-coupling strength (alpha), in [0, 1]

  // Throws ConfigError naming the offending field and its valid range.
  void validate() const;
};

// 1 / (1 + exp(-z)), computed without overflow for any finite z.
double sigmoid(double z);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // length dimension + 1, intercept last
};

// Mean logistic negative log-likelihood over the dataset. Evaluates the
// log-sum via log1p on the side that cannot overflow, so no log(0) occurs
// for |w.x| up to ~700.
double logistic_loss(const ModelWeights& w, const SiteDataset& data);

// Mean gradient (1/n) sum_i (sigmoid(w.x_i) - y_i) * [x_i, 1].
std::vector<double> logistic_gradient(const ModelWeights& w, const SiteDataset& data);

// Loss and gradient from one pass over the data (what the trainers use).
LossGradient logistic_loss_and_gradient(const ModelWeights& w, const SiteDataset& data);

// Runs `local_iterations` gradient steps on
//   L_site(v) + (1/eta) * ||v - anchor||^2
// starting from v = anchor. The penalty gradient is (2/eta)(v - anchor), so
// it vanishes at the start point and only constrains multi-step local drift.
// `entry_loss`, when non-null, receives L_site(anchor) (the pre-step data
// loss, free from the first gradient pass).
// Throws DivergenceError naming the local iteration if weights go non-finite.
ModelWeights prox_local_update(const ModelWeights& anchor, const SiteDataset& data,
                               const SolverConfig& config,
                               double* entry_loss = nullptr);

// sigmoid(w.x_i) for every row, in row order.
std::vector<double> predict_scores(const ModelWeights& w, const SiteDataset& data);

double dot_with_intercept(const ModelWeights& w, const std::vector<double>& features);

double l2_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fedlogit
