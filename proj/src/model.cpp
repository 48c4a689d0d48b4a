#include "fedlogit/model.hpp"

#include <cmath>
#include <string>

namespace fedlogit {

bool ModelWeights::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

void SolverConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be a positive finite number, got " +
                      std::to_string(learning_rate));
  if (local_iterations < 1) throw ConfigError("local_iterations must be >= 1");
  if (global_iterations < 1) throw ConfigError("global_iterations must be >= 1");
  if (!(proximal_eta > 0.0) || !std::isfinite(proximal_eta))
    throw ConfigError("eta must be a positive finite number, got " +
                      std::to_string(proximal_eta));
  if (!(coupling_alpha >= 0.0) || !(coupling_alpha <= 1.0))
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(coupling_alpha));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

void check_dims(const ModelWeights& w, const SiteDataset& data) {
  if (w.values.size() != data.dimension() + 1)
    throw ShapeError("weights have " + std::to_string(w.values.size()) +
                     " entries, expected " + std::to_string(data.dimension() + 1) +
                     " for dimension " + std::to_string(data.dimension()));
}

// Per-row negative log-likelihood from the margin, branched on the label so
// no 0 * inf product can appear even for infinite margins.
inline double row_loss(double margin, int label) {
  if (margin >= 0.0) {
    const double base = std::log1p(std::exp(-margin));  // = -log(sigmoid)
    return label == 1 ? base : base + margin;
  }
  const double base = std::log1p(std::exp(margin));  // = -log(1 - sigmoid)
  return label == 1 ? base - margin : base;
}

}  // namespace

double dot_with_intercept(const ModelWeights& w, const std::vector<double>& features) {
  double z = w.values.back();
  for (std::size_t j = 0; j < features.size(); ++j) z += w.values[j] * features[j];
  return z;
}

LossGradient logistic_loss_and_gradient(const ModelWeights& w, const SiteDataset& data) {
  check_dims(w, data);
  const std::size_t d = data.dimension();
  LossGradient out;
  out.gradient.assign(d + 1, 0.0);
  for (const Participant& p : data.participants()) {
    const double margin = dot_with_intercept(w, p.features);
    out.loss += row_loss(margin, p.label);
    const double residual = sigmoid(margin) - static_cast<double>(p.label);
    for (std::size_t j = 0; j < d; ++j) out.gradient[j] += residual * p.features[j];
    out.gradient[d] += residual;
  }
  const double n = static_cast<double>(data.size());
  out.loss /= n;
  for (double& g : out.gradient) g /= n;
  return out;
}

double logistic_loss(const ModelWeights& w, const SiteDataset& data) {
  check_dims(w, data);
  double loss = 0.0;
  for (const Participant& p : data.participants())
    loss += row_loss(dot_with_intercept(w, p.features), p.label);
  return loss / static_cast<double>(data.size());
}

std::vector<double> logistic_gradient(const ModelWeights& w, const SiteDataset& data) {
  return logistic_loss_and_gradient(w, data).gradient;
}

ModelWeights prox_local_update(const ModelWeights& anchor, const SiteDataset& data,
                               const SolverConfig& config, double* entry_loss) {
  config.validate();
  check_dims(anchor, data);
  ModelWeights v = anchor;
  for (std::size_t it = 1; it <= config.local_iterations; ++it) {
    std::vector<double> g;
    if (it == 1) {
      LossGradient fused = logistic_loss_and_gradient(v, data);
      if (entry_loss != nullptr) *entry_loss = fused.loss;
      g = std::move(fused.gradient);
    } else {
      g = logistic_gradient(v, data);
    }
    const double prox_scale = 2.0 / config.proximal_eta;
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] += prox_scale * (v.values[j] - anchor.values[j]);
      v.values[j] -= config.learning_rate * g[j];
    }
    if (!v.all_finite())
      throw DivergenceError("non-finite weights at local iteration " +
                            std::to_string(it) + " on site '" + data.site_id() + "'");
  }
  return v;
}

std::vector<double> predict_scores(const ModelWeights& w, const SiteDataset& data) {
  check_dims(w, data);
  std::vector<double> scores;
  scores.reserve(data.size());
  for (const Participant& p : data.participants())
    scores.push_back(sigmoid(dot_with_intercept(w, p.features)));
  return scores;
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ShapeError("l2_distance: size mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace fedlogit
