// Shared test helpers: independently implemented reference oracles (naive
// formulas, trapezoidal ROC, plain finite differences, a minimal gradient
// descent loop) plus small dataset builders. Nothing here calls the library's
// numeric kernels, so agreement between the two is meaningful evidence.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fedlogit/cohort.hpp"
#include "fedlogit/model.hpp"

namespace testsupport {

// ---- dataset builders -----------------------------------------------------

inline fedlogit::Participant row(const std::string& id, std::vector<double> x, int y) {
  return fedlogit::Participant{id, std::move(x), y};
}

inline fedlogit::SiteDataset make_site(const std::string& site_id,
                                       const std::vector<std::vector<double>>& xs,
                                       const std::vector<int>& ys) {
  std::vector<fedlogit::Participant> rows;
  for (std::size_t i = 0; i < xs.size(); ++i)
    rows.push_back(row(site_id + "-p" + std::to_string(i), xs[i], ys[i]));
  return fedlogit::SiteDataset(site_id, std::move(rows));
}

// Random site: features N(shift, 1) with a one-direction class offset; the
// layout mirrors the generator's model but is built independently here.
inline fedlogit::SiteDataset random_site(const std::string& site_id, std::size_t n,
                                         std::size_t d, double positive_rate,
                                         std::uint64_t seed, double separation = 2.0,
                                         double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<fedlogit::Participant> rows;
  const std::size_t n_pos =
      static_cast<std::size_t>(std::llround(positive_rate * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i < n_pos ? 1 : 0;
    std::vector<double> x(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double offset = j == 0 ? (y == 1 ? separation / 2 : -separation / 2) : 0.0;
      x[j] = shift + offset + normal(rng);
    }
    rows.push_back(row(site_id + "-p" + std::to_string(i), std::move(x), y));
  }
  return fedlogit::SiteDataset(site_id, std::move(rows));
}

// ---- statistics oracle ----------------------------------------------------

struct OracleStats {
  std::vector<double> mean;
  std::vector<double> variance;  // population (1/n)
};

inline OracleStats oracle_stats(const std::vector<std::vector<double>>& rows) {
  const std::size_t d = rows.front().size();
  OracleStats s;
  s.mean.assign(d, 0.0);
  s.variance.assign(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j] / static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = r[j] - s.mean[j];
      s.variance[j] += dev * dev / static_cast<double>(rows.size());
    }
  return s;
}

inline OracleStats oracle_stats(const fedlogit::SiteDataset& data) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : data.participants()) rows.push_back(p.features);
  return oracle_stats(rows);
}

// ---- logistic oracle (naive formulas) --------------------------------------

inline double oracle_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double oracle_margin(const std::vector<double>& w, const std::vector<double>& x) {
  double z = w.back();
  for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * x[j];
  return z;
}

inline double oracle_row_loss(const std::vector<double>& w,
                              const std::vector<double>& x, int y) {
  const double h = oracle_sigmoid(oracle_margin(w, x));
  return y == 1 ? -std::log(h) : -std::log(1.0 - h);
}

inline double oracle_loss(const std::vector<double>& w,
                          const fedlogit::SiteDataset& data) {
  double total = 0.0;
  for (const auto& p : data.participants())
    total += oracle_row_loss(w, p.features, p.label);
  return total / static_cast<double>(data.size());
}

inline std::vector<double> oracle_gradient(const std::vector<double>& w,
                                           const fedlogit::SiteDataset& data) {
  std::vector<double> g(w.size(), 0.0);
  for (const auto& p : data.participants()) {
    const double r = oracle_sigmoid(oracle_margin(w, p.features)) -
                     static_cast<double>(p.label);
    for (std::size_t j = 0; j < p.features.size(); ++j) g[j] += r * p.features[j];
    g.back() += r;
  }
  for (double& v : g) v /= static_cast<double>(data.size());
  return g;
}

// Minimal reference optimizer: plain full-batch gradient descent from zero.
inline std::vector<double> oracle_gd(const fedlogit::SiteDataset& data, double lr,
                                     std::size_t iterations) {
  std::vector<double> w(data.dimension() + 1, 0.0);
  for (std::size_t t = 0; t < iterations; ++t) {
    const std::vector<double> g = oracle_gradient(w, data);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
  }
  return w;
}

inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> w, double h = 1e-6) {
  std::vector<double> g(w.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double orig = w[j];
    w[j] = orig + h;
    const double up = f(w);
    w[j] = orig - h;
    const double down = f(w);
    w[j] = orig;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

// ---- adapters for the library's weight type ---------------------------------

inline double oracle_loss(const fedlogit::ModelWeights& w,
                          const fedlogit::SiteDataset& data) {
  return oracle_loss(w.values, data);
}

inline fedlogit::ModelWeights oracle_gradient(const fedlogit::ModelWeights& w,
                                              const fedlogit::SiteDataset& data) {
  return fedlogit::ModelWeights{oracle_gradient(w.values, data)};
}

inline fedlogit::ModelWeights oracle_gd(const fedlogit::ModelWeights& start,
                                        const fedlogit::SiteDataset& data, double lr,
                                        std::size_t iterations) {
  fedlogit::ModelWeights w = start;
  for (std::size_t t = 0; t < iterations; ++t) {
    const std::vector<double> g = oracle_gradient(w.values, data);
    for (std::size_t j = 0; j < w.values.size(); ++j) w.values[j] -= lr * g[j];
  }
  return w;
}

inline std::vector<double> finite_difference_gradient(
    const fedlogit::ModelWeights& w, const fedlogit::SiteDataset& data,
    double h = 1e-6) {
  return finite_difference_gradient(
      [&data](const std::vector<double>& v) { return oracle_loss(v, data); },
      w.values, h);
}

// ---- ROC oracle (trapezoidal integration) ----------------------------------

inline double oracle_trapezoid_auc(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y == 1);
  const std::size_t neg = labels.size() - pos;
  std::set<double> threshold_set(scores.begin(), scores.end());
  std::vector<double> thresholds(threshold_set.rbegin(), threshold_set.rend());
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  for (double threshold : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= threshold) {
        if (labels[i] == 1) {
          ++tp;
        } else {
          ++fp;
        }
      }
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  auc += (1.0 - prev_fpr) * (1.0 + prev_tpr) / 2.0;
  return auc;
}

// ---- misc -------------------------------------------------------------------

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testsupport
