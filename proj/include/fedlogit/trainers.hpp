// The four training regimes: centralized pooling, isolated per-site models,
// federated averaging over a client-server star, and federated gradient
// descent with quadratic neighbor coupling over a peer-to-peer graph.
//
// All trainers are deterministic: weights start at zero, no randomness is
// consumed, and every reduction over sites runs in ascending site-id order.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedlogit/cohort.hpp"
#include "fedlogit/model.hpp"
#include "fedlogit/normalize.hpp"
#include "fedlogit/topology.hpp"

namespace fedlogit {

enum class TrainerKind { Centralized, SiteSpecific, FedAvg, FedGd };

const char* trainer_kind_name(TrainerKind kind);
// Parses "centralized" / "site-specific" / "fedavg" / "fedgd". Throws ConfigError.
TrainerKind parse_trainer_kind(const std::string& name);

// Invoked every 100 rounds (and on the final round) with (round, total).
using ProgressFn = std::function<void(std::size_t round, std::size_t total)>;

// Everything a training regime produces. `weights` and `stats` share keys:
// a single "global" entry for Centralized/FedAvg, one entry per site for
// SiteSpecific/FedGd. `stats` holds the normalization statistics a deployment
// would apply to unseen data scored by the corresponding weights.
struct TrainingRun {
  TrainerKind kind = TrainerKind::Centralized;
  NormalizationMode normalization = NormalizationMode::PerSite;
  std::map<std::string, ModelWeights> weights;
  std::map<std::string, FeatureStats> stats;
  // loss_trace[t] = mean over sites of the data loss after round t+1.
  std::vector<double> loss_trace;
  // consensus_trace[t]: FedAvg = max_k ||local_k - average|| after round t+1;
  // FedGd = max over graph edges ||w_a - w_b|| after round t+1.
  // Empty for Centralized and SiteSpecific.
  std::vector<double> consensus_trace;
  std::vector<std::string> warnings;
  std::size_t rounds = 0;
};

// Pools all sites and runs plain gradient descent under exact pooled
// (centralized-global) normalization. Requires both classes in the cohort.
TrainingRun train_centralized(const Cohort& cohort, const SolverConfig& config,
                              const ProgressFn& progress = {});

// Trains one independent model per site under per-site normalization.
// Sites whose minority class has <= 1 sample are trained anyway and flagged
// with a warning (their gradients remain well-defined).
TrainingRun train_site_specific(const Cohort& cohort, const SolverConfig& config,
                                const ProgressFn& progress = {});

// Federated averaging: per round, every client runs `local_iterations`
// proximally-regularized gradient steps from the broadcast weights, then the
// server replaces the model with the unweighted client average.
// Requires a client-server graph whose clients are exactly the cohort sites.
// Normalization defaults to the federated-simple aggregate; the override may
// select per-site, federated-simple, or federated-decomposed. The exported
// "global" statistics are always a federated aggregate the server could
// compute (under a per-site override the locally used statistics differ).
TrainingRun train_fedavg(const Cohort& cohort, const EmpiricalGraph& graph,
                         const SolverConfig& config,
                         std::optional<NormalizationMode> normalization = std::nullopt,
                         const ProgressFn& progress = {});

// Federated gradient descent with quadratic coupling: synchronous rounds in
// which every site applies fedgd_local_step against its neighbors' previous
// weights. Requires a peer-to-peer graph whose nodes are exactly the cohort
// sites. Normalization defaults to neighborhood statistics when alpha > 0
// and per-site statistics when alpha == 0; the override may select per-site,
// neighborhood, federated-simple, or federated-decomposed. Isolated sites
// fall back to their own statistics and are flagged when alpha > 0.
TrainingRun train_fedgd(const Cohort& cohort, const EmpiricalGraph& graph,
                        const SolverConfig& config,
                        std::optional<NormalizationMode> normalization = std::nullopt,
                        const ProgressFn& progress = {});

// One site's synchronous update:
//   w' = w - lr * (grad L_data(w) + 2*alpha * sum_nb weight_nb * (w - w_nb)).
// `coupled` holds (edge weight, neighbor weights) pairs. Exposed so the
// coupling dynamics can be verified in isolation; train_fedgd applies exactly
// this function to every site each round. `entry_loss`, when non-null,
// receives L_data(w) (the pre-step data loss).
ModelWeights fedgd_local_step(
    const ModelWeights& current, const SiteDataset& data,
    const std::vector<std::pair<double, const ModelWeights*>>& coupled,
    double alpha, double learning_rate, double* entry_loss = nullptr);

}  // namespace fedlogit
