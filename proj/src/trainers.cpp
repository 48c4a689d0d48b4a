#include "fedlogit/trainers.hpp"

#include <algorithm>
#include <cmath>

namespace fedlogit {
namespace {

constexpr std::size_t kProgressStride = 100;

void report_progress(const ProgressFn& progress, std::size_t round, std::size_t total) {
  if (!progress) return;
  if (round % kProgressStride == 0 || round == total) progress(round, total);
}

void require_both_classes(const Cohort& cohort, const char* trainer) {
  if (cohort.total_positives() == 0 || cohort.total_positives() == cohort.total_size())
    throw TrainingError(std::string(trainer) +
                        " requires both label classes in the cohort");
}

std::vector<const SiteDataset*> sites_ascending(const Cohort& cohort) {
  std::vector<const SiteDataset*> sites;
  sites.reserve(cohort.site_count());
  for (const SiteDataset& s : cohort.sites()) sites.push_back(&s);
  std::sort(sites.begin(), sites.end(), [](const SiteDataset* a, const SiteDataset* b) {
    return a->site_id() < b->site_id();
  });
  return sites;
}

void require_matching_nodes(const std::vector<std::string>& graph_side,
                            const Cohort& cohort, const char* trainer) {
  std::vector<std::string> cohort_side = cohort.site_ids();
  std::sort(cohort_side.begin(), cohort_side.end());
  if (graph_side != cohort_side)
    throw TrainingError(std::string(trainer) +
                        ": graph nodes do not match the cohort's sites");
}

void check_round_finite(const ModelWeights& w, std::size_t round,
                        const std::string& where) {
  if (!w.all_finite())
    throw DivergenceError("non-finite weights at round " + std::to_string(round) +
                          " (" + where + ")");
}

}  // namespace

const char* trainer_kind_name(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::Centralized: return "centralized";
    case TrainerKind::SiteSpecific: return "site-specific";
    case TrainerKind::FedAvg: return "fedavg";
    case TrainerKind::FedGd: return "fedgd";
  }
  return "unknown";
}

TrainerKind parse_trainer_kind(const std::string& name) {
  if (name == "centralized") return TrainerKind::Centralized;
  if (name == "site-specific") return TrainerKind::SiteSpecific;
  if (name == "fedavg") return TrainerKind::FedAvg;
  if (name == "fedgd") return TrainerKind::FedGd;
  throw ConfigError("unknown trainer '" + name +
                    "'; expected centralized, site-specific, fedavg, or fedgd");
}

TrainingRun train_centralized(const Cohort& cohort, const SolverConfig& config,
                              const ProgressFn& progress) {
  config.validate();
  require_both_classes(cohort, "centralized training");

  TrainingRun run;
  run.kind = TrainerKind::Centralized;
  run.normalization = NormalizationMode::CentralizedGlobal;
  run.rounds = config.global_iterations;

  FeatureStats stats = pooled_stats(cohort);
  const SiteDataset data = apply_zscore(cohort.pooled("global"), stats);

  const std::size_t T = config.global_iterations;
  ModelWeights w = ModelWeights::zeros(cohort.dimension());
  run.loss_trace.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const LossGradient fused = logistic_loss_and_gradient(w, data);
    if (t > 0) run.loss_trace[t - 1] = fused.loss;  // loss after round t
    for (std::size_t j = 0; j < w.values.size(); ++j)
      w.values[j] -= config.learning_rate * fused.gradient[j];
    check_round_finite(w, t + 1, "centralized");
    report_progress(progress, t + 1, T);
  }
  run.loss_trace[T - 1] = logistic_loss(w, data);

  run.weights.emplace("global", std::move(w));
  run.stats.emplace("global", std::move(stats));
  return run;
}

TrainingRun train_site_specific(const Cohort& cohort, const SolverConfig& config,
                                const ProgressFn& progress) {
  config.validate();
  require_both_classes(cohort, "site-specific training");

  TrainingRun run;
  run.kind = TrainerKind::SiteSpecific;
  run.normalization = NormalizationMode::PerSite;
  run.rounds = config.global_iterations;

  const std::vector<const SiteDataset*> sites = sites_ascending(cohort);
  const std::size_t T = config.global_iterations;
  run.loss_trace.assign(T, 0.0);

  for (const SiteDataset* raw : sites) {
    const std::size_t minority = std::min(raw->positives(), raw->size() - raw->positives());
    if (minority <= 1)
      run.warnings.push_back("site '" + raw->site_id() + "': dominant single class (" +
                             std::to_string(raw->positives()) + " of " +
                             std::to_string(raw->size()) +
                             " positive); model may be degenerate");
    FeatureStats stats = site_stats(*raw);
    const SiteDataset data = apply_zscore(*raw, stats);
    ModelWeights w = ModelWeights::zeros(cohort.dimension());
    for (std::size_t t = 0; t < T; ++t) {
      const LossGradient fused = logistic_loss_and_gradient(w, data);
      if (t > 0) run.loss_trace[t - 1] += fused.loss;
      for (std::size_t j = 0; j < w.values.size(); ++j)
        w.values[j] -= config.learning_rate * fused.gradient[j];
      check_round_finite(w, t + 1, "site '" + raw->site_id() + "'");
    }
    run.loss_trace[T - 1] += logistic_loss(w, data);
    run.weights.emplace(raw->site_id(), std::move(w));
    run.stats.emplace(raw->site_id(), std::move(stats));
    report_progress(progress, T, T);
  }
  const double k = static_cast<double>(sites.size());
  for (double& v : run.loss_trace) v /= k;
  return run;
}

TrainingRun train_fedavg(const Cohort& cohort, const EmpiricalGraph& graph,
                         const SolverConfig& config,
                         std::optional<NormalizationMode> normalization,
                         const ProgressFn& progress) {
  config.validate();
  require_both_classes(cohort, "federated averaging");
  if (graph.architecture() != GraphArchitecture::ClientServer)
    throw TrainingError("federated averaging requires a client-server graph");
  std::vector<std::string> clients;
  for (const std::string& n : graph.nodes())
    if (n != graph.server_id()) clients.push_back(n);
  require_matching_nodes(clients, cohort, "federated averaging");

  const NormalizationMode mode =
      normalization.value_or(NormalizationMode::FederatedSimple);
  if (mode != NormalizationMode::PerSite &&
      mode != NormalizationMode::FederatedSimple &&
      mode != NormalizationMode::FederatedDecomposed)
    throw ConfigError(std::string("federated averaging supports per-site, "
                                  "federated-simple, or federated-decomposed "
                                  "normalization, got ") +
                      normalization_mode_name(mode));

  TrainingRun run;
  run.kind = TrainerKind::FedAvg;
  run.normalization = mode;
  run.rounds = config.global_iterations;

  const std::vector<const SiteDataset*> sites = sites_ascending(cohort);
  std::vector<FeatureStats> per_site;
  per_site.reserve(sites.size());
  for (const SiteDataset* s : sites) per_site.push_back(site_stats(*s));

  std::vector<SiteDataset> z_data;
  z_data.reserve(sites.size());
  if (mode == NormalizationMode::PerSite) {
    for (std::size_t k = 0; k < sites.size(); ++k)
      z_data.push_back(apply_zscore(*sites[k], per_site[k]));
  } else {
    const FeatureStats agg = federated_stats(per_site, mode);
    for (const SiteDataset* s : sites) z_data.push_back(apply_zscore(*s, agg));
  }
  // The server-side aggregate a deployment would ship with the global model.
  FeatureStats exported =
      federated_stats(per_site, mode == NormalizationMode::FederatedDecomposed
                                    ? NormalizationMode::FederatedDecomposed
                                    : NormalizationMode::FederatedSimple);

  const std::size_t T = config.global_iterations;
  const std::size_t K = sites.size();
  ModelWeights w = ModelWeights::zeros(cohort.dimension());
  run.loss_trace.assign(T, 0.0);
  run.consensus_trace.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<ModelWeights> locals;
    locals.reserve(K);
    double entry_loss_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double entry_loss = 0.0;
      try {
        locals.push_back(prox_local_update(w, z_data[k], config, &entry_loss));
      } catch (const DivergenceError& e) {
        throw DivergenceError("round " + std::to_string(t + 1) + ": " + e.what());
      }
      entry_loss_sum += entry_loss;
    }
    if (t > 0) run.loss_trace[t - 1] = entry_loss_sum / static_cast<double>(K);

    ModelWeights next = ModelWeights::zeros(cohort.dimension());
    for (const ModelWeights& v : locals)
      for (std::size_t j = 0; j < next.values.size(); ++j) next.values[j] += v.values[j];
    for (double& x : next.values) x /= static_cast<double>(K);
    check_round_finite(next, t + 1, "server average");

    double dispersion = 0.0;
    for (const ModelWeights& v : locals)
      dispersion = std::max(dispersion, l2_distance(v.values, next.values));
    run.consensus_trace[t] = dispersion;

    w = std::move(next);
    report_progress(progress, t + 1, T);
  }
  double final_loss = 0.0;
  for (const SiteDataset& data : z_data) final_loss += logistic_loss(w, data);
  run.loss_trace[T - 1] = final_loss / static_cast<double>(K);

  run.weights.emplace("global", std::move(w));
  run.stats.emplace("global", std::move(exported));
  return run;
}

ModelWeights fedgd_local_step(
    const ModelWeights& current, const SiteDataset& data,
    const std::vector<std::pair<double, const ModelWeights*>>& coupled,
    double alpha, double learning_rate, double* entry_loss) {
  LossGradient fused = logistic_loss_and_gradient(current, data);
  if (entry_loss != nullptr) *entry_loss = fused.loss;
  std::vector<double>& g = fused.gradient;
  if (alpha > 0.0) {
    for (const auto& [weight, neighbor] : coupled) {
      const double scale = 2.0 * alpha * weight;
      for (std::size_t j = 0; j < g.size(); ++j)
        g[j] += scale * (current.values[j] - neighbor->values[j]);
    }
  }
  ModelWeights next = current;
  for (std::size_t j = 0; j < g.size(); ++j)
    next.values[j] -= learning_rate * g[j];
  return next;
}

TrainingRun train_fedgd(const Cohort& cohort, const EmpiricalGraph& graph,
                        const SolverConfig& config,
                        std::optional<NormalizationMode> normalization,
                        const ProgressFn& progress) {
  config.validate();
  require_both_classes(cohort, "federated gradient descent");
  if (graph.architecture() != GraphArchitecture::PeerToPeer)
    throw TrainingError("federated gradient descent requires a peer-to-peer graph");
  require_matching_nodes(graph.nodes(), cohort, "federated gradient descent");

  const NormalizationMode mode = normalization.value_or(
      config.coupling_alpha > 0.0 ? NormalizationMode::Neighborhood
                                  : NormalizationMode::PerSite);
  if (mode == NormalizationMode::CentralizedGlobal)
    throw ConfigError(
        "federated gradient descent cannot use centralized-global normalization");

  TrainingRun run;
  run.kind = TrainerKind::FedGd;
  run.normalization = mode;
  run.rounds = config.global_iterations;

  const std::vector<const SiteDataset*> sites = sites_ascending(cohort);
  const std::size_t K = sites.size();

  std::unordered_map<std::string, FeatureStats> per_site;
  std::vector<FeatureStats> per_site_ordered;
  per_site_ordered.reserve(K);
  for (const SiteDataset* s : sites) {
    per_site_ordered.push_back(site_stats(*s));
    per_site.emplace(s->site_id(), per_site_ordered.back());
  }

  std::vector<SiteDataset> z_data;
  std::vector<FeatureStats> used_stats;
  z_data.reserve(K);
  used_stats.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::string& sid = sites[k]->site_id();
    FeatureStats stats;
    switch (mode) {
      case NormalizationMode::PerSite:
        stats = per_site.at(sid);
        break;
      case NormalizationMode::Neighborhood:
        if (graph.degree(sid) == 0) {
          stats = per_site.at(sid);
          if (config.coupling_alpha > 0.0)
            run.warnings.push_back("site '" + sid +
                                   "' is isolated in the topology; it trains "
                                   "without collaboration");
        } else {
          stats = neighborhood_stats(sid, graph, per_site);
        }
        break;
      default:
        stats = federated_stats(per_site_ordered, mode);
        break;
    }
    z_data.push_back(apply_zscore(*sites[k], stats));
    used_stats.push_back(std::move(stats));
  }

  // Neighbor index lists resolved once; couplings read the previous round's
  // weights (synchronous update).
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t k = 0; k < K; ++k) index_of.emplace(sites[k]->site_id(), k);
  std::vector<std::vector<std::pair<double, std::size_t>>> coupling(K);
  for (std::size_t k = 0; k < K; ++k)
    for (const auto& [nb, weight] : graph.neighbors(sites[k]->site_id()))
      coupling[k].emplace_back(weight, index_of.at(nb));

  const std::size_t T = config.global_iterations;
  std::vector<ModelWeights> w(K, ModelWeights::zeros(cohort.dimension()));
  std::vector<ModelWeights> next = w;
  run.loss_trace.assign(T, 0.0);
  run.consensus_trace.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double entry_loss_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<std::pair<double, const ModelWeights*>> coupled;
      coupled.reserve(coupling[k].size());
      for (const auto& [weight, idx] : coupling[k])
        coupled.emplace_back(weight, &w[idx]);
      double entry_loss = 0.0;
      next[k] = fedgd_local_step(w[k], z_data[k], coupled, config.coupling_alpha,
                                 config.learning_rate, &entry_loss);
      entry_loss_sum += entry_loss;
      check_round_finite(next[k], t + 1, "site '" + sites[k]->site_id() + "'");
    }
    if (t > 0) run.loss_trace[t - 1] = entry_loss_sum / static_cast<double>(K);
    std::swap(w, next);

    double gap = 0.0;
    for (const GraphEdge& e : graph.edges())
      gap = std::max(gap, l2_distance(w[index_of.at(e.a)].values,
                                      w[index_of.at(e.b)].values));
    run.consensus_trace[t] = gap;
    report_progress(progress, t + 1, T);
  }
  double final_loss = 0.0;
  for (std::size_t k = 0; k < K; ++k) final_loss += logistic_loss(w[k], z_data[k]);
  run.loss_trace[T - 1] = final_loss / static_cast<double>(K);

  for (std::size_t k = 0; k < K; ++k) {
    run.weights.emplace(sites[k]->site_id(), std::move(w[k]));
    run.stats.emplace(sites[k]->site_id(), std::move(used_stats[k]));
  }
  return run;
}

}  // namespace fedlogit
