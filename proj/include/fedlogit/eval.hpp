// Evaluation protocol: stratified k-fold plans with a common pooled test
// fold, ROC/confusion metrics, and the cross-validated experiment driver
// that compares training regimes on one cohort.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedlogit/cohort.hpp"
#include "fedlogit/model.hpp"
#include "fedlogit/topology.hpp"
#include "fedlogit/trainers.hpp"

namespace fedlogit {

// Assignment of every participant to one of `fold_count` folds, stratified
// by label: within each class, ids are shuffled once (seeded) and dealt
// round-robin, so per-fold class counts differ by at most one.
struct FoldPlan {
  std::size_t fold_count = 10;
  std::uint64_t seed = 0;
  std::size_t test_fold = 0;
  std::unordered_map<std::string, std::size_t> fold_of;
};

// Throws ConfigError (fold_count < 2) or StratificationError (a class has
// fewer samples than fold_count).
FoldPlan make_fold_plan(const Cohort& cohort, std::size_t fold_count,
                        std::uint64_t seed);

struct FoldSplit {
  Cohort train;          // per-site rows outside the test fold
  SiteDataset test;      // the common test fold, pooled across sites
  std::vector<std::string> dropped_sites;  // sites left with no training rows
};

FoldSplit split_fold(const Cohort& cohort, const FoldPlan& plan);

// Mann-Whitney AUC with midrank tie handling. Scores need not be in [0, 1].
// Throws ShapeError (size mismatch) or MetricError (single-class labels).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Threshold metrics at `cutoff` (predicted positive iff score >= cutoff).
struct MetricsReport {
  double auc = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double balanced_accuracy = 0.0;
  double cutoff = 0.5;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

MetricsReport classification_metrics(const std::vector<double>& scores,
                                     const std::vector<int>& labels,
                                     double cutoff = 0.5);

// Mean and population standard deviation over the available (non-missing)
// folds or sites.
struct MetricsSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

MetricsSummary summarize(const std::vector<double>& values);

// One evaluated model key ("global" or a site id) across all folds.
struct EvalSeries {
  std::string key;
  std::size_t site_size = 0;       // 0 for the global series
  std::size_t site_positives = 0;  // 0 for the global series
  std::vector<std::optional<MetricsReport>> per_fold;
  MetricsSummary auc, sensitivity, specificity, balanced_accuracy;
};

struct KindResult {
  TrainerKind kind = TrainerKind::Centralized;
  NormalizationMode normalization = NormalizationMode::PerSite;
  std::vector<EvalSeries> series;  // "global" alone, or sites ascending
  // Dispersion of per-site fold-mean metrics across sites. For global-model
  // kinds this collapses to the single series' summary with count 1.
  MetricsSummary auc_across_sites, sensitivity_across_sites,
      specificity_across_sites, balanced_accuracy_across_sites;
  // consensus_trace of the fold-0 training run (empty when not applicable),
  // kept so convergence behaviour is inspectable from the result file.
  std::vector<double> fold0_consensus_trace;
  std::vector<std::string> warnings;
};

struct TimingEntry {
  double seconds = 0.0;      // summed training wall time across folds
  std::size_t rounds = 0;    // summed rounds across folds
};

struct ExperimentResult {
  std::string label = "run";
  std::uint64_t config_hash = 0;
  std::string config_echo;
  std::size_t fold_count = 0;
  std::uint64_t seed = 0;
  double cutoff = 0.5;
  std::size_t site_count = 0, dimension = 0, total_size = 0, total_positives = 0;
  std::vector<KindResult> kinds;
  std::vector<std::string> warnings;  // cohort-level (merging, drops)
  // Wall-clock timings, deliberately excluded from to_json() so result files
  // are byte-identical across reruns; serialized separately.
  std::map<std::string, TimingEntry> timings;

  const KindResult& kind(TrainerKind k) const;  // throws LookupError
  std::string to_json() const;                  // deterministic
  std::string timings_json() const;
  std::string to_csv() const;                   // long format, one row per fold metric
  std::string sitewise_tsv(TrainerKind k) const;
};

// Experiment-level headline AUC of a kind: the global series' fold-mean for
// single-model kinds, the across-site mean of per-site fold-means otherwise.
double experiment_mean_auc(const KindResult& kind);

struct RunOptions {
  std::size_t threads = 1;
  double cutoff = 0.5;
  std::optional<NormalizationMode> normalization_override;
  std::function<void(std::size_t fold, TrainerKind kind, std::size_t round,
                     std::size_t total)>
      progress;
};

// Cross-validated comparison: builds one stratified fold plan, then for every
// fold trains each requested kind on the training shard and scores it on the
// common test fold (per-site models are each scored on the full test fold
// with their own normalization statistics). The TopologySpec selects the
// peer-to-peer graph for FedGd; FedAvg always uses a client-server star over
// the fold's training sites. Folds may run on `threads` workers; results are
// merged in fold order, so the output is identical for any thread count.
ExperimentResult run_experiment(const Cohort& cohort,
                                const std::vector<TrainerKind>& kinds,
                                const TopologySpec& topology,
                                const SolverConfig& solver,
                                std::size_t fold_count, std::uint64_t seed,
                                const RunOptions& options = {});

}  // namespace fedlogit
