#include "fedlogit/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fedlogit/rng.hpp"

namespace fedlogit {
namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

FoldPlan make_fold_plan(const Cohort& cohort, std::size_t fold_count,
                        std::uint64_t seed) {
  if (fold_count < 2) throw ConfigError("fold_count must be >= 2");
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  for (const SiteDataset& s : cohort.sites()) {
    for (const Participant& p : s.participants())
      (p.label == 1 ? positives : negatives).push_back(p.id);
  }
  if (positives.size() < fold_count)
    throw StratificationError("positive class has " + std::to_string(positives.size()) +
                              " samples, fewer than " + std::to_string(fold_count) +
                              " folds");
  if (negatives.size() < fold_count)
    throw StratificationError("negative class has " + std::to_string(negatives.size()) +
                              " samples, fewer than " + std::to_string(fold_count) +
                              " folds");
  FoldPlan plan;
  plan.fold_count = fold_count;
  plan.seed = seed;
  std::mt19937_64 engine = make_engine(seed);
  std::shuffle(positives.begin(), positives.end(), engine);
  std::shuffle(negatives.begin(), negatives.end(), engine);
  plan.fold_of.reserve(positives.size() + negatives.size());
  for (std::size_t i = 0; i < positives.size(); ++i)
    plan.fold_of.emplace(positives[i], i % fold_count);
  for (std::size_t i = 0; i < negatives.size(); ++i)
    plan.fold_of.emplace(negatives[i], i % fold_count);
  return plan;
}

FoldSplit split_fold(const Cohort& cohort, const FoldPlan& plan) {
  if (plan.test_fold >= plan.fold_count)
    throw ConfigError("test_fold " + std::to_string(plan.test_fold) +
                      " out of range for " + std::to_string(plan.fold_count) + " folds");
  std::vector<SiteDataset> train_sites;
  std::vector<Participant> test_rows;
  std::vector<std::string> dropped;
  for (const SiteDataset& s : cohort.sites()) {
    std::vector<Participant> keep;
    keep.reserve(s.size());
    for (const Participant& p : s.participants()) {
      auto it = plan.fold_of.find(p.id);
      if (it == plan.fold_of.end())
        throw LookupError("participant '" + p.id + "' is missing from the fold plan");
      if (it->second == plan.test_fold) {
        test_rows.push_back(p);
      } else {
        keep.push_back(p);
      }
    }
    if (keep.empty()) {
      dropped.push_back(s.site_id());
    } else {
      train_sites.emplace_back(s.site_id(), std::move(keep));
    }
  }
  if (test_rows.empty())
    throw StratificationError("test fold " + std::to_string(plan.test_fold) +
                              " is empty");
  if (train_sites.empty())
    throw StratificationError("no training rows outside test fold " +
                              std::to_string(plan.test_fold));
  return FoldSplit{Cohort(std::move(train_sites)),
                   SiteDataset("test", std::move(test_rows)), std::move(dropped)};
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ShapeError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y == 1);
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0)
    throw MetricError("AUC undefined: labels contain a single class");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Midranks over tie blocks; AUC via the Mann-Whitney rank-sum identity.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) positive_rank_sum += midrank;
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double q = static_cast<double>(neg);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

MetricsReport classification_metrics(const std::vector<double>& scores,
                                     const std::vector<int>& labels, double cutoff) {
  if (scores.size() != labels.size())
    throw ShapeError("classification_metrics: " + std::to_string(scores.size()) +
                     " scores vs " + std::to_string(labels.size()) + " labels");
  MetricsReport r;
  r.cutoff = cutoff;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_positive = scores[i] >= cutoff;
    if (labels[i] == 1) {
      predicted_positive ? ++r.tp : ++r.fn;
    } else {
      predicted_positive ? ++r.fp : ++r.tn;
    }
  }
  if (r.tp + r.fn == 0 || r.tn + r.fp == 0)
    throw MetricError("classification metrics undefined: labels contain a single class");
  r.auc = roc_auc(scores, labels);
  r.sensitivity = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  r.specificity = static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp);
  r.balanced_accuracy = (r.sensitivity + r.specificity) / 2.0;
  return r;
}

MetricsSummary summarize(const std::vector<double>& values) {
  MetricsSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    var += d * d;
  }
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

namespace {

struct KindOutcome {
  std::map<std::string, MetricsReport> reports;
  std::vector<std::string> warnings;
  NormalizationMode normalization = NormalizationMode::PerSite;
  std::vector<double> consensus_trace;
  double seconds = 0.0;
  std::size_t rounds = 0;
};

struct FoldOutcome {
  std::vector<KindOutcome> kinds;
  std::vector<std::string> warnings;
};

std::vector<int> labels_of(const SiteDataset& data) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const Participant& p : data.participants()) labels.push_back(p.label);
  return labels;
}

FoldOutcome evaluate_fold(const Cohort& cohort, const FoldPlan& base_plan,
                          std::size_t fold, const std::vector<TrainerKind>& kinds,
                          const TopologySpec& topology, const SolverConfig& solver,
                          const RunOptions& options) {
  FoldPlan plan = base_plan;
  plan.test_fold = fold;
  FoldSplit split = split_fold(cohort, plan);
  FoldOutcome outcome;
  for (const std::string& sid : split.dropped_sites)
    outcome.warnings.push_back("fold " + std::to_string(fold) + ": site '" + sid +
                               "' has no training rows and was dropped");

  const std::vector<int> test_labels = labels_of(split.test);
  outcome.kinds.resize(kinds.size());
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    const TrainerKind kind = kinds[ki];
    KindOutcome& ko = outcome.kinds[ki];
    ProgressFn progress;
    if (options.progress) {
      auto cb = options.progress;
      progress = [cb, fold, kind](std::size_t round, std::size_t total) {
        cb(fold, kind, round, total);
      };
    }
    const auto started = std::chrono::steady_clock::now();
    TrainingRun run;
    switch (kind) {
      case TrainerKind::Centralized:
        run = train_centralized(split.train, solver, progress);
        break;
      case TrainerKind::SiteSpecific:
        run = train_site_specific(split.train, solver, progress);
        break;
      case TrainerKind::FedAvg: {
        TopologySpec star_spec;
        star_spec.kind = TopologyKind::Star;
        const EmpiricalGraph star = build_graph(split.train.site_ids(), star_spec);
        run = train_fedavg(split.train, star, solver,
                           options.normalization_override, progress);
        break;
      }
      case TrainerKind::FedGd: {
        const EmpiricalGraph graph = build_graph(split.train.site_ids(), topology);
        run = train_fedgd(split.train, graph, solver,
                          options.normalization_override, progress);
        break;
      }
    }
    ko.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                               started)
                     .count();
    ko.rounds = run.rounds;
    ko.normalization = run.normalization;
    if (fold == 0) ko.consensus_trace = run.consensus_trace;
    for (const std::string& w : run.warnings)
      ko.warnings.push_back("fold " + std::to_string(fold) + ": " + w);

    for (const auto& [key, weights] : run.weights) {
      try {
        const SiteDataset z_test = apply_zscore(split.test, run.stats.at(key));
        const std::vector<double> scores = predict_scores(weights, z_test);
        ko.reports.emplace(key,
                           classification_metrics(scores, test_labels, options.cutoff));
      } catch (const MetricError& e) {
        ko.warnings.push_back("fold " + std::to_string(fold) + ": " +
                              trainer_kind_name(kind) + " '" + key +
                              "': " + e.what());
      }
    }
  }
  return outcome;
}

}  // namespace

const KindResult& ExperimentResult::kind(TrainerKind k) const {
  for (const KindResult& kr : kinds)
    if (kr.kind == k) return kr;
  throw LookupError(std::string("experiment has no result for trainer '") +
                    trainer_kind_name(k) + "'");
}

double experiment_mean_auc(const KindResult& kind) {
  if (kind.series.size() == 1 && kind.series.front().key == "global")
    return kind.series.front().auc.mean;
  return kind.auc_across_sites.mean;
}

ExperimentResult run_experiment(const Cohort& cohort,
                                const std::vector<TrainerKind>& kinds,
                                const TopologySpec& topology,
                                const SolverConfig& solver, std::size_t fold_count,
                                std::uint64_t seed, const RunOptions& options) {
  if (kinds.empty()) throw ConfigError("at least one trainer kind is required");
  for (std::size_t i = 0; i < kinds.size(); ++i)
    for (std::size_t j = i + 1; j < kinds.size(); ++j)
      if (kinds[i] == kinds[j])
        throw ConfigError(std::string("trainer '") + trainer_kind_name(kinds[i]) +
                          "' listed more than once");
  if (options.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(options.cutoff >= 0.0) || !(options.cutoff <= 1.0))
    throw ConfigError("cutoff must lie in [0, 1]");
  solver.validate();
  const bool wants_fedgd =
      std::find(kinds.begin(), kinds.end(), TrainerKind::FedGd) != kinds.end();
  if (wants_fedgd && topology.kind == TopologyKind::Star)
    throw ConfigError(
        "federated gradient descent requires a peer-to-peer topology, not star");

  const FoldPlan plan = make_fold_plan(cohort, fold_count, seed);

  std::vector<FoldOutcome> outcomes(fold_count);
  std::vector<std::exception_ptr> failures(fold_count);
  const std::size_t workers = std::min<std::size_t>(options.threads, fold_count);
  auto work = [&](std::size_t worker) {
    for (std::size_t f = worker; f < fold_count; f += workers) {
      try {
        outcomes[f] =
            evaluate_fold(cohort, plan, f, kinds, topology, solver, options);
      } catch (...) {
        failures[f] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t f = 0; f < fold_count; ++f)
    if (failures[f]) std::rethrow_exception(failures[f]);

  ExperimentResult result;
  result.fold_count = fold_count;
  result.seed = seed;
  result.cutoff = options.cutoff;
  result.site_count = cohort.site_count();
  result.dimension = cohort.dimension();
  result.total_size = cohort.total_size();
  result.total_positives = cohort.total_positives();
  for (const FoldOutcome& fo : outcomes)
    result.warnings.insert(result.warnings.end(), fo.warnings.begin(),
                           fo.warnings.end());

  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    KindResult kr;
    kr.kind = kinds[ki];
    kr.normalization = outcomes.front().kinds[ki].normalization;
    kr.fold0_consensus_trace = outcomes.front().kinds[ki].consensus_trace;

    std::vector<std::string> keys;
    for (const FoldOutcome& fo : outcomes)
      for (const auto& [key, report] : fo.kinds[ki].reports) {
        (void)report;
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
          keys.push_back(key);
      }
    std::sort(keys.begin(), keys.end());

    TimingEntry timing;
    for (const FoldOutcome& fo : outcomes) {
      timing.seconds += fo.kinds[ki].seconds;
      timing.rounds += fo.kinds[ki].rounds;
      kr.warnings.insert(kr.warnings.end(), fo.kinds[ki].warnings.begin(),
                         fo.kinds[ki].warnings.end());
    }
    result.timings.emplace(trainer_kind_name(kinds[ki]), timing);

    for (const std::string& key : keys) {
      EvalSeries series;
      series.key = key;
      if (key != "global" && cohort.has_site(key)) {
        series.site_size = cohort.site(key).size();
        series.site_positives = cohort.site(key).positives();
      }
      std::vector<double> aucs, sens, specs, bas;
      for (const FoldOutcome& fo : outcomes) {
        auto it = fo.kinds[ki].reports.find(key);
        if (it == fo.kinds[ki].reports.end()) {
          series.per_fold.push_back(std::nullopt);
        } else {
          series.per_fold.push_back(it->second);
          aucs.push_back(it->second.auc);
          sens.push_back(it->second.sensitivity);
          specs.push_back(it->second.specificity);
          bas.push_back(it->second.balanced_accuracy);
        }
      }
      series.auc = summarize(aucs);
      series.sensitivity = summarize(sens);
      series.specificity = summarize(specs);
      series.balanced_accuracy = summarize(bas);
      kr.series.push_back(std::move(series));
    }

    std::vector<double> site_aucs, site_sens, site_specs, site_bas;
    for (const EvalSeries& s : kr.series) {
      if (s.auc.count == 0) continue;
      site_aucs.push_back(s.auc.mean);
      site_sens.push_back(s.sensitivity.mean);
      site_specs.push_back(s.specificity.mean);
      site_bas.push_back(s.balanced_accuracy.mean);
    }
    kr.auc_across_sites = summarize(site_aucs);
    kr.sensitivity_across_sites = summarize(site_sens);
    kr.specificity_across_sites = summarize(site_specs);
    kr.balanced_accuracy_across_sites = summarize(site_bas);
    result.kinds.push_back(std::move(kr));
  }
  return result;
}

namespace {

nlohmann::json summary_to_json(const MetricsSummary& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}};
}

nlohmann::json report_to_json(const MetricsReport& r) {
  return {{"auc", r.auc},
          {"sensitivity", r.sensitivity},
          {"specificity", r.specificity},
          {"balanced_accuracy", r.balanced_accuracy},
          {"cutoff", r.cutoff},
          {"tp", r.tp},
          {"fp", r.fp},
          {"tn", r.tn},
          {"fn", r.fn}};
}

}  // namespace

std::string ExperimentResult::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["config_hash"] = hex_hash(config_hash);
  j["config_echo"] = config_echo;
  j["fold_count"] = fold_count;
  j["seed"] = seed;
  j["cutoff"] = cutoff;
  j["cohort"] = {{"site_count", site_count},
                 {"dimension", dimension},
                 {"total_size", total_size},
                 {"total_positives", total_positives}};
  j["warnings"] = warnings;
  j["kinds"] = nlohmann::json::array();
  for (const KindResult& kr : kinds) {
    nlohmann::json kj;
    kj["kind"] = trainer_kind_name(kr.kind);
    kj["normalization"] = normalization_mode_name(kr.normalization);
    kj["warnings"] = kr.warnings;
    kj["consensus_trace_fold0"] = kr.fold0_consensus_trace;
    kj["across_sites"] = {
        {"auc", summary_to_json(kr.auc_across_sites)},
        {"sensitivity", summary_to_json(kr.sensitivity_across_sites)},
        {"specificity", summary_to_json(kr.specificity_across_sites)},
        {"balanced_accuracy", summary_to_json(kr.balanced_accuracy_across_sites)}};
    kj["series"] = nlohmann::json::array();
    for (const EvalSeries& s : kr.series) {
      nlohmann::json sj;
      sj["key"] = s.key;
      sj["site_size"] = s.site_size;
      sj["site_positives"] = s.site_positives;
      sj["folds"] = nlohmann::json::array();
      for (const auto& cell : s.per_fold)
        sj["folds"].push_back(cell ? report_to_json(*cell) : nlohmann::json(nullptr));
      sj["summary"] = {{"auc", summary_to_json(s.auc)},
                       {"sensitivity", summary_to_json(s.sensitivity)},
                       {"specificity", summary_to_json(s.specificity)},
                       {"balanced_accuracy", summary_to_json(s.balanced_accuracy)}};
      kj["series"].push_back(std::move(sj));
    }
    j["kinds"].push_back(std::move(kj));
  }
  return j.dump(2) + "\n";
}

std::string ExperimentResult::timings_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["config_hash"] = hex_hash(config_hash);
  j["training"] = nlohmann::json::object();
  for (const auto& [name, t] : timings) {
    j["training"][name] = {
        {"seconds", t.seconds},
        {"rounds", t.rounds},
        {"seconds_per_round", t.rounds == 0 ? 0.0
                                            : t.seconds / static_cast<double>(t.rounds)}};
  }
  return j.dump(2) + "\n";
}

std::string ExperimentResult::to_csv() const {
  // Long format: one metric per row so downstream tools can pivot freely.
  std::ostringstream out;
  out << "case,kind,site,fold,metric,value\n";
  auto emit = [&](const std::string& kind, const std::string& site,
                  const std::string& fold, const char* metric, double value,
                  bool present) {
    out << label << ',' << kind << ',' << site << ',' << fold << ',' << metric << ',';
    if (present) out << format_number(value);
    out << '\n';
  };
  for (const KindResult& kr : kinds) {
    const std::string kind = trainer_kind_name(kr.kind);
    for (const EvalSeries& s : kr.series) {
      for (std::size_t f = 0; f < s.per_fold.size(); ++f) {
        const std::string fold = std::to_string(f);
        const bool present = s.per_fold[f].has_value();
        const MetricsReport r = present ? *s.per_fold[f] : MetricsReport{};
        emit(kind, s.key, fold, "auc", r.auc, present);
        emit(kind, s.key, fold, "sensitivity", r.sensitivity, present);
        emit(kind, s.key, fold, "specificity", r.specificity, present);
        emit(kind, s.key, fold, "balanced_accuracy", r.balanced_accuracy, present);
      }
      emit(kind, s.key, "mean", "auc", s.auc.mean, true);
      emit(kind, s.key, "mean", "sensitivity", s.sensitivity.mean, true);
      emit(kind, s.key, "mean", "specificity", s.specificity.mean, true);
      emit(kind, s.key, "mean", "balanced_accuracy", s.balanced_accuracy.mean, true);
      emit(kind, s.key, "std", "auc", s.auc.stddev, true);
      emit(kind, s.key, "std", "sensitivity", s.sensitivity.stddev, true);
      emit(kind, s.key, "std", "specificity", s.specificity.stddev, true);
      emit(kind, s.key, "std", "balanced_accuracy", s.balanced_accuracy.stddev, true);
    }
  }
  return out.str();
}

std::string ExperimentResult::sitewise_tsv(TrainerKind k) const {
  const KindResult& kr = kind(k);
  std::ostringstream out;
  out << "site\tsize\tpositives\tauc_mean\tauc_std\tsensitivity_mean\t"
         "sensitivity_std\tspecificity_mean\tspecificity_std\t"
         "balanced_accuracy_mean\tbalanced_accuracy_std\n";
  for (const EvalSeries& s : kr.series) {
    out << s.key << '\t' << s.site_size << '\t' << s.site_positives << '\t'
        << format_number(s.auc.mean) << '\t' << format_number(s.auc.stddev) << '\t'
        << format_number(s.sensitivity.mean) << '\t'
        << format_number(s.sensitivity.stddev) << '\t'
        << format_number(s.specificity.mean) << '\t'
        << format_number(s.specificity.stddev) << '\t'
        << format_number(s.balanced_accuracy.mean) << '\t'
        << format_number(s.balanced_accuracy.stddev) << '\n';
  }
  return out.str();
}

}  // namespace fedlogit
