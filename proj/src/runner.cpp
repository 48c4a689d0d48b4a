#include "fedlogit/runner.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "fedlogit/rng.hpp"

namespace fedlogit {
namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

RunOptions options_of(const ExperimentConfig& config, bool quiet) {
  RunOptions options;
  options.threads = config.threads;
  options.cutoff = config.cutoff;
  options.normalization_override = config.normalization_override;
  if (!quiet) {
    auto mutex = std::make_shared<std::mutex>();
    std::string label = config.label;
    options.progress = [mutex, label](std::size_t fold, TrainerKind kind,
                                      std::size_t round, std::size_t total) {
      std::lock_guard<std::mutex> lock(*mutex);
      std::fprintf(stderr, "[%s] fold %zu %s round %zu/%zu\n", label.c_str(), fold,
                   trainer_kind_name(kind), round, total);
    };
  }
  return options;
}

bool uses_kind(const ExperimentConfig& config, TrainerKind kind) {
  for (TrainerKind k : config.kinds)
    if (k == kind) return true;
  return false;
}

}  // namespace

Cohort load_cohort(const ExperimentConfig& config, std::vector<std::string>* warnings) {
  Cohort cohort = config.source == "csv"
                      ? ingest_csv(config.csv_path, csv_schema_of(config))
                      : generate_synthetic(config.synthetic);
  if (config.merge_min_size == 0) return cohort;
  MergeResult merged = merge_small_sites(cohort, config.merge_min_size);
  if (warnings != nullptr) {
    for (const std::string& sid : merged.merged_site_ids)
      warnings->push_back("merged small sites into pool '" + sid + "'");
    if (merged.residual_below_min)
      warnings->push_back("the last merged pool is still below merge_min_size " +
                          std::to_string(config.merge_min_size));
  }
  return merged.cohort;
}

ExperimentResult execute_experiment(const ExperimentConfig& config, bool quiet) {
  std::vector<std::string> prep_warnings;
  const Cohort cohort = load_cohort(config, &prep_warnings);
  ExperimentResult result =
      run_experiment(cohort, config.kinds, config.topology, config.solver,
                     config.fold_count, config.seed, options_of(config, quiet));
  result.label = config.label;
  result.config_hash = config_hash(config);
  result.config_echo = canonical_echo(config);
  result.warnings.insert(result.warnings.begin(), prep_warnings.begin(),
                         prep_warnings.end());
  return result;
}

std::string resolve_output_root(const ExperimentConfig& config,
                                const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("FEDLOGIT_OUTPUT_ROOT"); env != nullptr && *env)
    return env;
  return config.output_dir;
}

std::string write_artifacts(const ExperimentConfig& config,
                            const ExperimentResult& result, const Cohort& cohort,
                            const std::string& output_root) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(output_root) / config.label;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");

  write_file(dir / "result.json", result.to_json());
  write_file(dir / "result.csv", result.to_csv());
  write_file(dir / "timings.json", result.timings_json());
  write_file(dir / "config.txt", canonical_echo(config));
  write_file(dir / "cohort.json", cohort.summary_json() + "\n");
  for (const KindResult& kr : result.kinds) {
    if (kr.series.size() == 1 && kr.series.front().key == "global") continue;
    write_file(dir / (std::string("sitewise_") + trainer_kind_name(kr.kind) + ".tsv"),
               result.sitewise_tsv(kr.kind));
  }
  // Document the full-cohort communication graph(s) the experiment folds
  // instantiate over their training sites.
  if (uses_kind(config, TrainerKind::FedGd)) {
    const EmpiricalGraph graph = build_graph(cohort.site_ids(), config.topology);
    write_file(dir / "graph.json", graph.adjacency_json() + "\n");
    write_file(dir / "graph_edges.txt", graph.to_edge_list());
  } else if (uses_kind(config, TrainerKind::FedAvg)) {
    TopologySpec star_spec;
    star_spec.kind = TopologyKind::Star;
    const EmpiricalGraph star = build_graph(cohort.site_ids(), star_spec);
    write_file(dir / "graph.json", star.adjacency_json() + "\n");
  }
  return dir.string();
}

bool verify_determinism(const ExperimentConfig& config, bool quiet,
                        std::string* detail) {
  ExperimentConfig first = config;
  ExperimentConfig second = config;
  second.threads = config.threads == 1 ? 2 : 1;
  const std::string a = execute_experiment(first, quiet).to_json();
  const std::string b = execute_experiment(second, quiet).to_json();
  if (a == b) {
    if (detail != nullptr)
      *detail = "identical result JSON across reruns (" + std::to_string(a.size()) +
                " bytes; " + std::to_string(first.threads) + " vs " +
                std::to_string(second.threads) + " workers)";
    return true;
  }
  if (detail != nullptr) {
    std::size_t i = 0;
    while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
    *detail = "results differ at byte " + std::to_string(i);
  }
  return false;
}

std::vector<std::string> preset_names() {
  return {"baselines", "alpha-sweep",   "eta-sweep",
          "sitewise",  "normalization", "degree-sweep"};
}

namespace {

ExperimentConfig preset_base(ExperimentConfig base, const std::string& family) {
  if (base.source.empty()) {
    base.source = "synthetic";
    base.synthetic = reference_cohort_spec();
    base.synthetic_seed_set = true;
  }
  if (base.label == "run") base.label = family;
  finalize_config(base);
  return base;
}

struct SweepRow {
  std::string point;
  std::vector<std::pair<std::string, std::string>> cells;
};

void write_sweep(const std::filesystem::path& dir, const std::vector<SweepRow>& rows) {
  if (rows.empty()) return;
  std::ostringstream out;
  out << "point";
  for (const auto& [name, value] : rows.front().cells) {
    (void)value;
    out << '\t' << name;
  }
  out << '\n';
  for (const SweepRow& row : rows) {
    out << row.point;
    for (const auto& [name, value] : row.cells) {
      (void)name;
      out << '\t' << value;
    }
    out << '\n';
  }
  write_file(dir / "sweep.tsv", out.str());
}

ExperimentResult run_point(ExperimentConfig point, const std::string& family_root,
                           bool quiet) {
  finalize_config(point);
  const ExperimentResult result = execute_experiment(point, quiet);
  std::vector<std::string> ignored;
  const Cohort cohort = load_cohort(point, &ignored);
  write_artifacts(point, result, cohort, family_root);
  return result;
}

double final_consensus(const ExperimentResult& result, TrainerKind kind) {
  const std::vector<double>& trace = result.kind(kind).fold0_consensus_trace;
  return trace.empty() ? 0.0 : trace.back();
}

}  // namespace

std::string run_preset(const std::string& name, ExperimentConfig base,
                       const std::string& output_root, bool quiet) {
  namespace fs = std::filesystem;
  const ExperimentConfig root_config = preset_base(std::move(base), name);
  const fs::path family_dir = fs::path(output_root) / root_config.label;
  std::error_code ec;
  fs::create_directories(family_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + family_dir.string() + "'");
  std::vector<SweepRow> rows;

  if (name == "baselines" || name == "sitewise") {
    ExperimentConfig point = root_config;
    point.kinds = {TrainerKind::Centralized, TrainerKind::SiteSpecific,
                   TrainerKind::FedAvg, TrainerKind::FedGd};
    point.label = name == "baselines" ? "all-kinds" : "per-site-metrics";
    const ExperimentResult result = run_point(point, family_dir.string(), quiet);
    for (const KindResult& kr : result.kinds) {
      SweepRow row;
      row.point = trainer_kind_name(kr.kind);
      row.cells = {
          {"mean_auc", format_number(experiment_mean_auc(kr))},
          {"across_site_auc_std", format_number(kr.auc_across_sites.stddev)},
          {"mean_balanced_accuracy",
           format_number(kr.series.size() == 1
                             ? kr.series.front().balanced_accuracy.mean
                             : kr.balanced_accuracy_across_sites.mean)},
      };
      rows.push_back(std::move(row));
    }
  } else if (name == "alpha-sweep") {
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      ExperimentConfig point = root_config;
      point.kinds = {TrainerKind::FedGd};
      point.solver.coupling_alpha = alpha;
      point.label = "alpha-" + format_number(alpha);
      const ExperimentResult result = run_point(point, family_dir.string(), quiet);
      const KindResult& kr = result.kind(TrainerKind::FedGd);
      rows.push_back(SweepRow{
          format_number(alpha),
          {{"mean_auc", format_number(experiment_mean_auc(kr))},
           {"across_site_auc_std", format_number(kr.auc_across_sites.stddev)},
           {"final_consensus_gap",
            format_number(final_consensus(result, TrainerKind::FedGd))}}});
    }
  } else if (name == "eta-sweep") {
    for (double eta : {10.0, 1.0, 0.1}) {
      ExperimentConfig point = root_config;
      point.kinds = {TrainerKind::FedAvg};
      point.solver.proximal_eta = eta;
      point.label = "eta-" + format_number(eta);
      const ExperimentResult result = run_point(point, family_dir.string(), quiet);
      const KindResult& kr = result.kind(TrainerKind::FedAvg);
      const std::vector<double>& trace = kr.fold0_consensus_trace;
      const double at_100 = trace.size() >= 100 ? trace[99] : 0.0;
      rows.push_back(SweepRow{
          format_number(eta),
          {{"mean_auc", format_number(experiment_mean_auc(kr))},
           {"dispersion_round100", format_number(at_100)},
           {"final_dispersion",
            format_number(final_consensus(result, TrainerKind::FedAvg))}}});
    }
  } else if (name == "normalization") {
    struct Variant {
      TrainerKind kind;
      std::optional<NormalizationMode> mode;
    };
    const std::vector<Variant> variants = {
        {TrainerKind::FedGd, std::nullopt},
        {TrainerKind::FedGd, NormalizationMode::PerSite},
        {TrainerKind::FedAvg, std::nullopt},
        {TrainerKind::FedAvg, NormalizationMode::PerSite},
    };
    for (const Variant& v : variants) {
      ExperimentConfig point = root_config;
      point.kinds = {v.kind};
      point.normalization_override = v.mode;
      const std::string mode_name =
          v.mode ? normalization_mode_name(*v.mode) : "default";
      point.label = std::string(trainer_kind_name(v.kind)) + "-" + mode_name;
      const ExperimentResult result = run_point(point, family_dir.string(), quiet);
      const KindResult& kr = result.kind(v.kind);
      rows.push_back(SweepRow{
          point.label,
          {{"normalization", normalization_mode_name(kr.normalization)},
           {"mean_auc", format_number(experiment_mean_auc(kr))},
           {"across_site_auc_std", format_number(kr.auc_across_sites.stddev)}}});
    }
  } else if (name == "degree-sweep") {
    for (std::size_t degree : {std::size_t{3}, std::size_t{10}}) {
      ExperimentConfig point = root_config;
      point.kinds = {TrainerKind::FedGd};
      point.topology.kind = TopologyKind::RandomRegular;
      point.topology.degree = degree;
      point.label = "degree-" + std::to_string(degree);
      const ExperimentResult result = run_point(point, family_dir.string(), quiet);
      const KindResult& kr = result.kind(TrainerKind::FedGd);
      const TimingEntry& timing = result.timings.at("fedgd");
      const double per_round =
          timing.rounds == 0 ? 0.0
                             : timing.seconds / static_cast<double>(timing.rounds);
      rows.push_back(SweepRow{
          std::to_string(degree),
          {{"mean_auc", format_number(experiment_mean_auc(kr))},
           {"seconds_per_round", format_number(per_round)},
           {"training_seconds", format_number(timing.seconds)}}});
    }
  } else {
    std::string valid;
    for (const std::string& p : preset_names()) {
      if (!valid.empty()) valid += ", ";
      valid += p;
    }
    throw ConfigError("unknown preset '" + name + "'; available: " + valid);
  }

  write_sweep(family_dir, rows);
  return family_dir.string();
}

}  // namespace fedlogit
