// fedlogit command line: run experiments, generate synthetic cohorts,
// verify determinism, and execute bundled experiment presets.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedlogit/config.hpp"
#include "fedlogit/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;  // raw key=value pairs
  std::string output_root;
  bool quiet = false;

  // Typed convenience flags; stored as strings and funneled through the
  // same key=value channel as config files.
  std::vector<std::pair<std::string, std::string>> typed;
};

void add_set_flag(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--set", args.sets,
                  "Override a config key, e.g. --set alpha=0.5 (repeatable)");
}

void add_typed_flag(CLI::App* cmd, CommonArgs& args, const std::string& flag,
                    const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
         flag,
         [&args, key](const std::string& value) { args.typed.emplace_back(key, value); },
         help)
      ->type_name("VALUE");
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  add_set_flag(cmd, args);
  cmd->add_option("--output-root", args.output_root,
                  "Artifact root (overrides FEDLOGIT_OUTPUT_ROOT and output_dir)");
  cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
  add_typed_flag(cmd, args, "--label", "label", "Run label (artifact directory name)");
  add_typed_flag(cmd, args, "--source", "source", "Data source: synthetic or csv");
  add_typed_flag(cmd, args, "--csv", "csv.path", "Cohort CSV path");
  add_typed_flag(cmd, args, "--features", "csv.features",
                 "CSV feature columns: count or comma-separated names");
  add_typed_flag(cmd, args, "--kinds", "kinds",
                 "Comma list: centralized,site-specific,fedavg,fedgd");
  add_typed_flag(cmd, args, "--topology", "topology",
                 "star | ring | random-regular | complete | explicit");
  add_typed_flag(cmd, args, "--degree", "topology.degree",
                 "Random-regular degree");
  add_typed_flag(cmd, args, "--edges", "topology.edges",
                 "Edge list file for explicit topology");
  add_typed_flag(cmd, args, "--seed", "seed", "Master seed");
  add_typed_flag(cmd, args, "--folds", "folds", "Cross-validation fold count");
  add_typed_flag(cmd, args, "--learning-rate", "learning_rate", "Step size");
  add_typed_flag(cmd, args, "--local-iterations", "local_iterations",
                 "Client steps per round");
  add_typed_flag(cmd, args, "--global-iterations", "global_iterations",
                 "Training rounds");
  add_typed_flag(cmd, args, "--eta", "eta", "Proximal penalty strength");
  add_typed_flag(cmd, args, "--alpha", "alpha", "Neighbor coupling strength [0,1]");
  add_typed_flag(cmd, args, "--normalization", "normalization",
                 "Override: per-site | federated-simple | federated-decomposed | "
                 "neighborhood | default");
  add_typed_flag(cmd, args, "--merge-min-size", "merge_min_size",
                 "Pool sites smaller than this");
  add_typed_flag(cmd, args, "--cutoff", "cutoff", "Classification cutoff");
  add_typed_flag(cmd, args, "--threads", "threads", "Fold worker count");
}

std::vector<fedlogit::ConfigOverride> collect_overrides(const CommonArgs& args) {
  std::vector<fedlogit::ConfigOverride> overrides = args.typed;
  for (const std::string& kv : args.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw fedlogit::ConfigError("--set expects key=value, got '" + kv + "'");
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return overrides;
}

fedlogit::ExperimentConfig build_config(const CommonArgs& args, bool finalize) {
  const std::vector<fedlogit::ConfigOverride> overrides = collect_overrides(args);
  if (finalize) {
    return args.config_path.empty()
               ? fedlogit::parse_config("", overrides)
               : fedlogit::parse_config_file(args.config_path, overrides);
  }
  return args.config_path.empty()
             ? fedlogit::parse_config_raw("", overrides)
             : fedlogit::parse_config_file_raw(args.config_path, overrides);
}

void print_headline(const fedlogit::ExperimentResult& result) {
  std::printf("label: %s\n", result.label.c_str());
  for (const fedlogit::KindResult& kr : result.kinds) {
    const double mean_auc = fedlogit::experiment_mean_auc(kr);
    if (kr.series.size() == 1 && kr.series.front().key == "global") {
      std::printf("  %-14s AUC %.4f (fold std %.4f)\n",
                  fedlogit::trainer_kind_name(kr.kind), mean_auc,
                  kr.series.front().auc.stddev);
    } else {
      std::printf("  %-14s AUC %.4f (across-site std %.4f, %zu sites)\n",
                  fedlogit::trainer_kind_name(kr.kind), mean_auc,
                  kr.auc_across_sites.stddev, kr.series.size());
    }
  }
  for (const std::string& w : result.warnings)
    std::printf("  warning: %s\n", w.c_str());
}

int command_run(const CommonArgs& args) {
  const fedlogit::ExperimentConfig config = build_config(args, true);
  const fedlogit::ExperimentResult result =
      fedlogit::execute_experiment(config, args.quiet);
  const fedlogit::Cohort cohort = fedlogit::load_cohort(config, nullptr);
  const std::string dir = fedlogit::write_artifacts(
      config, result, cohort, fedlogit::resolve_output_root(config, args.output_root));
  print_headline(result);
  std::printf("artifacts: %s\n", dir.c_str());
  return 0;
}

int command_verify(const CommonArgs& args) {
  const fedlogit::ExperimentConfig config = build_config(args, true);
  std::string detail;
  const bool ok = fedlogit::verify_determinism(config, args.quiet, &detail);
  std::printf("determinism: %s — %s\n", ok ? "OK" : "FAILED", detail.c_str());
  return ok ? 0 : 1;
}

int command_preset(const std::string& name, const CommonArgs& args) {
  fedlogit::ExperimentConfig base = build_config(args, false);
  const std::string root =
      args.output_root.empty()
          ? fedlogit::resolve_output_root(base, args.output_root)
          : args.output_root;
  const std::string dir = fedlogit::run_preset(name, std::move(base), root, args.quiet);
  std::printf("preset '%s' artifacts: %s\n", name.c_str(), dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedlogit — federated logistic regression simulator"};
  app.require_subcommand(1);

  CommonArgs run_args;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a cross-validated experiment");
  add_common(run_cmd, run_args);

  CommonArgs verify_args;
  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "Run an experiment twice and compare result bytes");
  add_common(verify_cmd, verify_args);

  CommonArgs preset_args;
  std::string preset_name;
  CLI::App* preset_cmd =
      app.add_subcommand("preset", "Run a bundled experiment family");
  preset_cmd->add_option("name", preset_name, "Preset name")->required();
  add_common(preset_cmd, preset_args);

  fedlogit::SyntheticCohortSpec gen_spec;
  std::string gen_out;
  std::string gen_summary;
  CLI::App* gen_cmd =
      app.add_subcommand("generate", "Write a synthetic cohort to CSV");
  gen_cmd->add_option("--out", gen_out, "Output CSV path")->required();
  gen_cmd->add_option("--summary", gen_summary, "Also write a cohort summary JSON");
  gen_cmd->add_option("--seed", gen_spec.seed, "Generator seed");
  gen_cmd->add_option("--sites", gen_spec.site_count, "Site count");
  gen_cmd->add_option("--dimension", gen_spec.dimension, "Feature dimension");
  gen_cmd->add_option("--size-min", gen_spec.min_site_size, "Smallest site size");
  gen_cmd->add_option("--size-max", gen_spec.max_site_size, "Largest site size");
  gen_cmd->add_option("--size-shape", gen_spec.size_shape, "Site size tail index");
  gen_cmd->add_option("--rate-min", gen_spec.positive_rate_min, "Lowest positive rate");
  gen_cmd->add_option("--rate-max", gen_spec.positive_rate_max, "Highest positive rate");
  gen_cmd->add_option("--separation", gen_spec.class_separation,
                      "Distance between class means");
  gen_cmd->add_option("--shift", gen_spec.site_shift_scale,
                      "Per-site mean shift scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) return command_run(run_args);
    if (verify_cmd->parsed()) return command_verify(verify_args);
    if (preset_cmd->parsed()) return command_preset(preset_name, preset_args);
    if (gen_cmd->parsed()) {
      const fedlogit::Cohort cohort = fedlogit::generate_synthetic(gen_spec);
      fedlogit::emit_csv(cohort, gen_out,
                         fedlogit::default_schema(cohort.dimension()));
      if (!gen_summary.empty()) {
        std::ofstream out(gen_summary);
        if (!out) throw fedlogit::IoError("cannot open '" + gen_summary + "'");
        out << cohort.summary_json() << "\n";
      } else {
        std::printf("%s\n", cohort.summary_json().c_str());
      }
      std::printf("cohort csv: %s\n", gen_out.c_str());
      return 0;
    }
  } catch (const fedlogit::DivergenceError& e) {
    std::fprintf(stderr, "error (divergence): %s\n", e.what());
    return 3;
  } catch (const fedlogit::IoError& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return 2;
  } catch (const fedlogit::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
