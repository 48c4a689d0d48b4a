// Orchestration used by the CLI: cohort loading, experiment execution,
// artifact emission, the determinism self-check, and the bundled presets.
#pragma once

#include <string>
#include <vector>

#include "fedlogit/config.hpp"
#include "fedlogit/eval.hpp"

namespace fedlogit {

// Generates or ingests the cohort per config and applies small-site merging.
// Prep warnings (residual pool, merged site ids) are appended to `warnings`.
Cohort load_cohort(const ExperimentConfig& config, std::vector<std::string>* warnings);

// Runs the configured experiment end to end (cohort prep + cross-validated
// training). `quiet` suppresses progress output on stderr.
ExperimentResult execute_experiment(const ExperimentConfig& config, bool quiet);

// Writes result.json, result.csv, timings.json, config.txt, cohort.json,
// graph files, and per-kind site TSVs under <output_root>/<label>/.
// Returns the directory written.
std::string write_artifacts(const ExperimentConfig& config,
                            const ExperimentResult& result, const Cohort& cohort,
                            const std::string& output_root);

// Resolution order: explicit flag, then FEDLOGIT_OUTPUT_ROOT, then the
// config's output_dir.
std::string resolve_output_root(const ExperimentConfig& config,
                                const std::string& flag_value);

// Runs the experiment twice (second pass with a different worker count) and
// compares result JSON byte-for-byte. Returns true when identical.
bool verify_determinism(const ExperimentConfig& config, bool quiet,
                        std::string* detail);

// Bundled experiment families over the reference cohort (or the configured
// source): "baselines", "alpha-sweep", "eta-sweep", "sitewise",
// "normalization", "degree-sweep". Each point writes its own artifact
// directory plus a family-level sweep.tsv. Returns the family directory.
std::string run_preset(const std::string& name, ExperimentConfig base,
                       const std::string& output_root, bool quiet);

std::vector<std::string> preset_names();

}  // namespace fedlogit
