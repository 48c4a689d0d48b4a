// Experiment configuration: flat key=value files, CLI overrides, canonical
// echo and hashing. The echo covers every field that affects results;
// execution details (threads, output_dir) are deliberately excluded so the
// same experiment keeps the same hash regardless of how it is executed.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedlogit/cohort.hpp"
#include "fedlogit/eval.hpp"
#include "fedlogit/model.hpp"
#include "fedlogit/normalize.hpp"
#include "fedlogit/topology.hpp"
#include "fedlogit/trainers.hpp"

namespace fedlogit {

struct ExperimentConfig {
  std::string label = "run";
  std::string source;  // "synthetic" or "csv"; must be chosen explicitly

  // CSV source.
  std::string csv_path;
  std::string csv_id_column = "participant_id";
  std::string csv_site_column = "site_id";
  std::string csv_label_column = "label";
  std::vector<std::string> csv_feature_names;  // explicit names, or
  std::size_t csv_feature_count = 0;           // count expanded to f1..fd

  // Synthetic source. When synthetic.seed is not set explicitly it is
  // derived from the master seed.
  SyntheticCohortSpec synthetic;
  bool synthetic_seed_set = false;

  std::size_t merge_min_size = 0;  // 0 disables small-site merging

  std::vector<TrainerKind> kinds = {TrainerKind::Centralized,
                                    TrainerKind::SiteSpecific, TrainerKind::FedAvg,
                                    TrainerKind::FedGd};

  TopologySpec topology;  // defaults to RandomRegular degree 3
  bool topology_seed_set = false;
  std::string topology_edges_path;  // required when kind == ExplicitEdges

  SolverConfig solver;
  std::size_t fold_count = 10;
  std::uint64_t seed = 0;
  double cutoff = 0.5;
  std::optional<NormalizationMode> normalization_override;

  // Execution details (not part of the canonical echo / hash).
  std::string output_dir = "out";
  std::size_t threads = 1;
};

// One "key=value" override, e.g. from a CLI flag.
using ConfigOverride = std::pair<std::string, std::string>;

// Applies key=value lines ('#' comments, blank lines ignored) on top of the
// defaults, then the overrides in order, then finalizes (derives seeds, loads
// an explicit edge list, validates ranges). Unknown keys raise ConfigError
// listing the valid keys; bad values raise ConfigError naming the key and
// the expected form.
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<ConfigOverride>& overrides = {});
ExperimentConfig parse_config_file(const std::string& path,
                                   const std::vector<ConfigOverride>& overrides = {});

// Applies keys without finalizing — for callers that fill in defaults (the
// presets) before validation.
ExperimentConfig parse_config_raw(const std::string& text,
                                  const std::vector<ConfigOverride>& overrides = {});
ExperimentConfig parse_config_file_raw(const std::string& path,
                                       const std::vector<ConfigOverride>& overrides = {});

// Re-validates an assembled config (used after programmatic edits).
void finalize_config(ExperimentConfig& config);

// Sorted "key = value" lines describing the effective experiment.
std::string canonical_echo(const ExperimentConfig& config);
// FNV-1a over the canonical echo.
std::uint64_t config_hash(const ExperimentConfig& config);

NormalizationMode parse_normalization_mode(const std::string& name);
TopologyKind parse_topology_kind(const std::string& name);

// The fixed synthetic cohort used by the bundled presets when no data source
// is configured: 28 sites, long-tailed sizes, strong class structure, mild
// per-site distribution shift.
SyntheticCohortSpec reference_cohort_spec();

CsvSchema csv_schema_of(const ExperimentConfig& config);

}  // namespace fedlogit
