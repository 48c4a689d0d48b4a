#include "fedlogit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fedlogit/rng.hpp"

namespace fedlogit {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : value) {
    if (c == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  items.push_back(trim(cur));
  items.erase(std::remove(items.begin(), items.end(), ""), items.end());
  return items;
}

double parse_double_value(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || value.empty())
    throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
  return v;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || value.empty())
    throw ConfigError("key '" + key + "' expects a non-negative integer, got '" +
                      value + "'");
  return v;
}

std::size_t parse_size_value(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64_value(key, value));
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"label",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         if (v.empty()) throw ConfigError("label must be non-empty");
         c.label = v;
       }},
      {"source",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v != "synthetic" && v != "csv")
           throw ConfigError("key '" + k + "' must be 'synthetic' or 'csv', got '" +
                             v + "'");
         c.source = v;
       }},
      {"csv.path",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.csv_path = v;
       }},
      {"csv.id_column",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.csv_id_column = v;
       }},
      {"csv.site_column",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.csv_site_column = v;
       }},
      {"csv.label_column",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.csv_label_column = v;
       }},
      {"csv.features",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         // Either a column count or a comma-separated list of column names.
         if (!v.empty() && v.find(',') == std::string::npos &&
             std::all_of(v.begin(), v.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
           c.csv_feature_count = parse_size_value(k, v);
           c.csv_feature_names.clear();
         } else {
           c.csv_feature_names = split_list(v);
           c.csv_feature_count = 0;
           if (c.csv_feature_names.empty())
             throw ConfigError("key '" + k + "' expects a count or column names");
         }
       }},
      {"synthetic.seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.seed = parse_u64_value(k, v);
         c.synthetic_seed_set = true;
       }},
      {"synthetic.sites",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.site_count = parse_size_value(k, v);
       }},
      {"synthetic.dimension",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.dimension = parse_size_value(k, v);
       }},
      {"synthetic.size_min",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.min_site_size = parse_size_value(k, v);
       }},
      {"synthetic.size_max",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.max_site_size = parse_size_value(k, v);
       }},
      {"synthetic.size_shape",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.size_shape = parse_double_value(k, v);
       }},
      {"synthetic.rate_min",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.positive_rate_min = parse_double_value(k, v);
       }},
      {"synthetic.rate_max",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.positive_rate_max = parse_double_value(k, v);
       }},
      {"synthetic.separation",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.class_separation = parse_double_value(k, v);
       }},
      {"synthetic.shift",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.site_shift_scale = parse_double_value(k, v);
       }},
      {"merge_min_size",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.merge_min_size = parse_size_value(k, v);
       }},
      {"kinds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const std::vector<std::string> names = split_list(v);
         if (names.empty()) throw ConfigError("key '" + k + "' expects trainer names");
         c.kinds.clear();
         for (const std::string& name : names) c.kinds.push_back(parse_trainer_kind(name));
       }},
      {"topology",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.topology.kind = parse_topology_kind(v);
       }},
      {"topology.degree",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.topology.degree = parse_size_value(k, v);
       }},
      {"topology.seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.topology.seed = parse_u64_value(k, v);
         c.topology_seed_set = true;
       }},
      {"topology.edges",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.topology_edges_path = v;
       }},
      {"learning_rate",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.solver.learning_rate = parse_double_value(k, v);
       }},
      {"local_iterations",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.solver.local_iterations = parse_size_value(k, v);
       }},
      {"global_iterations",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.solver.global_iterations = parse_size_value(k, v);
       }},
      {"eta",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.solver.proximal_eta = parse_double_value(k, v);
       }},
      {"alpha",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.solver.coupling_alpha = parse_double_value(k, v);
       }},
      {"folds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.fold_count = parse_size_value(k, v);
       }},
      {"seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_u64_value(k, v);
       }},
      {"cutoff",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.cutoff = parse_double_value(k, v);
       }},
      {"normalization",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         if (v.empty() || v == "default") {
           c.normalization_override.reset();
         } else {
           c.normalization_override = parse_normalization_mode(v);
         }
       }},
      {"output_dir",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.output_dir = v;
       }},
      {"threads",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.threads = parse_size_value(k, v);
       }},
  };
  return table;
}

std::string valid_keys_message() {
  std::string msg;
  for (const auto& [key, setter] : setters()) {
    (void)setter;
    if (!msg.empty()) msg += ", ";
    msg += key;
  }
  return msg;
}

void apply_key(ExperimentConfig& config, const std::string& key,
               const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end())
    throw ConfigError("unknown key '" + key + "'; valid keys: " + valid_keys_message());
  it->second(config, key, value);
}

}  // namespace

NormalizationMode parse_normalization_mode(const std::string& name) {
  if (name == "per-site") return NormalizationMode::PerSite;
  if (name == "centralized-global") return NormalizationMode::CentralizedGlobal;
  if (name == "federated-simple") return NormalizationMode::FederatedSimple;
  if (name == "federated-decomposed") return NormalizationMode::FederatedDecomposed;
  if (name == "neighborhood") return NormalizationMode::Neighborhood;
  throw ConfigError("unknown normalization mode '" + name +
                    "'; expected per-site, centralized-global, federated-simple, "
                    "federated-decomposed, or neighborhood");
}

TopologyKind parse_topology_kind(const std::string& name) {
  if (name == "star") return TopologyKind::Star;
  if (name == "ring") return TopologyKind::Ring;
  if (name == "random-regular") return TopologyKind::RandomRegular;
  if (name == "complete") return TopologyKind::Complete;
  if (name == "explicit") return TopologyKind::ExplicitEdges;
  throw ConfigError("unknown topology '" + name +
                    "'; expected star, ring, random-regular, complete, or explicit");
}

void finalize_config(ExperimentConfig& config) {
  if (config.source != "synthetic" && config.source != "csv")
    throw ConfigError(
        "no data source configured: a synthetic source must be requested "
        "explicitly (source = synthetic) or a csv provided (source = csv)");
  if (config.source == "csv") {
    if (config.csv_path.empty())
      throw ConfigError("csv.path is required when source = csv");
    if (config.csv_feature_names.empty() && config.csv_feature_count == 0)
      throw ConfigError("csv.features must name the feature columns (or give a count)");
  } else {
    if (!config.synthetic_seed_set) {
      config.synthetic.seed = derive_seed(config.seed, "synthetic");
      config.synthetic_seed_set = true;
    }
  }
  if (!config.topology_seed_set) {
    config.topology.seed = derive_seed(config.seed, "topology");
    config.topology_seed_set = true;
  }
  if (config.topology.kind == TopologyKind::ExplicitEdges) {
    if (config.topology_edges_path.empty())
      throw ConfigError("topology.edges is required when topology = explicit");
    std::ifstream in(config.topology_edges_path);
    if (!in)
      throw IoError("cannot open edge list '" + config.topology_edges_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    config.topology.edges = parse_edge_list(buffer.str());
  }
  if (config.kinds.empty()) throw ConfigError("kinds must list at least one trainer");
  for (std::size_t i = 0; i < config.kinds.size(); ++i)
    for (std::size_t j = i + 1; j < config.kinds.size(); ++j)
      if (config.kinds[i] == config.kinds[j])
        throw ConfigError(std::string("trainer '") +
                          trainer_kind_name(config.kinds[i]) + "' listed twice");
  if (config.fold_count < 2) throw ConfigError("folds must be >= 2");
  if (!(config.cutoff >= 0.0) || !(config.cutoff <= 1.0))
    throw ConfigError("cutoff must lie in [0, 1], got " + format_number(config.cutoff));
  if (config.threads < 1) throw ConfigError("threads must be >= 1");
  config.solver.validate();
}

ExperimentConfig parse_config_raw(const std::string& text,
                                  const std::vector<ConfigOverride>& overrides) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      apply_key(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& [key, value] : overrides) apply_key(config, key, value);
  return config;
}

ExperimentConfig parse_config(const std::string& text,
                              const std::vector<ConfigOverride>& overrides) {
  ExperimentConfig config = parse_config_raw(text, overrides);
  finalize_config(config);
  return config;
}

ExperimentConfig parse_config_file_raw(const std::string& path,
                                       const std::vector<ConfigOverride>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_raw(buffer.str(), overrides);
}

ExperimentConfig parse_config_file(const std::string& path,
                                   const std::vector<ConfigOverride>& overrides) {
  ExperimentConfig config = parse_config_file_raw(path, overrides);
  finalize_config(config);
  return config;
}

std::string canonical_echo(const ExperimentConfig& config) {
  std::map<std::string, std::string> kv;
  kv["label"] = config.label;
  kv["source"] = config.source;
  if (config.source == "csv") {
    kv["csv.path"] = config.csv_path;
    kv["csv.id_column"] = config.csv_id_column;
    kv["csv.site_column"] = config.csv_site_column;
    kv["csv.label_column"] = config.csv_label_column;
    if (!config.csv_feature_names.empty()) {
      std::string joined;
      for (const std::string& name : config.csv_feature_names) {
        if (!joined.empty()) joined += ",";
        joined += name;
      }
      kv["csv.features"] = joined;
    } else {
      kv["csv.features"] = std::to_string(config.csv_feature_count);
    }
  } else {
    kv["synthetic.seed"] = std::to_string(config.synthetic.seed);
    kv["synthetic.sites"] = std::to_string(config.synthetic.site_count);
    kv["synthetic.dimension"] = std::to_string(config.synthetic.dimension);
    kv["synthetic.size_min"] = std::to_string(config.synthetic.min_site_size);
    kv["synthetic.size_max"] = std::to_string(config.synthetic.max_site_size);
    kv["synthetic.size_shape"] = format_number(config.synthetic.size_shape);
    kv["synthetic.rate_min"] = format_number(config.synthetic.positive_rate_min);
    kv["synthetic.rate_max"] = format_number(config.synthetic.positive_rate_max);
    kv["synthetic.separation"] = format_number(config.synthetic.class_separation);
    kv["synthetic.shift"] = format_number(config.synthetic.site_shift_scale);
  }
  kv["merge_min_size"] = std::to_string(config.merge_min_size);
  {
    std::string joined;
    for (TrainerKind k : config.kinds) {
      if (!joined.empty()) joined += ",";
      joined += trainer_kind_name(k);
    }
    kv["kinds"] = joined;
  }
  kv["topology"] = topology_kind_name(config.topology.kind);
  if (config.topology.kind == TopologyKind::RandomRegular) {
    kv["topology.degree"] = std::to_string(config.topology.degree);
    kv["topology.seed"] = std::to_string(config.topology.seed);
  }
  if (config.topology.kind == TopologyKind::ExplicitEdges)
    kv["topology.edges"] = config.topology_edges_path;
  kv["learning_rate"] = format_number(config.solver.learning_rate);
  kv["local_iterations"] = std::to_string(config.solver.local_iterations);
  kv["global_iterations"] = std::to_string(config.solver.global_iterations);
  kv["eta"] = format_number(config.solver.proximal_eta);
  kv["alpha"] = format_number(config.solver.coupling_alpha);
  kv["folds"] = std::to_string(config.fold_count);
  kv["seed"] = std::to_string(config.seed);
  kv["cutoff"] = format_number(config.cutoff);
  kv["normalization"] = config.normalization_override
                            ? normalization_mode_name(*config.normalization_override)
                            : "default";
  std::string echo;
  for (const auto& [key, value] : kv) echo += key + " = " + value + "\n";
  return echo;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a64(canonical_echo(config));
}

SyntheticCohortSpec reference_cohort_spec() {
  SyntheticCohortSpec spec;
  spec.seed = 1077;
  spec.site_count = 28;
  spec.dimension = 10;
  spec.min_site_size = 160;
  spec.max_site_size = 400;
  spec.size_shape = 1.1;
  spec.positive_rate_min = 0.35;
  spec.positive_rate_max = 0.45;
  // Tuned so the pooled 10-fold AUC lands mid-band (~0.89) and the federated
  // runs settle below the 1e-2 disagreement target at default settings.
  spec.class_separation = 1.8;
  spec.site_shift_scale = 0.05;
  return spec;
}

CsvSchema csv_schema_of(const ExperimentConfig& config) {
  CsvSchema schema = config.csv_feature_names.empty()
                         ? default_schema(config.csv_feature_count)
                         : CsvSchema{};
  if (!config.csv_feature_names.empty())
    schema.feature_columns = config.csv_feature_names;
  schema.id_column = config.csv_id_column;
  schema.site_column = config.csv_site_column;
  schema.label_column = config.csv_label_column;
  return schema;
}

}  // namespace fedlogit
