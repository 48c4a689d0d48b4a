// Cohort data model: participants grouped into sites, CSV ingest/emit,
// small-site merging, and the synthetic cohort generator.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedlogit/errors.hpp"

namespace fedlogit {

// One labeled observation. `label` is 0 (negative class) or 1 (positive class).
struct Participant {
  std::string id;
  std::vector<double> features;
  int label = 0;
};

// All participants held by a single site. Construction validates shape:
// at least one participant, equal feature dimension, finite features,
// labels in {0, 1}, and unique participant ids within the site.
class SiteDataset {
 public:
  SiteDataset(std::string site_id, std::vector<Participant> participants);

  const std::string& site_id() const { return site_id_; }
  const std::vector<Participant>& participants() const { return participants_; }
  std::size_t size() const { return participants_.size(); }
  std::size_t dimension() const { return dimension_; }
  std::size_t positives() const { return positives_; }

 private:
  std::string site_id_;
  std::vector<Participant> participants_;
  std::size_t dimension_ = 0;
  std::size_t positives_ = 0;
};

// An ordered collection of sites with a common feature dimension.
// Construction validates: at least one site, unique site ids, unique
// participant ids across the whole cohort, equal dimension everywhere.
class Cohort {
 public:
  explicit Cohort(std::vector<SiteDataset> sites);

  const std::vector<SiteDataset>& sites() const { return sites_; }
  std::size_t site_count() const { return sites_.size(); }
  std::size_t dimension() const { return dimension_; }
  std::size_t total_size() const { return total_size_; }
  std::size_t total_positives() const { return total_positives_; }

  std::vector<std::string> site_ids() const;
  bool has_site(const std::string& site_id) const;
  // Throws LookupError if absent.
  const SiteDataset& site(const std::string& site_id) const;

  // All participants concatenated in site order, as one site named `pooled_id`.
  SiteDataset pooled(const std::string& pooled_id = "pooled") const;

  // One-line-per-site JSON-ready summary (site_id, n, positives) plus totals.
  std::string summary_json() const;

 private:
  std::vector<SiteDataset> sites_;
  std::size_t dimension_ = 0;
  std::size_t total_size_ = 0;
  std::size_t total_positives_ = 0;
};

// Column names used by CSV ingest/emit.
struct CsvSchema {
  std::string id_column = "participant_id";
  std::string site_column = "site_id";
  std::string label_column = "label";
  std::vector<std::string> feature_columns;  // order defines feature order
};

// Schema with feature columns f1..fd.
CsvSchema default_schema(std::size_t dimension);

// Reads a cohort from CSV. Rows are grouped into sites by order of first
// appearance of each site id; row order within a site is file order.
// Throws IoError (unreadable file), SchemaError (missing columns),
// ParseError (bad cell, with 1-based physical line number), IntegrityError
// (duplicate participant id).
Cohort ingest_csv(const std::string& path, const CsvSchema& schema);

// Writes a cohort to CSV with shortest round-trip float formatting, so that
// ingest_csv(emit_csv(c)) reproduces c exactly. Throws IoError.
void emit_csv(const Cohort& cohort, const std::string& path,
              const CsvSchema& schema);

struct MergeResult {
  Cohort cohort;
  // True when the last merged pool still ended below min_size because the
  // small-site pool ran out (the residual pool is kept anyway).
  bool residual_below_min = false;
  // site ids of the pools created by the merge, in order of creation.
  std::vector<std::string> merged_site_ids;
};

// Pools sites smaller than `min_size` into synthetic sites ("merged-0", ...).
// Small sites are pooled in ascending site-id order; a pool is sealed once it
// reaches min_size. Surviving sites keep their original order; pools are
// appended at the end. min_size == 0 returns the cohort unchanged.
MergeResult merge_small_sites(const Cohort& cohort, std::size_t min_size);

// Parameters of the synthetic cohort generator.
struct SyntheticCohortSpec {
  std::uint64_t seed = 0;
  std::size_t site_count = 28;
  std::size_t dimension = 15;
  std::size_t min_site_size = 10;     // also the Pareto scale parameter
  std::size_t max_site_size = 60;     // truncation point
  double size_shape = 1.1;            // Pareto tail index (> 0)
  double positive_rate_min = 0.1;     // per-site rate drawn Uniform(min, max)
  double positive_rate_max = 0.7;
  double class_separation = 2.0;      // distance between class means
  double site_shift_scale = 0.0;      // stddev of per-site mean shift
};

// Draws a cohort: per-site sizes from a truncated Pareto law, per-site
// positive rates Uniform(rate_min, rate_max) with the positive count rounded
// to the nearest integer, features N(shift_k + (±separation/2)·u, I) where u
// is a fixed unit direction shared by all sites. Equal seeds give identical
// cohorts. Throws ConfigError (bad parameters) or GenerationError (cohort
// cannot contain both classes).
Cohort generate_synthetic(const SyntheticCohortSpec& spec);

}  // namespace fedlogit
